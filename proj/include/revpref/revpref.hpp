// Convenience header pulling in the whole library.
#pragma once

#include <revpref/common.hpp>
#include <revpref/equilibrium.hpp>
#include <revpref/experiment.hpp>
#include <revpref/feasibility.hpp>
#include <revpref/io.hpp>
#include <revpref/prefs.hpp>
#include <revpref/revealed.hpp>
#include <revpref/sequences.hpp>
