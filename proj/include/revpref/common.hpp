// Shared vocabulary: vector aliases, pinned tolerances, error types and the
// tolerance-aware scalar/vector comparisons every other header builds on.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace revpref {

using Vec = Eigen::VectorXd;
using Bundle = Vec;       // consumption bundle, componentwise >= 0
using PriceVector = Vec;  // componentwise > 0

// Pinned tolerances. Utility comparisons get a relative indifference band;
// strict inequalities must clear a relative margin before they count.
inline constexpr double kTolIndiff = 1e-9;
inline constexpr double kTolStrict = 1e-9;
// Budget-identity slack for stored observations.
inline constexpr double kBudgetTolDemand = 1e-10;
inline constexpr double kBudgetTolEconomy = 1e-9;
// Loader / checker slack for externally supplied datasets.
inline constexpr double kBudgetTolInput = 1e-8;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveBundle : Error { using Error::Error; };
struct InvalidBox : Error { using Error::Error; };
struct MalformedDataset : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct IndifferentQuery : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct UnsupportedDimensions : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// a < b, accepted only with a relative margin so float noise cannot
// manufacture strictness.
inline bool strict_lt(double a, double b, double tol = kTolStrict) {
  return b - a > tol * std::max(1.0, std::abs(b));
}

// a <= b up to the same margin (negation of strict_lt(b, a)).
inline bool weak_le(double a, double b, double tol = kTolStrict) {
  return !strict_lt(b, a, tol);
}

// Componentwise comparisons are exact: they are used in soundness-critical
// dominance tests where admitting noise would create false positives.
inline bool leq(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

inline bool same_bundle(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// a >= b with a != b: enough for strictly monotone preferences to rank a
// above b.
inline bool dominates(const Vec& a, const Vec& b) {
  return leq(b, a) && !same_bundle(a, b);
}

inline bool all_positive(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0)) return false;
  return true;
}

inline bool all_nonnegative(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] < 0.0) return false;
  return true;
}

}  // namespace revpref
