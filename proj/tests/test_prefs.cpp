#include <catch2/catch_amalgamated.hpp>
#include <revpref/revpref.hpp>

#include <cmath>
#include <random>

using namespace revpref;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

}  // namespace

TEST_CASE("spec construction validates its parameters", "[prefs]") {
    REQUIRE_NOTHROW(PreferenceSpec::cobb_douglas(v2(0.3, 0.7)));
    REQUIRE_NOTHROW(PreferenceSpec::ces(v2(0.5, 0.5), 0.5));
    REQUIRE_NOTHROW(PreferenceSpec::ces(v2(0.5, 0.5), -3.0));

    // shares must be positive and sum to one
    REQUIRE_THROWS_AS(PreferenceSpec::cobb_douglas(v2(0.3, 0.6)), std::invalid_argument);
    REQUIRE_THROWS_AS(PreferenceSpec::cobb_douglas(v2(-0.2, 1.2)), std::invalid_argument);
    REQUIRE_THROWS_AS(PreferenceSpec::cobb_douglas(Vec::Ones(1)), std::invalid_argument);

    // CES curvature: rho < 1 and nonzero
    REQUIRE_THROWS_AS(PreferenceSpec::ces(v2(0.5, 0.5), 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(PreferenceSpec::ces(v2(0.5, 0.5), 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(PreferenceSpec::ces(v2(0.5, 0.5), 1.5), std::invalid_argument);
}

TEST_CASE("utility matches hand-computed values", "[prefs]") {
    auto cd = PreferenceSpec::cobb_douglas(v2(0.3, 0.7));
    // 2^0.3 * 1^0.7
    REQUIRE_THAT(utility(cd, v2(2.0, 1.0)), WithinAbs(1.2311444133449163, 1e-14));
    REQUIRE_THAT(utility(cd, v2(1.0, 1.0)), WithinAbs(1.0, 1e-14));

    auto ces = PreferenceSpec::ces(v2(0.5, 0.5), 0.5);
    // (0.5*1 + 0.5*2)^2 = 2.25
    REQUIRE_THAT(utility(ces, v2(1.0, 4.0)), WithinAbs(2.25, 1e-12));
}

TEST_CASE("utility guards its domain", "[prefs]") {
    auto cd = PreferenceSpec::cobb_douglas(v2(0.3, 0.7));
    REQUIRE_THROWS_AS(utility(cd, v3(1, 1, 1)), DimensionMismatch);
    REQUIRE_THROWS_AS(utility(cd, v2(1.0, 0.0)), NonPositiveBundle);
    REQUIRE_THROWS_AS(utility(cd, v2(-1.0, 2.0)), NonPositiveBundle);
}

TEST_CASE("utility is homogeneous of degree one", "[prefs]") {
    auto cd = PreferenceSpec::cobb_douglas(v3(0.2, 0.3, 0.5));
    auto ces = PreferenceSpec::ces(v2(0.3, 0.7), -1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int i = 0; i < 50; ++i) {
        Vec x3 = v3(u(rng), u(rng), u(rng));
        double t = u(rng);
        REQUIRE_THAT(utility(cd, Vec(t * x3)), WithinRel(t * utility(cd, x3), 1e-12));
        Vec x2 = v2(u(rng), u(rng));
        REQUIRE_THAT(utility(ces, Vec(t * x2)), WithinRel(t * utility(ces, x2), 1e-12));
    }
}

TEST_CASE("demand matches hand-computed values", "[prefs]") {
    auto cd = PreferenceSpec::cobb_douglas(v2(0.3, 0.7));
    Vec d = demand(cd, v2(1.0, 1.0), 2.0);
    REQUIRE_THAT(d[0], WithinAbs(0.6, 1e-14));
    REQUIRE_THAT(d[1], WithinAbs(1.4, 1e-14));

    d = demand(cd, v2(2.0, 0.5), 1.0);
    REQUIRE_THAT(d[0], WithinAbs(0.15, 1e-14));
    REQUIRE_THAT(d[1], WithinAbs(1.4, 1e-14));

    // CES with sigma = 1/(1-rho) = 2: x_l proportional to (alpha_l/p_l)^2
    auto ces = PreferenceSpec::ces(v2(0.5, 0.5), 0.5);
    d = demand(ces, v2(1.0, 4.0), 1.0);
    REQUIRE_THAT(d[0], WithinAbs(0.8, 1e-12));
    REQUIRE_THAT(d[1], WithinAbs(0.05, 1e-12));
}

TEST_CASE("demand guards its domain", "[prefs]") {
    auto cd = PreferenceSpec::cobb_douglas(v2(0.3, 0.7));
    REQUIRE_THROWS_AS(demand(cd, v3(1, 1, 1), 1.0), DimensionMismatch);
    REQUIRE_THROWS_AS(demand(cd, v2(1.0, 0.0), 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(demand(cd, v2(-1.0, 1.0), 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(demand(cd, v2(1.0, 1.0), 0.0), std::invalid_argument);
}

TEST_CASE("demand exhausts the budget", "[prefs]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> up(0.2, 3.0);
    std::uniform_real_distribution<double> uw(0.5, 4.0);
    auto cd = PreferenceSpec::cobb_douglas(v3(0.2, 0.3, 0.5));
    auto ces = PreferenceSpec::ces(v2(0.3, 0.7), -1.0);
    for (int i = 0; i < 200; ++i) {
        Vec p3 = v3(up(rng), up(rng), up(rng));
        double w = uw(rng);
        REQUIRE_THAT(p3.dot(demand(cd, p3, w)), WithinRel(w, 1e-12));
        Vec p2 = v2(up(rng), up(rng));
        REQUIRE_THAT(p2.dot(demand(ces, p2, w)), WithinRel(w, 1e-12));
    }
}

TEST_CASE("demand maximises utility on the budget line", "[prefs]") {
    auto specs = {PreferenceSpec::cobb_douglas(v2(0.3, 0.7)),
                  PreferenceSpec::ces(v2(0.4, 0.6), 0.5),
                  PreferenceSpec::ces(v2(0.5, 0.5), -2.0)};
    Vec p = v2(1.3, 0.7);
    double w = 2.0;
    for (const auto& spec : specs) {
        Vec d = demand(spec, p, w);
        double best = utility(spec, d);
        for (int t = 1; t < 50; ++t) {
            double x0 = (t / 50.0) * (w / p[0]);
            Vec cand = v2(x0, (w - p[0] * x0) / p[1]);
            REQUIRE(utility(spec, cand) <= best * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("pairwise comparison is a strict trichotomy with an indifference band", "[prefs]") {
    auto cd = PreferenceSpec::cobb_douglas(v2(0.5, 0.5));
    // u(1,4) = u(2,2) = 2 exactly
    REQUIRE(prefers(cd, v2(1.0, 4.0), v2(2.0, 2.0)) == PrefOrdering::Indifferent);
    REQUIRE(prefers(cd, v2(2.01, 2.0), v2(1.0, 4.0)) == PrefOrdering::StrictlyPreferred);
    REQUIRE(prefers(cd, v2(1.0, 4.0), v2(2.01, 2.0)) == PrefOrdering::StrictlyDispreferred);
    // tiny perturbations stay inside the band
    REQUIRE(prefers(cd, v2(1.0 + 1e-13, 4.0), v2(2.0, 2.0)) == PrefOrdering::Indifferent);
}
