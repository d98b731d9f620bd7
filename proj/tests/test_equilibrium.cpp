#include <catch2/catch_amalgamated.hpp>
#include <revpref/revpref.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace revpref;
using Catch::Matchers::WithinAbs;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Economy symmetric_economy(std::vector<std::pair<double, double>> income_box = {}) {
    return Economy::make({PreferenceSpec::cobb_douglas(v2(0.5, 0.5)),
                          PreferenceSpec::cobb_douglas(v2(0.5, 0.5))},
                         {v2(1.0, 0.0), v2(0.0, 1.0)}, std::move(income_box));
}

// two observations whose consistent splits are genuinely constrained: the
// second budget line cuts through the first allocation's possibilities
std::vector<EconomyObservation> crossing_data() {
    return {
        EconomyObservation{1, v2(1.0, 1.0), v2(1.0, 1.0), v2(0.6, 1.4)},
        EconomyObservation{2, v2(1.0, 0.5), v2(0.9, 0.5), v2(0.9, 1.0)},
    };
}

// hull of the first coordinate over boxes still in play
std::pair<double, double> good0_hull(const Region& r) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& rb : r.boxes) {
        if (rb.status == BoxStatus::Dominated) continue;
        lo = std::min(lo, rb.box.lo[0]);
        hi = std::max(hi, rb.box.hi[0]);
    }
    return {lo, hi};
}

std::vector<EconomyObservation> eqset_economy_data(int n) {
    auto eco = symmetric_economy({{0.5, 2.5}, {0.03, 0.1}});
    SequenceConfig cfg;
    cfg.seed = 7;
    cfg.generator = Generator::Halton;
    cfg.price_box = {{0.2, 2.0}, {0.2, 2.0}};
    return gen_economy_dataset(eco, cfg, n);
}

}  // namespace

TEST_CASE("economies are validated on construction", "[equilibrium]") {
    auto cd = PreferenceSpec::cobb_douglas(v2(0.5, 0.5));
    Vec a3(3);
    a3 << 0.2, 0.3, 0.5;

    REQUIRE_THROWS_AS(Economy::make({cd}, {v2(1.0, 0.0)}), ConfigError);
    REQUIRE_THROWS_AS(Economy::make({cd, cd}, {v2(1.0, 0.0)}), ConfigError);
    REQUIRE_THROWS_AS(Economy::make({cd, PreferenceSpec::cobb_douglas(a3)},
                                    {v2(1.0, 0.0), v2(0.0, 1.0)}),
                      DimensionMismatch);
    REQUIRE_THROWS_AS(Economy::make({cd, cd}, {v2(1.0, 0.0), Vec::Ones(3)}),
                      DimensionMismatch);
    REQUIRE_THROWS_AS(Economy::make({cd, cd}, {v2(1.0, 0.0), v2(0.0, 0.0)}),
                      ConfigError);
    REQUIRE_THROWS_AS(Economy::make({cd, cd}, {v2(-1.0, 1.0), v2(1.0, 1.0)}),
                      ConfigError);
    // a good nobody is endowed with cannot clear
    REQUIRE_THROWS_AS(Economy::make({cd, cd}, {v2(1.0, 0.0), v2(2.0, 0.0)}),
                      ConfigError);
    REQUIRE_THROWS_AS(Economy::make({cd, cd}, {v2(1.0, 0.0), v2(0.0, 1.0)},
                                    {{0.5, 2.0}}),
                      ConfigError);
    REQUIRE_THROWS_AS(Economy::make({cd, cd}, {v2(1.0, 0.0), v2(0.0, 1.0)},
                                    {{0.0, 2.0}, {0.5, 2.0}}),
                      InvalidBox);

    auto eco = symmetric_economy();
    REQUIRE(eco.income_box ==
            std::vector<std::pair<double, double>>{{0.5, 2.0}, {0.5, 2.0}});
    REQUIRE(eco.num_inds() == 2);
    REQUIRE(eco.num_goods() == 2);
    REQUIRE((eco.total_endowment() - v2(1.0, 1.0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("aggregate and excess demand do the bookkeeping", "[equilibrium]") {
    auto eco = symmetric_economy();
    Vec agg = aggregate_demand(eco, v2(1.0, 2.0), v2(1.0, 2.0));
    REQUIRE_THAT(agg[0], WithinAbs(1.5, 1e-12));
    REQUIRE_THAT(agg[1], WithinAbs(0.75, 1e-12));
    REQUIRE_THROWS_AS(aggregate_demand(eco, v2(1.0, 2.0), Vec::Ones(3)),
                      DimensionMismatch);

    REQUIRE(excess_demand(eco, v2(0.5, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int i = 0; i < 100; ++i) {
        Vec p = v2(u(rng), u(rng));
        Vec z = excess_demand(eco, p);
        REQUIRE(std::abs(p.dot(z)) <= 1e-9);  // budgets add up exactly
        Vec z2 = excess_demand(eco, Vec(2.0 * p));
        REQUIRE((z - z2).cwiseAbs().maxCoeff() <= 1e-9);  // scale free
    }
}

TEST_CASE("the solver lands on closed-form clearing prices", "[equilibrium]") {
    auto p = solve_equilibrium(symmetric_economy());
    REQUIRE_THAT(p[0], WithinAbs(0.5, 1e-8));
    REQUIRE_THAT(p[1], WithinAbs(0.5, 1e-8));

    auto skew = Economy::make({PreferenceSpec::cobb_douglas(v2(0.6, 0.4)),
                               PreferenceSpec::cobb_douglas(v2(0.2, 0.8))},
                              {v2(1.0, 0.0), v2(0.0, 1.0)});
    p = solve_equilibrium(skew);
    REQUIRE_THAT(p[0], WithinAbs(1.0 / 3.0, 1e-8));
    REQUIRE_THAT(p[1], WithinAbs(2.0 / 3.0, 1e-8));

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> ua(0.15, 0.85);
    std::uniform_real_distribution<double> ue(0.1, 1.5);
    for (int i = 0; i < 20; ++i) {
        double a1 = ua(rng), a2 = ua(rng);
        Vec e1 = v2(ue(rng), ue(rng)), e2 = v2(ue(rng), ue(rng));
        auto eco = Economy::make({PreferenceSpec::cobb_douglas(v2(a1, 1.0 - a1)),
                                  PreferenceSpec::cobb_douglas(v2(a2, 1.0 - a2))},
                                 {e1, e2});
        // good-1 spending share equation gives the price ratio directly
        double r = (a1 * e1[1] + a2 * e2[1]) /
                   ((1.0 - a1) * e1[0] + (1.0 - a2) * e2[0]);
        Vec expect = v2(r / (1.0 + r), 1.0 / (1.0 + r));
        Vec got = solve_equilibrium(eco);
        REQUIRE((got - expect).cwiseAbs().maxCoeff() <= 1e-8);
        REQUIRE(excess_demand(eco, got).cwiseAbs().maxCoeff() <= 1e-8);
    }

    auto ces = Economy::make({PreferenceSpec::ces(v2(0.5, 0.5), 0.5),
                              PreferenceSpec::ces(v2(0.3, 0.7), -1.0)},
                             {v2(1.0, 0.2), v2(0.2, 1.0)});
    Vec pc = solve_equilibrium(ces);
    REQUIRE(pc.minCoeff() > 0.0);
    REQUIRE_THAT(pc.sum(), WithinAbs(1.0, 1e-12));
    REQUIRE(excess_demand(ces, pc).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("candidate allocation series fail for the first concrete reason", "[equilibrium]") {
    CnInstance inst;
    inst.data = crossing_data();

    SECTION("a fully consistent split passes") {
        inst.alloc = {{v2(0.5, 0.5), v2(0.1, 0.9)},
                      {v2(0.7, 0.4), v2(0.2, 0.6)}};
        REQUIRE_FALSE(cn_violation(inst).has_value());
        REQUIRE(cn_membership(inst));
    }

    SECTION("wrong shapes are reported first") {
        inst.alloc = {{v2(0.5, 0.5), v2(0.1, 0.9)}};
        auto v = cn_violation(inst);
        REQUIRE(v);
        REQUIRE(v->kind == CnViolation::Kind::Shape);

        inst.alloc = {{v2(0.5, 0.5)}, {v2(0.7, 0.4), v2(0.2, 0.6)}};
        v = cn_violation(inst);
        REQUIRE(v);
        REQUIRE(v->kind == CnViolation::Kind::Shape);
        REQUIRE(v->k == 0);
    }

    SECTION("negative quantities") {
        inst.alloc = {{v2(-0.1, 1.1), v2(0.7, 0.3)},
                      {v2(0.7, 0.4), v2(0.2, 0.6)}};
        auto v = cn_violation(inst);
        REQUIRE(v);
        REQUIRE(v->kind == CnViolation::Kind::Negative);
        REQUIRE(v->k == 0);
        REQUIRE(v->h == 0);
    }

    SECTION("budget misses") {
        inst.alloc = {{v2(0.6, 0.5), v2(0.0, 0.9)},
                      {v2(0.7, 0.4), v2(0.2, 0.6)}};
        auto v = cn_violation(inst);
        REQUIRE(v);
        REQUIRE(v->kind == CnViolation::Kind::Budget);
        REQUIRE(v->k == 0);
        REQUIRE(v->h == 0);
    }

    SECTION("bundles that do not add up to the aggregate") {
        // both budgets exact, but the slack moved along the budget line
        inst.alloc = {{v2(0.6, 0.4), v2(0.1, 0.9)},
                      {v2(0.7, 0.4), v2(0.2, 0.6)}};
        auto v = cn_violation(inst);
        REQUIRE(v);
        REQUIRE(v->kind == CnViolation::Kind::AddingUp);
        REQUIRE(v->k == 0);
    }

    SECTION("an implied preference cycle for one individual") {
        CnInstance cyc;
        cyc.data = {
            EconomyObservation{1, v2(2.0, 1.0), v2(3.0, 3.0), v2(2.0, 2.0)},
            EconomyObservation{2, v2(1.0, 2.0), v2(3.5, 5.0), v2(2.5, 3.0)},
        };
        cyc.alloc = {{v2(1.0, 1.0), v2(1.0, 1.0)},
                     {v2(0.5, 1.5), v2(2.0, 1.5)}};
        auto v = cn_violation(cyc);
        REQUIRE(v);
        REQUIRE(v->kind == CnViolation::Kind::Cycle);
        REQUIRE(v->h == 0);  // the second individual's series is acyclic
        REQUIRE(v->cycle.size() == 2);
        REQUIRE_FALSE(cn_membership(cyc));
    }
}

TEST_CASE("the allocation engine needs positive two-by-two data", "[equilibrium]") {
    Vec p3(3), D3(3);
    p3 << 1, 1, 1;
    D3 << 1, 1, 1;
    REQUIRE_THROWS_AS(
        ConsistentAllocations({EconomyObservation{1, p3, v2(1.0, 2.0), D3}}),
        UnsupportedDimensions);
    REQUIRE_THROWS_AS(ConsistentAllocations({EconomyObservation{
                          1, v2(1.0, 1.0), v2(1.0, 1.0), v2(0.0, 2.0)}}),
                      MalformedDataset);
    REQUIRE_THROWS_AS(ConsistentAllocations({EconomyObservation{
                          1, v2(1.0, 1.0), v2(1.0, 1.0), v2(1.0, 1.5)}}),
                      MalformedDataset);

    ConsistentAllocations one(
        {EconomyObservation{1, v2(1.0, 1.0), v2(1.0, 1.0), v2(0.6, 1.4)}});
    REQUIRE(one.size() == 1);
    REQUIRE_FALSE(one.empty());
    REQUIRE((one.bundle_at(0, 0, 0.0) - v2(0.0, 1.0)).cwiseAbs().maxCoeff() <=
            1e-12);
    REQUIRE((one.bundle_at(0, 0, 1.0) - v2(0.6, 0.4)).cwiseAbs().maxCoeff() <=
            1e-12);
    REQUIRE((one.bundle_at(1, 0, 0.0) - v2(0.6, 0.4)).cwiseAbs().maxCoeff() <=
            1e-12);
}

TEST_CASE("projection bounds on a single observation span its whole segment", "[equilibrium]") {
    std::vector<EconomyObservation> data{
        EconomyObservation{1, v2(1.0, 1.0), v2(1.0, 1.0), v2(0.6, 1.4)}};
    auto region = cnk_projection_bounds(data, 0, 0, 8);
    REQUIRE_THAT(region.diameter(), WithinAbs(0.6 * std::sqrt(2.0), 1e-9));
    REQUIRE(region.contains(v2(0.3, 0.7)));
    REQUIRE(region.contains(v2(0.0, 1.0)));
    REQUIRE(region.contains(v2(0.6, 0.4)));

    REQUIRE_THROWS_AS(cnk_projection_bounds(data, 1, 0, 8), ConfigError);
    REQUIRE_THROWS_AS(cnk_projection_bounds(data, -1, 0, 8), ConfigError);
    REQUIRE_THROWS_AS(cnk_projection_bounds(data, 0, 2, 8), ConfigError);
}

TEST_CASE("a second budget line cuts the feasible splits down", "[equilibrium]") {
    auto data = crossing_data();

    auto [lo00, hi00] = good0_hull(cnk_projection_bounds(data, 0, 0, 12));
    REQUIRE_THAT(lo00, WithinAbs(0.0, 2e-6));
    REQUIRE_THAT(hi00, WithinAbs(0.6, 2e-6));

    auto r10 = cnk_projection_bounds(data, 1, 0, 12);
    auto [lo10, hi10] = good0_hull(r10);
    REQUIRE_THAT(lo10, WithinAbs(0.4, 2e-6));
    REQUIRE_THAT(hi10, WithinAbs(0.800024, 2e-6));
    REQUIRE(r10.contains(v2(0.7, 0.4)));          // the consistent split
    REQUIRE_FALSE(r10.contains(v2(0.2, 1.4)));    // on the line, but refuted

    auto [lo11, hi11] = good0_hull(cnk_projection_bounds(data, 1, 1, 12));
    REQUIRE_THAT(lo11, WithinAbs(0.099976, 2e-6));
    REQUIRE_THAT(hi11, WithinAbs(0.5, 2e-6));

    auto [lo01, hi01] = good0_hull(cnk_projection_bounds(data, 0, 1, 12));
    REQUIRE_THAT(lo01, WithinAbs(0.0, 2e-6));
    REQUIRE_THAT(hi01, WithinAbs(0.6, 2e-6));
}

TEST_CASE("equilibrium data force rankings only with certificates", "[equilibrium]") {
    auto eco = symmetric_economy({{0.5, 2.0}, {0.03, 0.1}});
    SequenceConfig cfg;
    cfg.seed = 7;
    cfg.generator = Generator::Halton;
    cfg.price_box = {{0.2, 2.0}, {0.2, 2.0}};
    auto data = gen_economy_dataset(eco, cfg, 64);

    EqPreferenceContext ctx(data, 12);
    REQUIRE(ctx.engine() != nullptr);

    // dominance requires no data
    REQUIRE(ctx.query(0, v2(2.0, 2.0), v2(1.0, 1.0)).value == TriBool::True);
    REQUIRE_THROWS_AS(ctx.query(2, v2(1.0, 1.0), v2(2.0, 2.0)), ConfigError);
    REQUIRE_THROWS_AS(ctx.query(0, Vec::Ones(3), v2(2.0, 2.0)),
                      DimensionMismatch);

    Vec x = v2(0.79384049334342865, 3.6094934931709015);
    Vec y = v2(0.80996446653247467, 0.47990394642049139);
    REQUIRE(ctx.query(0, x, y).value == TriBool::True);
    REQUIRE(ctx.query(0, y, x).value != TriBool::True);

    // one-shot wrapper gives the same answers
    REQUIRE(eq_revealed_preferred(data, 0, x, y, 12).value == TriBool::True);

    // every certificate must agree with the generating preferences
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    int certificates = 0;
    for (int i = 0; i < 100; ++i) {
        Vec a = v2(u(rng), u(rng));
        Vec b = v2(u(rng), u(rng));
        if (same_bundle(a, b)) continue;
        if (ctx.query(0, a, b).value == TriBool::True) {
            ++certificates;
            REQUIRE(prefers(eco.specs[0], a, b) == PrefOrdering::StrictlyPreferred);
        }
    }
    REQUIRE(certificates > 0);

    // no data, no forcing (apart from dominance)
    std::span<const EconomyObservation> none;
    REQUIRE(eq_revealed_preferred(none, 0, v2(1.0, 2.0), v2(2.0, 1.0), 12).value ==
            TriBool::False);
    REQUIRE(eq_revealed_preferred(none, 0, v2(2.0, 2.0), v2(1.0, 1.0), 12).value ==
            TriBool::True);
}

TEST_CASE("individual demand bounds tighten as equilibrium data accumulate", "[equilibrium]") {
    auto whole = eq_revealed_demand_bounds({}, 0, v2(1.0, 1.0), 10);
    REQUIRE_THAT(whole.diameter(), WithinAbs(std::sqrt(2.0), 1e-12));
    REQUIRE(whole.contains(v2(0.5, 0.5)));

    auto data = eqset_economy_data(32);
    Vec truth = v2(0.5, 0.5);  // equal-shares demand at unit price, income 1

    auto r8 = eq_revealed_demand_bounds({data.data(), 8}, 0, v2(1.0, 1.0), 12);
    REQUIRE_THAT(r8.diameter(), WithinAbs(0.972272, 2e-6));
    REQUIRE(r8.contains(truth));

    auto r32 = eq_revealed_demand_bounds({data.data(), 32}, 0, v2(1.0, 1.0), 12);
    REQUIRE_THAT(r32.diameter(), WithinAbs(0.849357, 2e-6));
    REQUIRE(r32.contains(truth));
    REQUIRE(r32.diameter() <= r8.diameter());

    REQUIRE_THROWS_AS(eq_revealed_demand_bounds(data, 5, v2(1.0, 1.0), 8),
                      ConfigError);
}

TEST_CASE("candidate clearing prices always include the real one", "[equilibrium]") {
    EquilibriumSet s;
    s.grid_res = 200;
    s.indices = {99, 100, 101};
    REQUIRE_THAT(s.interval_width(), WithinAbs(0.01, 1e-15));
    REQUIRE((s.price(100) - v2(0.5, 0.5)).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE_THAT(EquilibriumSet{}.interval_width(), WithinAbs(0.0, 1e-15));

    auto eco = symmetric_economy({{0.5, 2.5}, {0.03, 0.1}});

    // with no data every interior grid price is still on the table
    auto all = approx_equilibrium_set({}, eco.endowments, 50, 0.02, 8);
    REQUIRE(all.indices.size() == 49);

    auto data = eqset_economy_data(32);
    auto joint = approx_equilibrium_set(data, eco.endowments, 50, 0.02, 8,
                                        BlockingRule::Joint);
    auto perind = approx_equilibrium_set(data, eco.endowments, 50, 0.02, 8,
                                         BlockingRule::PerIndividual);
    REQUIRE(joint.indices.size() == 49);
    REQUIRE(perind.indices.size() == 46);
    REQUIRE_THAT(joint.interval_width(), WithinAbs(0.96, 1e-12));
    REQUIRE_THAT(perind.interval_width(), WithinAbs(0.96, 1e-12));
    // grid-rounded clearing price of the generating economy: index 25
    REQUIRE(std::count(joint.indices.begin(), joint.indices.end(), 25) == 1);
    REQUIRE(std::count(perind.indices.begin(), perind.indices.end(), 25) == 1);
    // per-individual blocking can only prune more
    for (int idx : perind.indices)
        REQUIRE(std::count(joint.indices.begin(), joint.indices.end(), idx) == 1);

    REQUIRE_THROWS_AS(approx_equilibrium_set(data, {v2(1.0, 0.0)}, 50, 0.02, 8),
                      UnsupportedDimensions);
    REQUIRE_THROWS_AS(
        approx_equilibrium_set(data, {v2(1.0, -1.0), v2(0.0, 1.0)}, 50, 0.02, 8),
        ConfigError);
    REQUIRE_THROWS_AS(approx_equilibrium_set(data, eco.endowments, 1, 0.02, 8),
                      ConfigError);
    REQUIRE_THROWS_AS(approx_equilibrium_set(data, eco.endowments, 50, 0.0, 8),
                      ConfigError);
}

TEST_CASE("aggregate demand comparison finds disagreements when they exist", "[equilibrium]") {
    SequenceConfig cfg;
    cfg.seed = 7;
    cfg.generator = Generator::Halton;
    cfg.price_box = {{0.2, 2.0}, {0.2, 2.0}};

    auto a = symmetric_economy();
    auto same = symmetric_economy();
    REQUIRE_FALSE(check_assumption1(a, same, cfg, 50).has_value());

    auto skew = Economy::make({PreferenceSpec::cobb_douglas(v2(0.6, 0.4)),
                               PreferenceSpec::cobb_douglas(v2(0.2, 0.8))},
                              {v2(1.0, 0.0), v2(0.0, 1.0)});
    auto w = check_assumption1(a, skew, cfg, 50);
    REQUIRE(w);
    REQUIRE((w->demand_a - w->demand_b).norm() > 1e-6);
    REQUIRE((w->demand_a - aggregate_demand(a, w->p, w->incomes))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    REQUIRE((w->demand_b - aggregate_demand(skew, w->p, w->incomes))
                .cwiseAbs()
                .maxCoeff() == 0.0);

    // endowments do not enter aggregate demand at given incomes
    auto swapped = Economy::make({PreferenceSpec::cobb_douglas(v2(0.6, 0.4)),
                                  PreferenceSpec::cobb_douglas(v2(0.2, 0.8))},
                                 {v2(0.0, 1.0), v2(1.0, 0.0)});
    REQUIRE_FALSE(check_assumption1(skew, swapped, cfg, 50).has_value());

    auto other_box = symmetric_economy({{0.5, 2.1}, {0.5, 2.0}});
    REQUIRE_THROWS_AS(check_assumption1(a, other_box, cfg, 50),
                      DimensionMismatch);
}
