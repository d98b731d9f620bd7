// Exchange economies and what finite equilibrium data pins down: solving for
// Walrasian prices, testing candidate allocation series for consistency with
// some profile of rational preferences, bounding the set of allocations
// consistent with observed aggregates, and bounding the set of prices that
// could be equilibria of the observed economy.
#pragma once

#include <revpref/common.hpp>
#include <revpref/feasibility.hpp>
#include <revpref/prefs.hpp>
#include <revpref/revealed.hpp>
#include <revpref/sequences.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

namespace revpref {

// ------------------------------------------------------------------------
// Economies and equilibrium computation

struct Economy {
  std::vector<PreferenceSpec> specs;  // one per individual
  std::vector<Vec> endowments;        // nonnegative, nonzero, positive total
  std::vector<std::pair<double, double>> income_box;  // sampling range per
                                                      // individual

  static Economy make(std::vector<PreferenceSpec> specs,
                      std::vector<Vec> endowments,
                      std::vector<std::pair<double, double>> income_box = {}) {
    if (specs.size() < 2)
      throw ConfigError("economy: need at least two individuals");
    if (specs.size() != endowments.size())
      throw ConfigError("economy: need one endowment per preference spec");
    const int L = specs.front().num_goods();
    for (const auto& s : specs)
      if (s.num_goods() != L)
        throw DimensionMismatch("economy: mixed numbers of goods");
    Vec total = Vec::Zero(L);
    for (const auto& e : endowments) {
      if (e.size() != L)
        throw DimensionMismatch("economy: endowment dimension mismatch");
      if (!all_nonnegative(e) || e.maxCoeff() <= 0.0)
        throw ConfigError("economy: endowments must be nonnegative, nonzero");
      total += e;
    }
    if (!all_positive(total))
      throw ConfigError("economy: some good is in zero total supply");
    if (income_box.empty())
      income_box.assign(specs.size(), {0.5, 2.0});
    if (income_box.size() != specs.size())
      throw ConfigError("economy: one income range per individual");
    detail::validate_box(income_box, "economy income_box");
    return Economy{std::move(specs), std::move(endowments),
                   std::move(income_box)};
  }

  int num_inds() const { return static_cast<int>(specs.size()); }
  int num_goods() const { return specs.front().num_goods(); }
  Vec total_endowment() const {
    Vec e = endowments.front();
    for (std::size_t h = 1; h < endowments.size(); ++h) e += endowments[h];
    return e;
  }
};

inline Bundle aggregate_demand(const Economy& eco, const PriceVector& p,
                               const Vec& incomes) {
  if (incomes.size() != eco.num_inds())
    throw DimensionMismatch("aggregate_demand: one income per individual");
  Bundle d = demand(eco.specs[0], p, incomes[0]);
  for (int h = 1; h < eco.num_inds(); ++h)
    d += demand(eco.specs[h], p, incomes[h]);
  return d;
}

// Excess demand with endowment incomes w_h = p.e_h.
inline Vec excess_demand(const Economy& eco, const PriceVector& p) {
  Vec incomes(eco.num_inds());
  for (int h = 0; h < eco.num_inds(); ++h)
    incomes[h] = p.dot(eco.endowments[h]);
  return aggregate_demand(eco, p, incomes) - eco.total_endowment();
}

// Walrasian equilibrium prices on the unit simplex. Newton iteration on the
// first L-1 excess demands (the last follows by Walras' law), with damping
// and a tatonnement fallback step when the Newton direction stalls.
inline PriceVector solve_equilibrium(const Economy& eco, double tol = 1e-10,
                                     int max_iter = 200) {
  const int L = eco.num_goods();
  Vec q = Vec::Constant(L - 1, 1.0 / L);  // first L-1 simplex coordinates

  auto price_of = [L](const Vec& q) {
    Vec p(L);
    p.head(L - 1) = q;
    p[L - 1] = 1.0 - q.sum();
    return p;
  };
  auto residual = [&](const Vec& q) -> Vec {
    return excess_demand(eco, price_of(q)).head(L - 1);
  };
  auto admissible = [&](const Vec& q) {
    if ((q.array() <= 1e-9).any()) return false;
    return 1.0 - q.sum() > 1e-9;
  };
  auto stalled = [](double best) {
    std::ostringstream os;
    os << "solve_equilibrium: stalled, best residual " << best;
    return NoConvergence(os.str());
  };

  Vec g = residual(q);
  for (int iter = 0; iter < max_iter; ++iter) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm <= tol) return price_of(q);

    // forward-difference Jacobian
    Eigen::MatrixXd J(L - 1, L - 1);
    for (int l = 0; l < L - 1; ++l) {
      const double hstep = 1e-7 * std::max(1.0, std::abs(q[l]));
      Vec qh = q;
      qh[l] += hstep;
      J.col(l) = (residual(qh) - g) / hstep;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    Vec step = lu.isInvertible() ? Vec(-lu.solve(g))
                                 : Vec(0.1 * g);  // tatonnement direction

    // backtrack until the residual improves and prices stay interior
    double scale = 1.0;
    bool moved = false;
    for (int half = 0; half < 40; ++half, scale *= 0.5) {
      Vec qn = q + scale * step;
      if (!admissible(qn)) continue;
      Vec gn = residual(qn);
      if (gn.lpNorm<Eigen::Infinity>() < gnorm * (1.0 - 1e-4 * scale)) {
        q = qn;
        g = gn;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // plain tatonnement nudge; if even that fails we are stuck
      Vec qn = q + 0.05 * g;
      if (!admissible(qn)) throw stalled(gnorm);
      Vec gn = residual(qn);
      if (gn.lpNorm<Eigen::Infinity>() >= gnorm) throw stalled(gnorm);
      q = qn;
      g = gn;
    }
  }
  throw NoConvergence("solve_equilibrium: iteration limit reached");
}

// Observed economy data: sampled prices and incomes with the aggregate
// demand they induce. Incomes come from config.income_box when present,
// otherwise from the economy's own ranges. Prices and incomes are sampled
// jointly per observation, so a longer run extends a shorter one point for
// point.
inline std::vector<EconomyObservation> gen_economy_dataset(
    const Economy& eco, const SequenceConfig& cfg, int n) {
  const int L = eco.num_goods();
  const int H = eco.num_inds();
  if (static_cast<int>(cfg.price_box.size()) != L)
    throw DimensionMismatch("gen_economy_dataset: price_box dimension");
  auto joint = cfg.price_box;
  const auto& incomes_box =
      cfg.income_box.empty() ? eco.income_box : cfg.income_box;
  if (static_cast<int>(incomes_box.size()) != H)
    throw ConfigError("gen_economy_dataset: one income range per individual");
  joint.insert(joint.end(), incomes_box.begin(), incomes_box.end());
  detail::validate_box(joint, "gen_economy_dataset");

  std::mt19937_64 rng(cfg.seed);
  const auto rows = detail::sample_box(joint, n, cfg, 0, &rng);

  std::vector<EconomyObservation> out;
  out.reserve(rows.size());
  for (int k = 0; k < n; ++k) {
    const PriceVector p = rows[k].head(L);
    const Vec w = rows[k].tail(H);
    Bundle D = Bundle::Zero(L);
    for (int h = 0; h < H; ++h) D += demand(eco.specs[h], p, w[h]);
    out.push_back({k + 1, p, w, D});
  }
  return out;
}

// ------------------------------------------------------------------------
// Candidate allocation series: membership in the consistent set

// A proposed split of each observed aggregate into individual bundles.
struct CnInstance {
  std::vector<EconomyObservation> data;
  std::vector<std::vector<Bundle>> alloc;  // alloc[k][h]
};

struct CnViolation {
  enum class Kind { Shape, Negative, AddingUp, Budget, Cycle };
  Kind kind = Kind::Shape;
  int k = -1;                 // observation (Negative/AddingUp/Budget)
  int h = -1;                 // individual (Negative/Budget/Cycle)
  std::vector<int> cycle{};   // for Kind::Cycle, from check_sarp
};

// First reason the candidate series fails, if any: bundles must be
// nonnegative, split the aggregate exactly, spend each individual's income
// exactly, and each individual's implied demand data must satisfy SARP.
inline std::optional<CnViolation> cn_violation(const CnInstance& inst) {
  const int n = static_cast<int>(inst.data.size());
  if (static_cast<int>(inst.alloc.size()) != n)
    return CnViolation{CnViolation::Kind::Shape};
  if (n == 0) return std::nullopt;
  const int H = static_cast<int>(inst.data.front().w.size());
  const int L = static_cast<int>(inst.data.front().p.size());

  for (int k = 0; k < n; ++k) {
    if (static_cast<int>(inst.alloc[k].size()) != H)
      return CnViolation{CnViolation::Kind::Shape, k};
    Bundle sum = Bundle::Zero(L);
    for (int h = 0; h < H; ++h) {
      const Bundle& x = inst.alloc[k][h];
      if (x.size() != L) return CnViolation{CnViolation::Kind::Shape, k, h};
      if (!all_nonnegative(x))
        return CnViolation{CnViolation::Kind::Negative, k, h};
      const double spend = inst.data[k].p.dot(x);
      const double w = inst.data[k].w[h];
      if (std::abs(spend - w) > kBudgetTolEconomy * std::max(1.0, w))
        return CnViolation{CnViolation::Kind::Budget, k, h};
      sum += x;
    }
    if ((sum - inst.data[k].D).lpNorm<Eigen::Infinity>() >
        kBudgetTolEconomy *
            std::max(1.0, inst.data[k].D.lpNorm<Eigen::Infinity>()))
      return CnViolation{CnViolation::Kind::AddingUp, k};
  }

  for (int h = 0; h < H; ++h) {
    std::vector<DemandObservation> series;
    series.reserve(n);
    for (int k = 0; k < n; ++k)
      series.push_back({k, PriceVector(inst.data[k].p / inst.data[k].w[h]),
                        inst.alloc[k][h]});
    const SarpResult r = check_sarp(series);
    if (!r.holds) {
      CnViolation v{CnViolation::Kind::Cycle};
      v.h = h;
      v.cycle = r.witness_cycle;
      return v;
    }
  }
  return std::nullopt;
}

inline bool cn_membership(const CnInstance& inst) {
  return !cn_violation(inst).has_value();
}

// ------------------------------------------------------------------------
// Interval engine over candidate allocations (two goods, two individuals)
//
// With L = H = 2, a candidate allocation for observation k is pinned by one
// scalar: individual 1's position along the budget segment
// { x : p_k.x = w_k1, 0 <= x <= D_k }; individual 2 consumes the rest.
// Parameters live in [0,1] per observation. A fixed grid of cells per
// observation is pruned to a fixpoint: a cell dies when some partner
// observation forms a revealed-preference 2-cycle (for one individual or
// the other, with provably distinct bundles) against every surviving
// parameter of that partner. Dead cells admit no consistent completion, so
// the surviving cells are an outer approximation of the projections of the
// consistent set.

namespace detail {

struct Iv {
  double lo = 1.0, hi = 0.0;  // default empty
  bool empty() const { return !(lo <= hi); }
  double width() const { return empty() ? 0.0 : hi - lo; }
};

inline Iv iv_intersect(const Iv& a, const Iv& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

// {s in [0,1] : c0 + c1 s <= rhs}
inline Iv affine_le(double c0, double c1, double rhs) {
  if (c1 > 0.0) return {0.0, std::min(1.0, (rhs - c0) / c1)};
  if (c1 < 0.0) return {std::max(0.0, (rhs - c0) / c1), 1.0};
  return c0 <= rhs ? Iv{0.0, 1.0} : Iv{};
}

// {s in [0,1] : lo <= c0 + c1 s <= hi}
inline Iv affine_between(double c0, double c1, double lo, double hi) {
  if (c1 == 0.0) return (lo <= c0 && c0 <= hi) ? Iv{0.0, 1.0} : Iv{};
  double a = (lo - c0) / c1, b = (hi - c0) / c1;
  if (a > b) std::swap(a, b);
  return {std::max(0.0, a), std::min(1.0, b)};
}

// a minus b, up to two pieces
inline void iv_subtract(const Iv& a, const Iv& b, Iv out[2]) {
  out[0] = out[1] = Iv{};
  if (a.empty()) return;
  if (b.empty() || b.hi < a.lo || b.lo > a.hi) {
    out[0] = a;
    return;
  }
  if (b.lo > a.lo) out[0] = {a.lo, b.lo};
  if (b.hi < a.hi) out[1] = {b.hi, a.hi};
}

}  // namespace detail

class ConsistentAllocations {
 public:
  // grid sets the resolution floor: the fixpoint and the refutation search
  // stop distinguishing parameter sub-intervals narrower than 1/grid.
  explicit ConsistentAllocations(std::vector<EconomyObservation> data,
                                 int grid = 256, int max_rounds = 64)
      : data_(std::move(data)),
        grid_(std::max(grid, 2)),
        res_(1.0 / std::max(grid, 2)) {
    n_ = static_cast<int>(data_.size());
    dom_.assign(n_, detail::Iv{0.0, 1.0});
    for (int h = 0; h < 2; ++h) {
      s0_[h].resize(n_);
      s1_[h].resize(n_);
      cost0_[h].resize(n_, n_);
      cost1_[h].resize(n_, n_);
    }
    for (int k = 0; k < n_; ++k) {
      const auto& o = data_[k];
      if (o.p.size() != 2 || o.D.size() != 2 || o.w.size() != 2)
        throw UnsupportedDimensions(
            "consistent allocations: need two goods, two individuals");
      if (!all_positive(o.p) || !all_positive(o.D) ||
          !(o.w[0] > 0.0 && o.w[1] > 0.0))
        throw MalformedDataset("consistent allocations: nonpositive data");
      if (std::abs(o.p.dot(o.D) - o.w.sum()) >
          kBudgetTolInput * std::max(1.0, o.w.sum()))
        throw MalformedDataset(
            "consistent allocations: aggregate off the budget");
      double lo = std::max(0.0, (o.w[0] - o.p[1] * o.D[1]) / o.p[0]);
      double hi = std::min(o.D[0], o.w[0] / o.p[0]);
      if (lo > hi) {
        if (lo > hi + 1e-12)
          throw MalformedDataset("consistent allocations: infeasible split");
        lo = hi;
      }
      // individual 1's bundle is s0 + t s1; individual 2 gets D minus it
      s0_[0][k] = {lo, (o.w[0] - o.p[0] * lo) / o.p[1]};
      const std::array<double, 2> end{hi, (o.w[0] - o.p[0] * hi) / o.p[1]};
      s1_[0][k] = {end[0] - s0_[0][k][0], end[1] - s0_[0][k][1]};
      s0_[1][k] = {o.D[0] - s0_[0][k][0], o.D[1] - s0_[0][k][1]};
      s1_[1][k] = {-s1_[0][k][0], -s1_[0][k][1]};
    }
    // cost0[h](i,j) + t cost1[h](i,j) = p_i . x_j^h(t)
    for (int h = 0; h < 2; ++h)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
          cost0_[h](i, j) =
              data_[i].p[0] * s0_[h][j][0] + data_[i].p[1] * s0_[h][j][1];
          cost1_[h](i, j) =
              data_[i].p[0] * s1_[h][j][0] + data_[i].p[1] * s1_[h][j][1];
        }
    if (n_ >= 2) {
      std::vector<int> seed(n_);
      std::iota(seed.begin(), seed.end(), 0);
      empty_ = !propagate(dom_, seed, max_rounds * n_ * n_);
    }
  }

  int size() const { return n_; }
  bool empty() const { return empty_; }
  int grid() const { return grid_; }
  const EconomyObservation& obs(int k) const { return data_[k]; }
  const std::vector<EconomyObservation>& observations() const { return data_; }

  // individual h's bundle at observation k, parameter t in [0,1]
  Bundle bundle_at(int h, int k, double t) const {
    Bundle x(2);
    x << s0_[h][k][0] + t * s1_[h][k][0], s0_[h][k][1] + t * s1_[h][k][1];
    return x;
  }

  detail::Iv param_hull(int k) const { return empty_ ? detail::Iv{} : dom_[k]; }

  // componentwise bundle hull over a parameter interval
  Box bundle_hull(int h, int k, const detail::Iv& t) const {
    const Bundle a = bundle_at(h, k, t.lo), b = bundle_at(h, k, t.hi);
    return Box(a.cwiseMin(b), a.cwiseMax(b));
  }
  Box bundle_hull(int h, int k) const {
    return bundle_hull(h, k, param_hull(k));
  }

  std::vector<detail::Iv> root_hulls() const {
    if (empty_) return std::vector<detail::Iv>(n_);
    return dom_;
  }

  // Would parameters of k in [ta,tb] two-cycle against every surviving
  // parameter of j, for one individual or the other pointwise?
  bool killed_by(int k, double ta, double tb, int j) const {
    return pair_kill(k, {ta, tb}, j, dom_);
  }

  bool box_dead(int k, double ta, double tb) const {
    const detail::Iv cand = detail::iv_intersect({ta, tb}, dom_[k]);
    if (cand.empty()) return true;
    for (int j = 0; j < n_; ++j)
      if (j != k && pair_kill(k, cand, j, dom_)) return true;
    return false;
  }

  // Is the sub-interval [ta,tb] of k's parameter provably inconsistent with
  // the data? Tries to extend the restriction to a full candidate series by
  // branch-and-prune over all observations; true only when every branch
  // collapses some observation's domain, which certifies that no consistent
  // series passes through the interval. A verified sample series ends the
  // search early with a definite "alive".
  bool refutable(int k, double ta, double tb, int node_budget = 64) const {
    if (empty_) return true;
    if (n_ < 2) return false;
    std::vector<detail::Iv> dom = dom_;
    dom[k] = detail::iv_intersect({ta, tb}, dom[k]);
    if (dom[k].empty()) return true;
    int budget = node_budget;
    return search_refutes(dom, {k}, budget) == Outcome::Refuted;
  }

  // Shave provably inconsistent parameters off the ends of each
  // observation's surviving interval, round-robin until nothing moves.
  // Every removal carries a refutation certificate, so the surviving
  // intervals still contain every consistent series.
  void tighten_hulls(int node_budget = 64, int max_passes = 6) {
    if (n_ < 2 || empty_) return;
    for (int pass = 0; pass < max_passes && !empty_; ++pass) {
      bool changed = false;
      for (int k = 0; k < n_ && !empty_; ++k)
        for (int side = 0; side < 2; ++side) {
          const detail::Iv before = dom_[k];
          if (before.width() <= res_) break;
          // largest refutable outer piece, by bisection on the cut point
          double keep = side == 0 ? before.hi : before.lo;
          double cut = side == 0 ? before.lo : before.hi;
          if (!refutable_side(k, before, cut + (side == 0 ? res_ : -res_),
                              side, node_budget))
            continue;  // not even a resolution-sized sliver dies
          double dead = cut + (side == 0 ? res_ : -res_);
          for (int it = 0; it < 40 && std::abs(keep - dead) > res_; ++it) {
            const double mid = 0.5 * (dead + keep);
            if (refutable_side(k, before, mid, side, node_budget))
              dead = mid;
            else
              keep = mid;
          }
          if (side == 0)
            dom_[k].lo = dead;
          else
            dom_[k].hi = dead;
          changed = true;
          // the shrunken domain may now collapse partners
          std::vector<int> seed{k};
          if (!propagate(dom_, seed, 64 * n_ * n_)) {
            empty_ = true;
            break;
          }
        }
      if (!changed) break;
    }
  }

  // A verified consistent series, if the refutation search can find one:
  // one parameter per observation whose induced bundles pass the pairwise
  // test for both individuals. Optional restrictions pin chosen observations
  // into sub-intervals first, which biases where the search looks.
  std::optional<std::vector<double>> consistent_series(
      const std::vector<std::pair<int, detail::Iv>>& pin = {},
      int node_budget = 4096) const {
    if (empty_ || n_ == 0) return std::nullopt;
    std::vector<detail::Iv> dom = dom_;
    std::vector<int> seeds;
    seeds.reserve(pin.size());
    for (const auto& [k, iv] : pin) {
      dom[k] = detail::iv_intersect(dom[k], iv);
      if (dom[k].empty()) return std::nullopt;
      seeds.push_back(k);
    }
    std::vector<double> wit;
    int budget = node_budget;
    if (search_refutes(dom, std::move(seeds), budget, &wit) !=
            Outcome::Alive ||
        wit.empty())
      return std::nullopt;
    return wit;
  }

  // Strict revealed preference of i over every candidate bundle of j, for
  // individual h, under the given parameter intervals.
  bool forall_edge(int h, int i, int j,
                   std::span<const detail::Iv> hulls) const {
    const double c0 = cost0_[h](i, j), c1 = cost1_[h](i, j);
    const double worst = std::max(c0 + hulls[j].lo * c1, c0 + hulls[j].hi * c1);
    return strict_lt(worst, data_[i].w[h]);
  }

  // Observations reachable from the seed set through edges that hold for
  // every candidate series: revealed preference (the partner's every
  // candidate bundle is affordable) or plain dominance (the partner's every
  // candidate bundle lies strictly below ours). Reached nodes are strictly
  // outranked by some seed.
  DynBitset certain_successors(int h, const DynBitset& seeds,
                               std::span<const detail::Iv> hulls) const {
    constexpr double gap = 1e-12;
    std::vector<Box> bh;
    bh.reserve(n_);
    for (int k = 0; k < n_; ++k) bh.push_back(bundle_hull(h, k, hulls[k]));
    DynBitset flagged(n_), frontier = seeds;
    while (frontier.any()) {
      DynBitset next(n_);
      for (auto iu = frontier.find_first(); iu != DynBitset::npos;
           iu = frontier.find_next(iu)) {
        const int i = static_cast<int>(iu);
        for (int j = 0; j < n_; ++j) {
          if (flagged.test(j) || next.test(j)) continue;
          const bool above = bh[i].lo[0] > bh[j].hi[0] + gap &&
                             bh[i].lo[1] > bh[j].hi[1] + gap;
          if (above || forall_edge(h, i, j, hulls)) next.set(j);
        }
      }
      flagged |= next;
      frontier = next;
    }
    return flagged;
  }

  // Does a chain certificate force x above y for individual h under the
  // given parameter intervals? Sound for every candidate series at once.
  bool chain_certainly_prefers(int h, const Bundle& x, const Bundle& y,
                               std::span<const detail::Iv> hulls) const {
    if (dominates(x, y)) return true;
    if (n_ == 0) return false;
    std::vector<Box> bh;
    bh.reserve(n_);
    for (int k = 0; k < n_; ++k) bh.push_back(bundle_hull(h, k, hulls[k]));

    DynBitset above_y(n_), below_x(n_);
    for (int j = 0; j < n_; ++j) {
      if (leq(y, bh[j].lo)) above_y.set(j);
      if (leq(bh[j].hi, x)) below_x.set(j);
    }
    if (above_y.none() || below_x.none()) return false;

    constexpr double gap = 1e-12;
    for (auto i = below_x.find_first(); i != DynBitset::npos;
         i = below_x.find_next(i))
      if (above_y.test(i)) {
        // sandwich with a certain strict end for every candidate
        const Box& b = bh[static_cast<int>(i)];
        for (int l = 0; l < 2; ++l)
          if (x[l] > b.hi[l] + gap || b.lo[l] > y[l] + gap) return true;
      }
    return certain_successors(h, below_x, hulls).intersects(above_y);
  }

 private:
  enum class Outcome { Refuted, Alive, Budget };

  // Every parameter of k in cand two-cycles against every parameter of j in
  // dom[j], for one individual or the other pointwise.
  bool pair_kill(int k, const detail::Iv& cand, int j,
                 const std::vector<detail::Iv>& dom) const {
    std::array<detail::Iv, 4> pieces{};
    int np = 0;
    for (int h = 0; h < 2; ++h) {
      // gate: k's bundle affordable at j's budget across the whole interval
      const double wj = data_[j].w[h];
      const double g0 = cost0_[h](j, k), g1 = cost1_[h](j, k);
      if (!(g0 + cand.lo * g1 <= wj && g0 + cand.hi * g1 <= wj)) continue;
      // j's bundle affordable at k's budget: affine in s
      detail::Iv aff =
          detail::affine_le(cost0_[h](k, j), cost1_[h](k, j), data_[k].w[h]);
      if (aff.empty()) continue;
      // distinctness: drop s where j's bundle can meet the interval's hull
      constexpr double pad = 1e-12;
      detail::Iv overlap{0.0, 1.0};
      for (int l = 0; l < 2 && !overlap.empty(); ++l) {
        const double u = s0_[h][k][l] + cand.lo * s1_[h][k][l];
        const double v = s0_[h][k][l] + cand.hi * s1_[h][k][l];
        overlap = detail::iv_intersect(
            overlap,
            detail::affine_between(s0_[h][j][l], s1_[h][j][l],
                                   std::min(u, v) - pad, std::max(u, v) + pad));
      }
      detail::Iv parts[2];
      detail::iv_subtract(aff, overlap, parts);
      for (const auto& part : parts)
        if (!part.empty()) pieces[np++] = part;
    }
    if (np == 0) return false;
    // merge; j's whole surviving interval must sit inside one merged piece
    std::sort(pieces.begin(), pieces.begin() + np,
              [](const detail::Iv& a, const detail::Iv& b) {
                return a.lo < b.lo;
              });
    detail::Iv run = pieces[0];
    for (int q = 1; q < np; ++q) {
      if (pieces[q].lo > run.hi) {
        if (run.lo <= dom[j].lo && dom[j].hi <= run.hi) return true;
        run = pieces[q];
      } else {
        run.hi = std::max(run.hi, pieces[q].hi);
      }
    }
    return run.lo <= dom[j].lo && dom[j].hi <= run.hi;
  }

  // Erode dom[j]'s ends against partner q; true when dom[j] changed.
  // Within the affordability window the kill predicate is monotone (larger
  // pieces are harder to forbid), so bisection finds the frontier.
  bool erode(int j, int q, std::vector<detail::Iv>& dom) const {
    bool changed = false;
    for (int side = 0; side < 2; ++side) {
      const detail::Iv d = dom[j];
      if (d.empty()) return changed;
      const double edge = side == 0 ? d.lo : d.hi;
      const double sliver = side == 0 ? std::min(d.hi, d.lo + res_)
                                      : std::max(d.lo, d.hi - res_);
      detail::Iv probe = side == 0 ? detail::Iv{edge, sliver}
                                   : detail::Iv{sliver, edge};
      if (!pair_kill(j, probe, q, dom)) continue;
      double dead = sliver, keep = side == 0 ? d.hi : d.lo;
      while (std::abs(keep - dead) > res_) {
        const double mid = 0.5 * (dead + keep);
        const detail::Iv cand =
            side == 0 ? detail::Iv{d.lo, mid} : detail::Iv{mid, d.hi};
        if (pair_kill(j, cand, q, dom))
          dead = mid;
        else
          keep = mid;
      }
      if (side == 0)
        dom[j].lo = dead;
      else
        dom[j].hi = dead;
      changed = true;
      if (dom[j].width() <= 0.0 && pair_kill(j, dom[j], q, dom)) {
        dom[j] = detail::Iv{};
        return true;
      }
    }
    return changed;
  }

  // Bound-consistency fixpoint over the pairwise two-cycle constraints,
  // seeded with the observations whose domains just changed. False when
  // some domain empties.
  bool propagate(std::vector<detail::Iv>& dom, std::vector<int> worklist,
                 int max_updates) const {
    std::vector<char> queued(n_, 0);
    for (int q : worklist) queued[q] = 1;
    int updates = 0;
    while (!worklist.empty() && updates < max_updates) {
      const int q = worklist.back();
      worklist.pop_back();
      queued[q] = 0;
      for (int j = 0; j < n_; ++j) {
        if (j == q) continue;
        if (!erode(j, q, dom)) continue;
        ++updates;
        if (dom[j].empty()) return false;
        if (!queued[j]) {
          queued[j] = 1;
          worklist.push_back(j);
        }
      }
    }
    return true;
  }

  // Are the candidate bundles at these parameters free of pairwise
  // two-cycles for both individuals? A yes certifies a consistent series.
  bool consistent_point(const std::vector<double>& t) const {
    constexpr double tol = 1e-12;
    for (int h = 0; h < 2; ++h)
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) {
          const double cij = cost0_[h](i, j) + t[j] * cost1_[h](i, j);
          const double cji = cost0_[h](j, i) + t[i] * cost1_[h](j, i);
          if (!(cij <= data_[i].w[h] && cji <= data_[j].w[h])) continue;
          bool same = true;
          for (int l = 0; l < 2 && same; ++l)
            same = std::abs((s0_[h][i][l] + t[i] * s1_[h][i][l]) -
                            (s0_[h][j][l] + t[j] * s1_[h][j][l])) <= tol;
          if (!same) return false;
        }
    return true;
  }

  Outcome search_refutes(std::vector<detail::Iv>& dom, std::vector<int> seed,
                         int& budget,
                         std::vector<double>* witness = nullptr) const {
    if (--budget < 0) return Outcome::Budget;
    // midpoint sample first: a verified series ends the whole search, and on
    // generic data that is the overwhelmingly common outcome
    std::vector<double> mid(n_);
    for (int i = 0; i < n_; ++i) mid[i] = 0.5 * (dom[i].lo + dom[i].hi);
    if (consistent_point(mid)) {
      if (witness) *witness = mid;
      return Outcome::Alive;
    }
    if (!propagate(dom, std::move(seed), 64 * n_ * n_))
      return Outcome::Refuted;
    for (int i = 0; i < n_; ++i) mid[i] = 0.5 * (dom[i].lo + dom[i].hi);
    if (consistent_point(mid)) {
      if (witness) *witness = mid;
      return Outcome::Alive;
    }
    // branch on the widest domain
    int bv = -1;
    double bw = res_;
    for (int i = 0; i < n_; ++i)
      if (dom[i].width() > bw) {
        bw = dom[i].width();
        bv = i;
      }
    if (bv < 0) return Outcome::Alive;  // at resolution, sample failed: keep
    const detail::Iv d = dom[bv];
    const double m = 0.5 * (d.lo + d.hi);
    std::vector<detail::Iv> other = dom;
    dom[bv] = {d.lo, m};
    const Outcome left = search_refutes(dom, {bv}, budget, witness);
    if (left != Outcome::Refuted) return left;
    other[bv] = {m, d.hi};
    return search_refutes(other, {bv}, budget, witness);
  }

  // Would cutting observation k's interval at `cut` leave a refutable outer
  // piece on the given side?
  bool refutable_side(int k, const detail::Iv& whole, double cut, int side,
                      int node_budget) const {
    const detail::Iv piece = side == 0 ? detail::Iv{whole.lo, cut}
                                       : detail::Iv{cut, whole.hi};
    if (piece.empty() || piece.width() <= 0.0) return false;
    std::vector<detail::Iv> dom = dom_;
    dom[k] = piece;
    int budget = node_budget;
    return search_refutes(dom, {k}, budget) == Outcome::Refuted;
  }

  std::vector<EconomyObservation> data_;
  int n_ = 0;
  int grid_;
  double res_;
  bool empty_ = false;
  // individual h's bundle at obs k: coordinate l is s0[h][k][l] + t s1[h][k][l]
  std::array<std::vector<std::array<double, 2>>, 2> s0_, s1_;
  std::array<Eigen::MatrixXd, 2> cost0_, cost1_;
  std::vector<detail::Iv> dom_;
};

namespace detail {

inline int engine_grid(int depth) {
  return std::clamp(1 << std::clamp(depth, 6, 10), 64, 1024);
}

}  // namespace detail

// ------------------------------------------------------------------------
// Bounds derived from the engine

// Outer bounds on individual h's bundle at observation k across all
// allocation series consistent with the data. Branch-and-bound on the
// scalar parameter; a sub-interval is discarded only with a certificate —
// either a direct two-cycle against some partner observation, or a
// restriction whose pairwise fixpoint collapses another observation.
inline Region cnk_projection_bounds(std::span<const EconomyObservation> data,
                                    int k, int h, int depth) {
  if (k < 0 || k >= static_cast<int>(data.size()))
    throw ConfigError("cnk_projection_bounds: observation index out of range");
  if (h < 0 || h > 1)
    throw ConfigError("cnk_projection_bounds: individual must be 0 or 1");
  ConsistentAllocations eng({data.begin(), data.end()},
                            detail::engine_grid(depth));
  eng.tighten_hulls();
  if (eng.empty()) return Region{};

  const double res = 1.0 / eng.grid();
  const Vec zero = Vec::Zero(1), one = Vec::Ones(1);
  auto classify = [&](const Box& b) {
    if (eng.box_dead(k, b.lo[0], b.hi[0])) return BoxClass::AllOut;
    // refutation search only well above the resolution floor; narrower boxes
    // are settled by the direct pairwise test alone
    if (b.hi[0] - b.lo[0] >= 8 * res && eng.refutable(k, b.lo[0], b.hi[0]))
      return BoxClass::AllOut;
    return BoxClass::Split;
  };
  const Region param = branch_and_bound_cover(Box(zero, one), classify, depth);

  Region out;
  out.boxes.reserve(param.boxes.size());
  for (const auto& rb : param.boxes)
    out.boxes.push_back(
        {eng.bundle_hull(h, k, {rb.box.lo[0], rb.box.hi[0]}), rb.status});
  return out;
}

enum class TriBool { True, False, Unknown };

struct TriState {
  TriBool value = TriBool::Unknown;
  double resolution = 0.0;  // finest scale reached when Unknown
};

// Reusable context for equilibrium revealed-preference queries against one
// dataset: the propagated engine plus, per individual, revealed graphs of a
// few verified-consistent candidate series (counterexample probes).
class EqPreferenceContext {
 public:
  explicit EqPreferenceContext(std::span<const EconomyObservation> data,
                               int depth = 12)
      : n_(static_cast<int>(data.size())) {
    if (n_ == 0) return;
    eng_.emplace(std::vector<EconomyObservation>(data.begin(), data.end()),
                 detail::engine_grid(depth));
    eng_->tighten_hulls();
    if (eng_->empty()) return;
    hulls_ = eng_->root_hulls();
    resolution_ = 0.0;
    for (const auto& iv : hulls_) resolution_ = std::max(resolution_, iv.width());

    // deterministic probes: consistent series found by the refutation
    // search, biased into random sub-intervals so they differ, then
    // re-verified end to end by the full membership checker
    std::mt19937_64 rng(0x5851f42d4c957f2dULL ^
                        static_cast<unsigned long long>(n_));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int probe = 0; probe < 12 && probes_[0].size() < 4; ++probe) {
      std::vector<std::pair<int, detail::Iv>> pin;
      if (probe > 0)
        for (int k = 0; k < n_; ++k) {
          if (unif(rng) > 0.25) continue;
          const auto& d = hulls_[k];
          const double m = 0.5 * (d.lo + d.hi);
          pin.push_back({k, unif(rng) < 0.5 ? detail::Iv{d.lo, m}
                                            : detail::Iv{m, d.hi}});
        }
      const auto t = eng_->consistent_series(pin);
      if (!t) continue;
      CnInstance inst;
      inst.data.assign(data.begin(), data.end());
      inst.alloc.resize(n_);
      for (int k = 0; k < n_; ++k)
        inst.alloc[k] = {eng_->bundle_at(0, k, (*t)[k]),
                         eng_->bundle_at(1, k, (*t)[k])};
      if (!cn_membership(inst)) continue;
      for (int h = 0; h < 2; ++h) {
        std::vector<DemandObservation> series;
        series.reserve(n_);
        for (int k = 0; k < n_; ++k)
          series.push_back({k, PriceVector(data[k].p / data[k].w[h]),
                            inst.alloc[k][h]});
        probes_[h].emplace_back(series);
      }
    }
  }

  TriState query(int h, const Bundle& x, const Bundle& y) const {
    if (h < 0 || h > 1)
      throw ConfigError("eq_revealed_preferred: individual must be 0 or 1");
    if (x.size() != 2 || y.size() != 2)
      throw DimensionMismatch("eq_revealed_preferred: bundles must have 2 goods");
    if (dominates(x, y)) return {TriBool::True, 0.0};
    if (n_ == 0) return {TriBool::False, 0.0};
    if (eng_->empty()) return {TriBool::True, 0.0};  // no consistent series
    if (eng_->chain_certainly_prefers(h, x, y, hulls_))
      return {TriBool::True, 0.0};
    for (const auto& g : probes_[h])
      if (!strictly_revealed_preferred(g, x, y)) return {TriBool::False, 0.0};
    return {TriBool::Unknown, resolution_};
  }

  const ConsistentAllocations* engine() const {
    return eng_ ? &*eng_ : nullptr;
  }

 private:
  int n_ = 0;
  std::optional<ConsistentAllocations> eng_;
  std::vector<detail::Iv> hulls_;
  std::array<std::vector<RevealedGraph>, 2> probes_;
  double resolution_ = 0.0;
};

// Must individual h rank x strictly above y in every preference profile
// consistent with the data? True only with a certificate valid for all
// consistent allocation series; False with a concrete consistent series in
// which no revealed chain forces the ranking; Unknown otherwise, reporting
// the finest parameter resolution reached.
inline TriState eq_revealed_preferred(std::span<const EconomyObservation> data,
                                      int h, const Bundle& x, const Bundle& y,
                                      int depth) {
  return EqPreferenceContext(data, depth).query(h, x, y);
}

// Outer bounds on individual h's revealed demand at normalised price p
// (income 1), across all preference profiles consistent with the economy
// data. A budget point is excluded only when a chain from a
// certainly-affordable observation reaches an observation whose every
// candidate bundle sits above the point, or whose budget set contains the
// point strictly.
inline Region eq_revealed_demand_bounds(
    std::span<const EconomyObservation> data, int h, const PriceVector& p,
    int depth) {
  if (h < 0 || h > 1)
    throw ConfigError("eq_revealed_demand_bounds: individual must be 0 or 1");
  std::vector<Bundle> dominators;
  std::vector<detail::BudgetBlocker> blockers;
  if (!data.empty()) {
    ConsistentAllocations eng({data.begin(), data.end()},
                              detail::engine_grid(depth));
    eng.tighten_hulls();
    if (!eng.empty()) {
      const auto hulls = eng.root_hulls();
      const int n = eng.size();
      DynBitset afford(n);
      for (int i = 0; i < n; ++i)
        if (p.dot(eng.bundle_hull(h, i, hulls[i]).hi) <= 1.0) afford.set(i);
      DynBitset reach = eng.certain_successors(h, afford, hulls);
      reach |= afford;
      for (auto j = reach.find_first(); j != DynBitset::npos;
           j = reach.find_next(j)) {
        const int ji = static_cast<int>(j);
        dominators.push_back(eng.bundle_hull(h, ji, hulls[ji]).lo);
        blockers.push_back({data[ji].p, data[ji].w[h]});
      }
    }
  }
  return detail::budget_segment_cover(p, dominators, depth, blockers);
}

// ------------------------------------------------------------------------
// Approximate equilibrium set

struct EquilibriumSet {
  int grid_res = 0;
  std::vector<int> indices;  // i -> price (i/grid_res, 1 - i/grid_res)
  PriceVector price(int idx) const {
    PriceVector p(2);
    p << static_cast<double>(idx) / grid_res,
        1.0 - static_cast<double>(idx) / grid_res;
    return p;
  }
  // width of the interval hull of the returned prices, in simplex units
  double interval_width() const {
    if (indices.empty()) return 0.0;
    const auto [mn, mx] = std::minmax_element(indices.begin(), indices.end());
    return static_cast<double>(*mx - *mn) / grid_res;
  }
};

// How a candidate allocation is disqualified by revealed preference.
// Joint: a single profile of affordable alternatives must beat every
// individual's bundle at once. PerIndividual: one individual with an
// affordable certified-better alternative suffices (the usual Walrasian
// blocking; strictly stronger pruning, still sound since an equilibrium
// allocation leaves no individual improvable).
enum class BlockingRule { Joint, PerIndividual };

// Interior grid prices on the two-good simplex at which the observed
// two-person economy could clear markets to within eps. A price survives
// when some allocation (x1, x2) with both budgets exact and
// |x1 + x2 - E| <= eps per coordinate escapes the blocking rule. Candidates
// are parameterised by individual 1's position s along their budget segment
// and a clearing-slack scalar g orthogonal to p (Walras' law pins the slack
// direction); a branch-and-bound over (s, g) either finds an unblocked cell
// or proves every candidate blocked. Exclusions rest on sound certificates,
// so any price where the generating economy clears within eps — in
// particular its grid-rounded equilibrium — survives at every n.
inline EquilibriumSet approx_equilibrium_set(
    std::span<const EconomyObservation> data,
    const std::vector<Vec>& endowments, int grid_res, double eps, int depth,
    BlockingRule rule = BlockingRule::Joint) {
  if (endowments.size() != 2 || endowments[0].size() != 2 ||
      endowments[1].size() != 2)
    throw UnsupportedDimensions(
        "approx_equilibrium_set: need two individuals, two goods");
  for (const auto& e : endowments)
    if (!all_nonnegative(e) || e.maxCoeff() <= 0.0)
      throw ConfigError(
          "approx_equilibrium_set: endowments must be nonnegative, nonzero");
  if (grid_res < 2)
    throw ConfigError("approx_equilibrium_set: grid too coarse");
  if (!(eps > 0.0))
    throw ConfigError("approx_equilibrium_set: eps must be positive");

  std::optional<ConsistentAllocations> eng;
  if (!data.empty()) {
    eng.emplace(std::vector<EconomyObservation>(data.begin(), data.end()),
                detail::engine_grid(depth));
    eng->tighten_hulls();
    if (eng->empty()) eng.reset();  // no pruning power; keep every price
  }
  std::vector<detail::Iv> hulls;
  if (eng) hulls = eng->root_hulls();

  const Vec E = endowments[0] + endowments[1];
  EquilibriumSet out;
  out.grid_res = grid_res;
  const int bb_depth = std::clamp(depth, 4, 11);

  for (int gi = 1; gi < grid_res; ++gi) {
    PriceVector p(2);
    p << static_cast<double>(gi) / grid_res,
        1.0 - static_cast<double>(gi) / grid_res;
    if (!eng) {
      out.indices.push_back(gi);
      continue;
    }

    // certified blockers per individual: observations chain-reachable from
    // one whose every candidate bundle is affordable at this price. A
    // candidate allocation cell is blocked when it sits strictly inside a
    // reachable observation's budget (that observation's choice beats it)
    // or strictly below a reachable observation's candidate box.
    const int n = eng->size();
    struct Blocker {
      std::array<double, 2> price;
      double income;
      std::array<double, 2> floor;
    };
    std::array<std::vector<Blocker>, 2> blk;
    for (int h = 0; h < 2; ++h) {
      const double budget = p.dot(endowments[h]);
      DynBitset afford(n);
      for (int i = 0; i < n; ++i)
        if (p.dot(eng->bundle_hull(h, i, hulls[i]).hi) <= budget)
          afford.set(i);
      DynBitset reach = eng->certain_successors(h, afford, hulls);
      reach |= afford;
      for (auto j = reach.find_first(); j != DynBitset::npos;
           j = reach.find_next(j)) {
        const int ji = static_cast<int>(j);
        const Box b = eng->bundle_hull(h, ji, hulls[ji]);
        blk[h].push_back({{data[ji].p[0], data[ji].p[1]},
                          data[ji].w[h],
                          {b.lo[0], b.lo[1]}});
      }
    }

    // individual 1's budget segment, allowing the eps clearing slack
    const double w0 = p.dot(endowments[0]);
    const double alo = std::max(0.0, (w0 - p[1] * (E[1] + eps)) / p[0]);
    const double ahi = std::min(E[0] + eps, w0 / p[0]);
    if (alo > ahi) continue;
    const std::array<double, 2> q0{alo, (w0 - p[0] * alo) / p[1]};
    const std::array<double, 2> q1{ahi - alo, -p[0] * (ahi - alo) / p[1]};
    // slack direction orthogonal to p: delta(g) = g * (p2, -p1)
    const double gmax = eps / std::max(p[0], p[1]);

    // does some candidate in s x g survive? unresolved cells count as alive
    auto alive = [&](auto&& self, double s0, double s1, double g0, double g1,
                     int d) -> bool {
      std::array<double, 2> p1lo, p1hi, p2lo, p2hi;
      const std::array<double, 2> dlo{g0 * p[1], -g1 * p[0]};
      const std::array<double, 2> dhi{g1 * p[1], -g0 * p[0]};
      for (int l = 0; l < 2; ++l) {
        const double u = q0[l] + s0 * q1[l], v = q0[l] + s1 * q1[l];
        p1lo[l] = std::min(u, v);
        p1hi[l] = std::max(u, v);
        p2lo[l] = E[l] + dlo[l] - p1hi[l];
        p2hi[l] = E[l] + dhi[l] - p1lo[l];
      }
      if (p2hi[0] < 0.0 || p2hi[1] < 0.0) return false;  // infeasible cell
      // blocked over the whole cell iff the hi corner is (budget sets and
      // lower sets are downward closed)
      bool cell_blocked[2];
      for (int h = 0; h < 2; ++h) {
        const auto& hi = h == 0 ? p1hi : p2hi;
        cell_blocked[h] = false;
        for (const auto& c : blk[h]) {
          if (c.price[0] * hi[0] + c.price[1] * hi[1] < c.income ||
              (c.floor[0] > hi[0] && c.floor[1] > hi[1])) {
            cell_blocked[h] = true;
            break;
          }
        }
      }
      if (rule == BlockingRule::Joint ? (cell_blocked[0] && cell_blocked[1])
                                      : (cell_blocked[0] || cell_blocked[1]))
        return false;
      bool lo_blocked[2] = {false, false};
      const bool lo_feasible = p2lo[0] >= 0.0 && p2lo[1] >= 0.0;
      for (int h = 0; h < 2 && lo_feasible; ++h) {
        const auto& lo = h == 0 ? p1lo : p2lo;
        for (const auto& c : blk[h])
          if (c.price[0] * lo[0] + c.price[1] * lo[1] < c.income ||
              (c.floor[0] > lo[0] && c.floor[1] > lo[1])) {
            lo_blocked[h] = true;
            break;
          }
      }
      const bool clean =
          lo_feasible &&
          (rule == BlockingRule::Joint ? !(lo_blocked[0] && lo_blocked[1])
                                       : !(lo_blocked[0] || lo_blocked[1]));
      if (clean || d == 0) return true;
      const double sm = 0.5 * (s0 + s1), gm = 0.5 * (g0 + g1);
      return self(self, s0, sm, g0, gm, d - 1) ||
             self(self, sm, s1, g0, gm, d - 1) ||
             self(self, s0, sm, gm, g1, d - 1) ||
             self(self, sm, s1, gm, g1, d - 1);
    };
    if (alive(alive, 0.0, 1.0, -gmax, gmax, bb_depth))
      out.indices.push_back(gi);
  }
  return out;
}

// ------------------------------------------------------------------------
// Observational equivalence probe

struct Assumption1Witness {
  PriceVector p;
  Vec incomes;
  Vec demand_a, demand_b;
};

// Search sampled (price, income) points for one where the two economies'
// aggregate demands differ; nullopt means they agreed everywhere sampled.
inline std::optional<Assumption1Witness> check_assumption1(
    const Economy& a, const Economy& b, const SequenceConfig& cfg, int n) {
  if (a.num_goods() != b.num_goods() || a.num_inds() != b.num_inds() ||
      a.income_box != b.income_box)
    throw DimensionMismatch("check_assumption1: economies differ in shape");
  constexpr double kTolAgree = 1e-6;
  const int L = a.num_goods();
  const int H = a.num_inds();
  auto joint = cfg.price_box;
  const auto& incomes_box =
      cfg.income_box.empty() ? a.income_box : cfg.income_box;
  joint.insert(joint.end(), incomes_box.begin(), incomes_box.end());
  detail::validate_box(joint, "check_assumption1");

  std::mt19937_64 rng(cfg.seed);
  const auto rows = detail::sample_box(joint, n, cfg, 0, &rng);
  for (int k = 0; k < n; ++k) {
    const PriceVector p = rows[k].head(L);
    const Vec w = rows[k].tail(H);
    const Bundle da = aggregate_demand(a, p, w);
    const Bundle db = aggregate_demand(b, p, w);
    if ((da - db).norm() > kTolAgree)
      return Assumption1Witness{p, w, da, db};
  }
  return std::nullopt;
}

}  // namespace revpref
