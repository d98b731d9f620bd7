// Revealed-preference analysis of income-normalised demand data: the strict
// revealed-preference graph and its transitive closure (maintained
// incrementally), SARP checking with an arithmetically re-checkable witness,
// queries of the induced relation, outer bounds on the revealed demand set,
// and inference from binary choice data.
#pragma once

#include <revpref/common.hpp>
#include <revpref/feasibility.hpp>
#include <revpref/prefs.hpp>
#include <revpref/sequences.hpp>

#include <boost/dynamic_bitset.hpp>

#include <optional>
#include <span>
#include <vector>

namespace revpref {

using DynBitset = boost::dynamic_bitset<>;

// Strict revealed preference between observations: i -> j when observation
// i's budget could afford x_j with a strict margin (p_i.x_j < p_i.x_i). The
// closure row reach(i) is the set of observations i outranks through chains.
class RevealedGraph {
 public:
  RevealedGraph() = default;
  explicit RevealedGraph(std::span<const DemandObservation> data) {
    for (const auto& o : data) extend(o);
  }

  // Append one observation and update edges + closure incrementally. The
  // closure of the old graph is already transitive, so a single pass over
  // old rows suffices even when the new node closes a cycle.
  void extend(const DemandObservation& o) {
    const double spend = o.p.dot(o.x);
    if (std::abs(spend - 1.0) > kBudgetTolInput)
      throw MalformedDataset("revealed graph: observation not income-normalised");
    const int v = size();
    const int n = v + 1;
    obs_.push_back(o);
    for (auto& row : edge_) row.resize(n);
    for (auto& row : reach_) row.resize(n);
    edge_.emplace_back(n);
    reach_.emplace_back(n);

    DynBitset preds(n);  // direct predecessors of v
    for (int i = 0; i < v; ++i) {
      const auto& oi = obs_[i];
      if (strict_lt(oi.p.dot(o.x), oi.p.dot(oi.x))) {
        edge_[i].set(v);
        preds.set(i);
      }
      if (strict_lt(o.p.dot(oi.x), spend)) edge_[v].set(i);
    }

    DynBitset& rv = reach_[v];
    rv = edge_[v];
    for (auto j = edge_[v].find_first(); j != DynBitset::npos;
         j = edge_[v].find_next(j))
      rv |= reach_[j];
    if (rv.intersects(preds)) rv.set(v);  // v lies on a cycle

    DynBitset add = rv;
    add.set(v);
    for (int u = 0; u < v; ++u)
      if (preds.test(u) || reach_[u].intersects(preds)) reach_[u] |= add;
  }

  int size() const { return static_cast<int>(obs_.size()); }
  const DemandObservation& obs(int i) const { return obs_[i]; }
  const std::vector<DemandObservation>& observations() const { return obs_; }
  bool edge(int i, int j) const { return edge_[i].test(j); }
  bool reachable(int i, int j) const { return reach_[i].test(j); }
  const DynBitset& reach_row(int i) const { return reach_[i]; }

 private:
  std::vector<DemandObservation> obs_;
  std::vector<DynBitset> edge_;
  std::vector<DynBitset> reach_;
};

struct SarpResult {
  bool holds = true;
  // On failure: observation indices i_1,...,i_m (0-based) with pairwise
  // distinct bundles where each weakly reveals the next and the last weakly
  // reveals the first.
  std::vector<int> witness_cycle;
};

// SARP: no cycle of weak revealed preference among observations with
// distinct bundles. Observations sharing an identical bundle are collapsed
// into one node first (a chain may use each bundle once).
inline SarpResult check_sarp(std::span<const DemandObservation> data) {
  const int n = static_cast<int>(data.size());
  std::vector<double> spend(n);
  for (int i = 0; i < n; ++i) {
    spend[i] = data[i].p.dot(data[i].x);
    if (data[i].p.size() != data[i].x.size())
      throw MalformedDataset("check_sarp: dimension mismatch");
    if (std::abs(spend[i] - 1.0) > kBudgetTolInput)
      throw MalformedDataset("check_sarp: observation not income-normalised");
  }

  // bundle-equality classes
  std::vector<int> cls(n, -1);
  std::vector<int> rep;  // class -> first observation
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < static_cast<int>(rep.size()); ++c)
      if (same_bundle(data[i].x, data[rep[c]].x)) {
        cls[i] = c;
        break;
      }
    if (cls[i] < 0) {
      cls[i] = static_cast<int>(rep.size());
      rep.push_back(i);
    }
  }
  const int m = static_cast<int>(rep.size());

  // weak revealed edge between classes, remembering a realising observation
  std::vector<std::vector<int>> adj(m);        // class -> successor classes
  std::vector<std::vector<int>> realiser(m, std::vector<int>(m, -1));
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < m; ++c) {
      if (c == cls[i] || realiser[cls[i]][c] >= 0) continue;
      if (weak_le(data[i].p.dot(data[rep[c]].x), spend[i])) {
        realiser[cls[i]][c] = i;
        adj[cls[i]].push_back(c);
      }
    }

  // iterative three-colour DFS; a back edge closes a violating cycle
  std::vector<int> colour(m, 0), parent(m, -1), parent_edge_from(m, -1);
  for (int s = 0; s < m; ++s) {
    if (colour[s] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{s, 0}};
    colour[s] = 1;
    while (!stack.empty()) {
      auto& [u, it] = stack.back();
      if (it < adj[u].size()) {
        const int w = adj[u][it++];
        if (colour[w] == 0) {
          colour[w] = 1;
          parent[w] = u;
          stack.emplace_back(w, 0);
        } else if (colour[w] == 1) {
          // cycle w -> ... -> u -> w in class space; emit observation indices
          std::vector<int> cyc_cls{u};
          for (int q = u; q != w; q = parent[q]) cyc_cls.push_back(parent[q]);
          std::reverse(cyc_cls.begin(), cyc_cls.end());  // w ... u
          SarpResult res;
          res.holds = false;
          for (std::size_t t = 0; t < cyc_cls.size(); ++t) {
            const int from = cyc_cls[t];
            const int to = cyc_cls[(t + 1) % cyc_cls.size()];
            res.witness_cycle.push_back(realiser[from][to]);
          }
          return res;
        }
      } else {
        colour[u] = 2;
        stack.pop_back();
      }
    }
  }
  return SarpResult{};
}

// x is strictly revealed preferred to y when x dominates y outright, or a
// chain of observations links the monotone cone below x to the cone above y.
// A chain with no strict edge (a single observation sandwiched between x and
// y) counts only if one of the sandwiching dominances is strict.
inline bool strictly_revealed_preferred(const RevealedGraph& g, const Bundle& x,
                                        const Bundle& y) {
  if (dominates(x, y)) return true;
  const int n = g.size();
  if (n == 0) return false;

  DynBitset above_y(n);  // j with x_j >= y
  for (int j = 0; j < n; ++j)
    if (leq(y, g.obs(j).x)) above_y.set(j);
  if (above_y.none()) return false;

  for (int i = 0; i < n; ++i) {
    const Bundle& xi = g.obs(i).x;
    if (!leq(xi, x)) continue;  // need x >= x_i
    if (above_y.test(i) &&
        (!same_bundle(x, xi) || !same_bundle(xi, y)))
      return true;  // x >= x_i >= y with a strict end
    if (g.reach_row(i).intersects(above_y)) return true;
  }
  return false;
}

// Smallest prefix length of the generated dataset at which x is revealed
// preferred to y; 0 when dominance needs no data; nullopt if n_max is not
// enough. Requires the underlying preference to rank x strictly above y.
inline std::optional<int> detection_index(const PreferenceSpec& spec,
                                          const SequenceConfig& cfg,
                                          const Bundle& x, const Bundle& y,
                                          int n_max) {
  if (prefers(spec, x, y) == PrefOrdering::Indifferent)
    throw IndifferentQuery("detection_index: x and y are indifferent");
  if (dominates(x, y)) return 0;
  const auto data = gen_demand_dataset(spec, cfg, n_max);
  RevealedGraph g;
  for (int n = 1; n <= n_max; ++n) {
    g.extend(data[n - 1]);
    if (strictly_revealed_preferred(g, x, y)) return n;
  }
  return std::nullopt;
}

namespace detail {

// A budget set whose owner's choice certifiably beats anything strictly
// inside it.
struct BudgetBlocker {
  PriceVector p;
  double w = 0.0;
};

// Shared box-cover routine for demand sets restricted to the normalised
// budget hyperplane {z : p.z = 1, z >= 0}. A budget point z is excluded when
// some dominator bundle d satisfies d >= z, or when z lies strictly inside a
// blocker's budget set (the blocking observation's choice was made with z
// affordable and passed over). Dominators are supplied by the caller
// (single-observation cones cannot reach the hyperplane: z <= d with
// p.z = 1 and p.d <= 1 forces z = d, so only chain endpoints qualify).
inline Region budget_segment_cover(const PriceVector& p,
                                   const std::vector<Bundle>& dominators,
                                   int depth,
                                   const std::vector<BudgetBlocker>& blockers =
                                       {}) {
  const int L = static_cast<int>(p.size());
  if (L < 2) throw UnsupportedDimensions("budget cover: need L >= 2");
  if (!all_positive(p))
    throw std::invalid_argument("budget cover: prices must be positive");

  // parameterise by the first L-1 coordinates; the last is pinned by p.z = 1
  Vec plo = Vec::Zero(L - 1), phi(L - 1);
  for (int l = 0; l < L - 1; ++l) phi[l] = 1.0 / p[l];

  auto bundle_box = [&](const Box& pb, Vec& blo, Vec& bhi) {
    blo.resize(L);
    bhi.resize(L);
    double rest_lo = 1.0, rest_hi = 1.0;
    for (int l = 0; l < L - 1; ++l) {
      blo[l] = pb.lo[l];
      bhi[l] = pb.hi[l];
      rest_lo -= p[l] * pb.hi[l];
      rest_hi -= p[l] * pb.lo[l];
    }
    blo[L - 1] = rest_lo / p[L - 1];
    bhi[L - 1] = rest_hi / p[L - 1];
  };

  Vec blo, bhi;
  auto classify = [&](const Box& pb) {
    bundle_box(pb, blo, bhi);
    if (bhi[L - 1] < 0.0) return BoxClass::AllOut;  // misses the simplex
    blo[L - 1] = std::max(blo[L - 1], 0.0);
    bool maybe = false;
    for (const auto& d : dominators) {
      if (leq(bhi, d)) return BoxClass::AllOut;  // d >= every box point
      if (leq(blo, d)) maybe = true;             // d >= some box point
    }
    for (const auto& b : blockers) {
      if (b.p.dot(bhi) < b.w) return BoxClass::AllOut;  // box strictly inside
      if (b.p.dot(blo) < b.w) maybe = true;
    }
    return maybe ? BoxClass::Split : BoxClass::AllIn;
  };

  Region param = branch_and_bound_cover(Box(plo, phi), classify, depth);
  Region out;
  out.boxes.reserve(param.boxes.size());
  for (const auto& rb : param.boxes) {
    bundle_box(rb.box, blo, bhi);
    blo[L - 1] = std::max(blo[L - 1], 0.0);
    bhi[L - 1] = std::max(bhi[L - 1], 0.0);
    out.boxes.push_back({Box(blo, bhi), rb.status});
  }
  return out;
}

}  // namespace detail

// Outer approximation of the revealed demand set at normalised price p: the
// budget points not yet revealed-dominated by an affordable alternative.
// Dominating chains start at an observation affordable at p; the excluded
// points either sit below a reached observation's bundle or strictly inside
// a reached observation's budget set.
inline Region revealed_demand_bounds(const RevealedGraph& g,
                                     const PriceVector& p, int depth) {
  const int n = g.size();
  DynBitset flagged(std::max(n, 1));
  for (int i = 0; i < n; ++i)
    if (p.dot(g.obs(i).x) <= 1.0) {
      flagged.set(i);
      flagged |= g.reach_row(i);
    }
  std::vector<Bundle> dominators;
  std::vector<detail::BudgetBlocker> blockers;
  for (auto j = flagged.find_first(); j != DynBitset::npos;
       j = flagged.find_next(j)) {
    dominators.push_back(g.obs(static_cast<int>(j)).x);
    blockers.push_back({g.obs(static_cast<int>(j)).p, 1.0});
  }
  return detail::budget_segment_cover(p, dominators, depth, blockers);
}

// --------------------------------------------------------------------------
// Binary choice data

struct BinaryChoiceObservation {
  Bundle chosen;
  Bundle rejected;
};

enum class BinaryVerdict { MustPrefer, MustDisprefer, Undetermined };

// What a monotone rational chooser's recorded picks force about x vs y:
// choosing c over r pins every bundle above c over every bundle below r, as
// long as one of the two comparisons is strict.
inline BinaryVerdict binary_choice_infer(
    std::span<const BinaryChoiceObservation> choices, const Bundle& x,
    const Bundle& y) {
  if (dominates(x, y)) return BinaryVerdict::MustPrefer;
  if (dominates(y, x)) return BinaryVerdict::MustDisprefer;
  if (same_bundle(x, y)) return BinaryVerdict::Undetermined;
  for (const auto& c : choices)
    if (leq(c.chosen, x) && leq(y, c.rejected) &&
        (!same_bundle(c.chosen, x) || !same_bundle(y, c.rejected)))
      return BinaryVerdict::MustPrefer;
  for (const auto& c : choices)
    if (leq(c.chosen, y) && leq(x, c.rejected) &&
        (!same_bundle(c.chosen, y) || !same_bundle(x, c.rejected)))
      return BinaryVerdict::MustDisprefer;
  return BinaryVerdict::Undetermined;
}

}  // namespace revpref
