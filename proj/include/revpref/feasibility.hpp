// Linear feasibility machinery: systems with strict/weak/equality rows, a
// dense two-phase simplex (Bland's rule, so it terminates), exact
// Fourier-Motzkin elimination, and a conservative branch-and-bound box cover
// used to outer-approximate nonconvex target sets.
#pragma once

#include <revpref/common.hpp>

#include <algorithm>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace revpref {

// Rows are (a, b): a.z < b (strict), a.z <= b (weak), a.z = b (eq).
struct LinearSystem {
  int dimension = 0;
  std::vector<std::pair<Vec, double>> strict;
  std::vector<std::pair<Vec, double>> weak;
  std::vector<std::pair<Vec, double>> eq;

  explicit LinearSystem(int dim = 0) : dimension(dim) {}
  void add_strict(Vec a, double b) { strict.emplace_back(std::move(a), b); }
  void add_weak(Vec a, double b) { weak.emplace_back(std::move(a), b); }
  void add_eq(Vec a, double b) { eq.emplace_back(std::move(a), b); }
};

enum class LpStatus { Infeasible, Feasible, Optimal, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec point;           // valid for Feasible/Optimal
  double value = 0.0;  // objective, valid for Optimal
};

namespace detail {

// Dense tableau simplex on: maximize c.x st A x (<=|=) b, x >= 0.
// Rows carry their own slack/artificial bookkeeping; Bland's rule keeps the
// pivoting cycle-free, which matters more than speed at these sizes.
class SimplexTableau {
 public:
  static constexpr double kPivotTol = 1e-11;
  static constexpr double kCostTol = 1e-10;

  SimplexTableau(const std::vector<Vec>& rows_a, const std::vector<double>& rows_b,
                 const std::vector<bool>& is_eq, int n_struct)
      : n_struct_(n_struct) {
    const int m = static_cast<int>(rows_a.size());
    // column layout: [structural | slacks | artificials | rhs]
    n_slack_ = 0;
    for (bool e : is_eq)
      if (!e) ++n_slack_;
    int slack_at = n_struct_;
    n_total_ = n_struct_ + n_slack_;
    tab_.assign(m, std::vector<double>(n_total_ + 1, 0.0));
    basis_.assign(m, -1);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n_struct_; ++j) tab_[i][j] = rows_a[i][j];
      tab_[i][n_total_] = rows_b[i];
      if (!is_eq[i]) tab_[i][slack_at++] = 1.0;
    }
    // make rhs nonnegative, then give every row a basic column
    for (int i = 0; i < m; ++i) {
      if (tab_[i][n_total_] < 0.0)
        for (double& v : tab_[i]) v = -v;
    }
    for (int i = 0; i < m; ++i) {
      int sc = slack_column(i, is_eq);
      if (sc >= 0 && tab_[i][sc] > 0.5) {
        basis_[i] = sc;
      } else {
        for (auto& row : tab_) row.insert(row.end() - 1, 0.0);
        tab_[i][n_total_] = 1.0;  // new artificial column sits before rhs
        basis_[i] = n_total_;
        artificial_.push_back(n_total_);
        ++n_total_;
      }
    }
  }

  // Phase 1: drive the artificials to zero. Returns false if the system is
  // infeasible.
  bool phase1() {
    if (artificial_.empty()) return true;
    std::vector<double> cost(n_total_, 0.0);
    for (int a : artificial_) cost[a] = -1.0;
    if (!iterate(cost)) return false;  // cannot be unbounded (cost <= 0)
    double art_sum = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (is_artificial(basis_[i])) art_sum += rhs(static_cast<int>(i));
    if (art_sum > 1e-8) return false;
    purge_artificials();
    return true;
  }

  // Phase 2: maximize the structural objective. Returns nullopt on
  // unboundedness.
  std::optional<double> phase2(const std::vector<double>& struct_cost) {
    std::vector<double> cost(n_total_, 0.0);
    for (int j = 0; j < n_struct_ && j < static_cast<int>(struct_cost.size()); ++j)
      cost[j] = struct_cost[j];
    if (!iterate(cost)) return std::nullopt;
    double v = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (basis_[i] < static_cast<int>(cost.size()))
        v += cost[basis_[i]] * rhs(static_cast<int>(i));
    return v;
  }

  std::vector<double> solution() const {
    std::vector<double> x(n_struct_, 0.0);
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (basis_[i] < n_struct_) x[basis_[i]] = rhs(static_cast<int>(i));
    return x;
  }

 private:
  double rhs(int i) const { return tab_[i][n_total_]; }

  int slack_column(int row, const std::vector<bool>& is_eq) const {
    if (is_eq[row]) return -1;
    for (int j = n_struct_; j < n_struct_ + n_slack_; ++j)
      if (tab_[row][j] > 0.5) return j;
    return -1;
  }

  bool is_artificial(int col) const {
    return std::find(artificial_.begin(), artificial_.end(), col) !=
           artificial_.end();
  }

  // After phase 1, pivot or drop rows so no artificial column stays basic,
  // then forbid them for phase 2 by zeroing.
  void purge_artificials() {
    for (int i = static_cast<int>(basis_.size()) - 1; i >= 0; --i) {
      if (!is_artificial(basis_[i])) continue;
      int piv = -1;
      for (int j = 0; j < n_total_; ++j)
        if (!is_artificial(j) && std::abs(tab_[i][j]) > kPivotTol) {
          piv = j;
          break;
        }
      if (piv >= 0) {
        pivot(i, piv);
      } else {
        tab_.erase(tab_.begin() + i);  // redundant row
        basis_.erase(basis_.begin() + i);
      }
    }
    for (auto& row : tab_)
      for (int a : artificial_) row[a] = 0.0;
    for (int a : artificial_) banned_.push_back(a);
  }

  // Bland's rule simplex loop for "maximize cost.x". Returns false on
  // unboundedness.
  bool iterate(const std::vector<double>& cost) {
    const int max_iter = 20000;
    for (int it = 0; it < max_iter; ++it) {
      // reduced costs: c_j - c_B . B^-1 A_j (tableau is already B^-1 A)
      int enter = -1;
      for (int j = 0; j < n_total_; ++j) {
        if (std::find(banned_.begin(), banned_.end(), j) != banned_.end())
          continue;
        double r = cost[j];
        for (std::size_t i = 0; i < basis_.size(); ++i)
          r -= cost[basis_[i]] * tab_[i][j];
        if (r > kCostTol) {
          enter = j;  // Bland: first improving column
          break;
        }
      }
      if (enter < 0) return true;  // optimal
      int leave = -1;
      double best = 0.0;
      for (std::size_t i = 0; i < basis_.size(); ++i) {
        if (tab_[i][enter] <= kPivotTol) continue;
        double ratio = rhs(static_cast<int>(i)) / tab_[i][enter];
        if (leave < 0 || ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && basis_[i] < basis_[leave])) {
          leave = static_cast<int>(i);
          best = ratio;
        }
      }
      if (leave < 0) return false;  // unbounded direction
      pivot(leave, enter);
    }
    throw NumericalFailure("lp_solve: simplex iteration limit");
  }

  void pivot(int row, int col) {
    double p = tab_[row][col];
    for (double& v : tab_[row]) v /= p;
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      if (static_cast<int>(i) == row) continue;
      double f = tab_[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j <= n_total_; ++j) tab_[i][j] -= f * tab_[row][j];
    }
    basis_[row] = col;
  }

  int n_struct_, n_slack_, n_total_;
  std::vector<std::vector<double>> tab_;
  std::vector<int> basis_;
  std::vector<int> artificial_;
  std::vector<int> banned_;
};

}  // namespace detail

// Solve the system, optionally maximizing objective.z over it. Strict rows
// are tightened to a.z <= b - kTolStrict*max(1,|b|) before solving (an open
// nonempty set thinner than the margin may therefore report Infeasible), and
// any returned point is audited against the original strict rows.
inline LpResult lp_solve(const LinearSystem& sys,
                         const std::optional<Vec>& objective = std::nullopt) {
  const int d = sys.dimension;
  if (d <= 0) throw std::invalid_argument("lp_solve: empty system");
  if (objective && objective->size() != d)
    throw DimensionMismatch("lp_solve: objective dimension");

  // free variables -> u - v with u, v >= 0
  const int n_struct = 2 * d;
  std::vector<Vec> rows_a;
  std::vector<double> rows_b;
  std::vector<bool> is_eq;
  auto push = [&](const Vec& a, double b, bool equality) {
    Vec r(n_struct);
    for (int j = 0; j < d; ++j) {
      r[j] = a[j];
      r[d + j] = -a[j];
    }
    rows_a.push_back(std::move(r));
    rows_b.push_back(b);
    is_eq.push_back(equality);
  };
  for (const auto& [a, b] : sys.weak) push(a, b, false);
  for (const auto& [a, b] : sys.strict)
    push(a, b - kTolStrict * std::max(1.0, std::abs(b)), false);
  for (const auto& [a, b] : sys.eq) push(a, b, true);

  LpResult res;
  if (rows_a.empty()) {
    // unconstrained
    res.point = Vec::Zero(d);
    res.status = objective ? (((*objective).cwiseAbs().maxCoeff() > 0.0)
                                  ? LpStatus::Unbounded
                                  : LpStatus::Optimal)
                           : LpStatus::Feasible;
    return res;
  }

  detail::SimplexTableau tab(rows_a, rows_b, is_eq, n_struct);
  if (!tab.phase1()) {
    res.status = LpStatus::Infeasible;
    return res;
  }

  std::optional<double> value;
  if (objective) {
    std::vector<double> cost(n_struct, 0.0);
    for (int j = 0; j < d; ++j) {
      cost[j] = (*objective)[j];
      cost[d + j] = -(*objective)[j];
    }
    value = tab.phase2(cost);
    if (!value) {
      res.status = LpStatus::Unbounded;
      return res;
    }
  }

  const auto x = tab.solution();
  res.point = Vec(d);
  for (int j = 0; j < d; ++j) res.point[j] = x[j] - x[d + j];
  // strictness audit: the margin must have survived the arithmetic
  for (const auto& [a, b] : sys.strict)
    if (!(a.dot(res.point) < b))
      throw NumericalFailure("lp_solve: strict row violated at solution");
  if (objective) {
    res.status = LpStatus::Optimal;
    res.value = *value;
  } else {
    res.status = LpStatus::Feasible;
  }
  return res;
}

namespace detail {

struct FmRow {
  Vec a;
  double b;
  bool strict;
};

// Drop rows implied by another row with the same direction; detect trivial
// rows. Directions are compared after sup-norm normalisation.
inline std::vector<FmRow> prune_dominated(std::vector<FmRow> rows) {
  std::vector<FmRow> kept;
  for (auto& r : rows) {
    const double n = r.a.size() ? r.a.cwiseAbs().maxCoeff() : 0.0;
    if (n <= 1e-14) {
      // constant row: tautology or contradiction
      if ((r.strict && r.b > 0.0) || (!r.strict && r.b >= 0.0)) continue;
      kept.push_back(std::move(r));  // keep: encodes infeasibility
      continue;
    }
    r.a /= n;
    r.b /= n;
    bool dominated = false;
    for (auto& k : kept) {
      if (k.a.size() != r.a.size()) continue;
      if ((k.a - r.a).cwiseAbs().maxCoeff() > 1e-12) continue;
      // same direction: one of the two is redundant
      const bool k_wins = k.strict ? (k.b <= r.b) : (k.b < r.b || (k.b == r.b && !r.strict));
      if (k_wins) {
        dominated = true;
        break;
      }
      k = r;  // r is at least as tight
      dominated = true;
      break;
    }
    if (!dominated) kept.push_back(std::move(r));
  }
  return kept;
}

}  // namespace detail

// Exact projection: eliminate variable var from a system with no equality
// rows (substitute those away first). Combining a lower bound on z_var with
// an upper bound keeps strictness if either parent was strict.
inline LinearSystem fourier_motzkin_eliminate(const LinearSystem& sys,
                                              int var) {
  if (!sys.eq.empty())
    throw std::invalid_argument(
        "fourier_motzkin_eliminate: substitute equalities first");
  if (var < 0 || var >= sys.dimension)
    throw std::invalid_argument("fourier_motzkin_eliminate: bad variable");

  std::vector<detail::FmRow> pos, neg, zero;
  auto classify = [&](const Vec& a, double b, bool strict) {
    if (a[var] > 1e-14)
      pos.push_back({a, b, strict});
    else if (a[var] < -1e-14)
      neg.push_back({a, b, strict});
    else
      zero.push_back({a, b, strict});
  };
  for (const auto& [a, b] : sys.weak) classify(a, b, false);
  for (const auto& [a, b] : sys.strict) classify(a, b, true);

  auto drop_var = [&](const Vec& a) {
    Vec r(a.size() - 1);
    for (Eigen::Index j = 0, t = 0; j < a.size(); ++j)
      if (j != var) r[t++] = a[j];
    return r;
  };

  std::vector<detail::FmRow> combined;
  for (const auto& z : zero) combined.push_back({drop_var(z.a), z.b, z.strict});
  for (const auto& u : pos) {
    for (const auto& l : neg) {
      // u.a[var] > 0 gives an upper bound, l.a[var] < 0 a lower bound;
      // the positive combination below cancels z_var.
      const double cu = -l.a[var];  // > 0
      const double cl = u.a[var];   // > 0
      Vec a = cu * u.a + cl * l.a;
      double b = cu * u.b + cl * l.b;
      combined.push_back({drop_var(a), b, u.strict || l.strict});
    }
  }

  combined = detail::prune_dominated(std::move(combined));
  LinearSystem out(sys.dimension - 1);
  for (auto& r : combined) {
    if (r.strict)
      out.add_strict(std::move(r.a), r.b);
    else
      out.add_weak(std::move(r.a), r.b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Box covers

struct Box {
  Vec lo, hi;

  Box() = default;
  Box(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size())
      throw InvalidBox("box: dimension mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (lo[i] > hi[i]) throw InvalidBox("box: lo > hi");
  }

  Vec center() const { return 0.5 * (lo + hi); }
  double max_width() const {
    return lo.size() ? (hi - lo).maxCoeff() : 0.0;
  }
  double diagonal() const { return (hi - lo).norm(); }
};

enum class BoxStatus { Undominated, Dominated, Unresolved };
enum class BoxClass { AllIn, AllOut, Split };

struct RegionBox {
  Box box;
  BoxStatus status;
};

// A finite cover of a target set by axis-aligned boxes with disjoint
// interiors. Dominated boxes provably contain no target point; the target is
// always inside the union of Undominated and Unresolved boxes.
struct Region {
  std::vector<RegionBox> boxes;

  // Largest distance between two points of the surviving (non-Dominated)
  // cover; the supremum over a box pair is separable per coordinate.
  double diameter() const {
    double best = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (boxes[i].status == BoxStatus::Dominated) continue;
      for (std::size_t j = i; j < boxes.size(); ++j) {
        if (boxes[j].status == BoxStatus::Dominated) continue;
        double d2 = 0.0;
        const auto& a = boxes[i].box;
        const auto& b = boxes[j].box;
        for (Eigen::Index l = 0; l < a.lo.size(); ++l) {
          const double m =
              std::max(b.hi[l] - a.lo[l], a.hi[l] - b.lo[l]);
          d2 += m * m;
        }
        best = std::max(best, d2);
      }
    }
    return std::sqrt(best);
  }

  // Is the point inside some surviving (non-Dominated) box? Exact closed
  // comparisons: soundness tests rely on no slack here.
  bool contains(const Vec& point) const {
    for (const auto& rb : boxes) {
      if (rb.status == BoxStatus::Dominated) continue;
      bool inside = true;
      for (Eigen::Index l = 0; l < point.size() && inside; ++l)
        inside = rb.box.lo[l] <= point[l] && point[l] <= rb.box.hi[l];
      if (inside) return true;
    }
    return false;
  }
};

// Recursively classify boxes; one depth level bisects every coordinate, so
// cells at depth d have side 2^-d of the initial box. Classification must be
// conservative: AllOut only if certainly no target point, AllIn only if
// certainly all target points. DepthExhausted boxes are reported Unresolved.
template <class F>
Region branch_and_bound_cover(const Box& initial, F&& classify,
                              int max_depth) {
  const int dim = static_cast<int>(initial.lo.size());
  if (dim < 1 || dim > 16)
    throw InvalidBox("branch_and_bound_cover: unsupported box dimension");
  Region region;
  std::function<void(const Box&, int)> recurse = [&](const Box& b, int depth) {
    switch (classify(b)) {
      case BoxClass::AllIn:
        region.boxes.push_back({b, BoxStatus::Undominated});
        return;
      case BoxClass::AllOut:
        region.boxes.push_back({b, BoxStatus::Dominated});
        return;
      case BoxClass::Split:
        if (depth >= max_depth) {
          region.boxes.push_back({b, BoxStatus::Unresolved});
          return;
        }
        const Vec mid = b.center();
        for (int mask = 0; mask < (1 << dim); ++mask) {
          Vec lo = b.lo, hi = mid;
          for (int l = 0; l < dim; ++l)
            if (mask & (1 << l)) {
              lo[l] = mid[l];
              hi[l] = b.hi[l];
            }
          recurse(Box(std::move(lo), std::move(hi)), depth + 1);
        }
        return;
    }
  };
  recurse(initial, 0);
  return region;
}

}  // namespace revpref
