// Parametric preference families (Cobb-Douglas, CES): utility evaluation,
// closed-form Walrasian demand, and tolerance-aware pairwise comparison.
#pragma once

#include <revpref/common.hpp>

#include <cmath>
#include <utility>

namespace revpref {

enum class PrefFamily { CobbDouglas, CES };

// A concrete strictly monotone, strictly convex preference ordering on the
// positive orthant. alpha is a strictly positive weight vector summing to 1;
// rho < 1, rho != 0 is the CES curvature (rho -> 0 degenerates to
// Cobb-Douglas, which is its own family here).
struct PreferenceSpec {
  PrefFamily family = PrefFamily::CobbDouglas;
  Vec alpha;
  double rho = 0.0;  // meaningful for CES only

  static PreferenceSpec cobb_douglas(Vec alpha) {
    validate_alpha(alpha);
    return PreferenceSpec{PrefFamily::CobbDouglas, std::move(alpha), 0.0};
  }

  static PreferenceSpec ces(Vec alpha, double rho) {
    validate_alpha(alpha);
    if (!(rho < 1.0) || rho == 0.0)
      throw std::invalid_argument("ces: rho must satisfy rho < 1, rho != 0");
    return PreferenceSpec{PrefFamily::CES, std::move(alpha), rho};
  }

  int num_goods() const { return static_cast<int>(alpha.size()); }

 private:
  static void validate_alpha(const Vec& alpha) {
    if (alpha.size() < 2)
      throw std::invalid_argument("preference: need at least two goods");
    if (!all_positive(alpha))
      throw std::invalid_argument("preference: alpha must be positive");
    if (std::abs(alpha.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("preference: alpha must sum to 1");
  }
};

enum class PrefOrdering { StrictlyPreferred, Indifferent, StrictlyDispreferred };

inline double utility(const PreferenceSpec& spec, const Bundle& x) {
  if (x.size() != spec.alpha.size())
    throw DimensionMismatch("utility: bundle dimension mismatch");
  for (Eigen::Index l = 0; l < x.size(); ++l)
    if (!(x[l] > 0.0))
      throw NonPositiveBundle("utility: bundle must be strictly positive");

  if (spec.family == PrefFamily::CobbDouglas) {
    // prod x_l^alpha_l, evaluated in log space for stability
    double s = 0.0;
    for (Eigen::Index l = 0; l < x.size(); ++l)
      s += spec.alpha[l] * std::log(x[l]);
    return std::exp(s);
  }
  double s = 0.0;
  for (Eigen::Index l = 0; l < x.size(); ++l)
    s += spec.alpha[l] * std::pow(x[l], spec.rho);
  return std::pow(s, 1.0 / spec.rho);
}

// Utility-maximising bundle on the budget set {x : p.x <= w}. Closed form
// for both families; spending the whole budget is optimal by monotonicity.
inline Bundle demand(const PreferenceSpec& spec, const PriceVector& p,
                     double w) {
  if (p.size() != spec.alpha.size())
    throw DimensionMismatch("demand: price dimension mismatch");
  if (!all_positive(p) || !(w > 0.0))
    throw std::invalid_argument("demand: prices and income must be positive");

  const Eigen::Index L = p.size();
  Bundle x(L);
  if (spec.family == PrefFamily::CobbDouglas) {
    for (Eigen::Index l = 0; l < L; ++l) x[l] = spec.alpha[l] * w / p[l];
    return x;
  }
  // CES: x_l proportional to (alpha_l / p_l)^(1/(1-rho)), scaled to exhaust w
  const double sigma = 1.0 / (1.0 - spec.rho);
  double denom = 0.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    x[l] = std::pow(spec.alpha[l] / p[l], sigma);
    denom += p[l] * x[l];
  }
  for (Eigen::Index l = 0; l < L; ++l) x[l] *= w / denom;
  return x;
}

// Trichotomous comparison with a relative indifference band: utilities
// within kTolIndiff of each other count as indifferent.
inline PrefOrdering prefers(const PreferenceSpec& spec, const Bundle& x,
                            const Bundle& y) {
  const double ux = utility(spec, x);
  const double uy = utility(spec, y);
  const double band = kTolIndiff * std::max(std::abs(ux), std::abs(uy));
  if (std::abs(ux - uy) <= band) return PrefOrdering::Indifferent;
  return ux > uy ? PrefOrdering::StrictlyPreferred
                 : PrefOrdering::StrictlyDispreferred;
}

}  // namespace revpref
