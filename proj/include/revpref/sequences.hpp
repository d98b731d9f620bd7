// Deterministic sampling of price/income sequences (Halton low-discrepancy
// or seeded uniform) and generation of demand datasets from a preference
// spec. Both generators have the prefix property: the first n points of a
// longer run equal an n-point run with the same config.
#pragma once

#include <revpref/common.hpp>
#include <revpref/prefs.hpp>

#include <random>
#include <vector>

namespace revpref {

enum class Generator { UniformRandom, Halton };

// price_box/income_box are per-coordinate [lo, hi] intervals. The Halton
// sequence ignores the seed (it is deterministic from index 1); the seed
// drives UniformRandom only.
struct SequenceConfig {
  std::uint64_t seed = 0;
  Generator generator = Generator::Halton;
  std::vector<std::pair<double, double>> price_box;
  std::vector<std::pair<double, double>> income_box;  // one per individual
};

// One observed budget/choice pair, income-normalised: p.x = 1.
struct DemandObservation {
  int k = 0;  // 1-based index in the sequence
  PriceVector p;
  Bundle x;
};

// One aggregate observation: prices, individual incomes, aggregate demand.
// Satisfies p.D = sum_h w_h up to kBudgetTolEconomy.
struct EconomyObservation {
  int k = 0;
  PriceVector p;
  Vec w;   // incomes, one per individual
  Vec D;   // aggregate demand
};

namespace detail {

inline double radical_inverse(std::uint64_t index, unsigned base) {
  double f = 1.0 / base, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return r;
}

inline unsigned nth_prime(int n) {  // 0-based: 2, 3, 5, ...
  static const unsigned table[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                   31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
                                   73, 79, 83, 89, 97, 101, 103, 107, 109, 113};
  if (n < 0 || n >= static_cast<int>(std::size(table)))
    throw UnsupportedDimensions("sequence: too many dimensions for Halton");
  return table[n];
}

inline void validate_box(const std::vector<std::pair<double, double>>& box,
                         const char* what) {
  if (box.empty()) throw InvalidBox(std::string(what) + ": empty box");
  for (const auto& [lo, hi] : box)
    if (!(lo > 0.0) || !(hi >= lo))
      throw InvalidBox(std::string(what) + ": need 0 < lo <= hi");
}

// Points k = 1..n in the product box; dim_offset shifts the Halton bases so
// independent blocks (prices vs incomes) use disjoint bases.
inline std::vector<Vec> sample_box(
    const std::vector<std::pair<double, double>>& box, int n,
    const SequenceConfig& cfg, int dim_offset, std::mt19937_64* shared_rng) {
  const int d = static_cast<int>(box.size());
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int k = 1; k <= n; ++k) {
    Vec v(d);
    for (int i = 0; i < d; ++i) {
      double u;
      if (cfg.generator == Generator::Halton) {
        u = radical_inverse(static_cast<std::uint64_t>(k),
                            nth_prime(dim_offset + i));
      } else {
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        u = dist(*shared_rng);
      }
      v[i] = box[i].first + u * (box[i].second - box[i].first);
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

inline std::vector<PriceVector> gen_prices(const SequenceConfig& cfg, int n) {
  detail::validate_box(cfg.price_box, "gen_prices");
  std::mt19937_64 rng(cfg.seed);
  return detail::sample_box(cfg.price_box, n, cfg, 0, &rng);
}

// n observations of the spec's demand at sampled prices, income normalised
// to 1, so every observation satisfies p.x = 1 exactly up to rounding.
inline std::vector<DemandObservation> gen_demand_dataset(
    const PreferenceSpec& spec, const SequenceConfig& cfg, int n) {
  if (static_cast<int>(cfg.price_box.size()) != spec.num_goods())
    throw DimensionMismatch("gen_demand_dataset: price_box dimension");
  const auto prices = gen_prices(cfg, n);
  std::vector<DemandObservation> out;
  out.reserve(prices.size());
  for (int k = 0; k < static_cast<int>(prices.size()); ++k)
    out.push_back({k + 1, prices[k], demand(spec, prices[k], 1.0)});
  return out;
}

}  // namespace revpref
