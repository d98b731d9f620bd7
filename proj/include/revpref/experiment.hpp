// Convergence experiments over nested data prefixes, with deterministic,
// byte-stable reports. Each scenario runs one generated sequence and
// evaluates its query on growing prefixes; quantities that theory says are
// monotone are verified before the report is emitted.
#pragma once

#include <revpref/equilibrium.hpp>
#include <revpref/io.hpp>
#include <revpref/prefs.hpp>
#include <revpref/revealed.hpp>
#include <revpref/sequences.hpp>

#include <chrono>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace revpref {

inline constexpr const char* kVersion = "0.1.0";

enum class Scenario {
  DemandDetection,
  DemandBounds,
  SarpCheck,
  BinaryChoice,
  CnShrinkage,
  EqDetection,
  EqSet,
};

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::DemandDetection: return "demand_detection";
    case Scenario::DemandBounds: return "demand_bounds";
    case Scenario::SarpCheck: return "sarp_check";
    case Scenario::BinaryChoice: return "binary_choice";
    case Scenario::CnShrinkage: return "cn_shrinkage";
    case Scenario::EqDetection: return "eq_detection";
    case Scenario::EqSet: return "eq_set";
  }
  return "unknown";
}

inline Scenario scenario_from_name(const std::string& name) {
  for (Scenario s :
       {Scenario::DemandDetection, Scenario::DemandBounds, Scenario::SarpCheck,
        Scenario::BinaryChoice, Scenario::CnShrinkage, Scenario::EqDetection,
        Scenario::EqSet})
    if (name == scenario_name(s)) return s;
  throw ConfigError("unknown scenario: " + name);
}

// Observation index k and individual h are 1-based here, matching the
// dataset file format; library calls are 0-based.
struct ExperimentConfig {
  Scenario scenario = Scenario::SarpCheck;
  SequenceConfig sequence;
  std::optional<PreferenceSpec> spec;  // demand-side scenarios
  std::optional<Economy> economy;      // economy-side scenarios
  std::vector<int> n_schedule;
  Vec x, y;          // query bundles (detection, eq_detection, binary_choice)
  PriceVector price; // query price (demand_bounds)
  int k = 1;
  int h = 1;
  int depth = 12;
  int grid_res = 200;
  double eps = 0.01;
  std::string blocking = "joint";  // eq_set: "joint" or "per-individual"
  bool record_timing = false;

  void validate() const {
    if (n_schedule.empty())
      throw ConfigError("experiment: n_schedule must be nonempty");
    for (std::size_t i = 0; i < n_schedule.size(); ++i) {
      if (n_schedule[i] < 0)
        throw ConfigError("experiment: n_schedule entries must be >= 0");
      if (i > 0 && n_schedule[i] <= n_schedule[i - 1])
        throw ConfigError("experiment: n_schedule must be strictly increasing");
    }
    const bool wants_economy = scenario == Scenario::CnShrinkage ||
                               scenario == Scenario::EqDetection ||
                               scenario == Scenario::EqSet;
    if (wants_economy) {
      if (!economy) throw ConfigError("experiment: scenario needs an economy");
    } else if (!spec) {
      throw ConfigError("experiment: scenario needs a preference spec");
    }
    switch (scenario) {
      case Scenario::DemandDetection:
      case Scenario::BinaryChoice:
        if (x.size() != spec->num_goods() || y.size() != spec->num_goods())
          throw ConfigError("experiment: x and y must match the good count");
        break;
      case Scenario::DemandBounds:
        if (price.size() != spec->num_goods() || !all_positive(price))
          throw ConfigError("experiment: price must be positive, L goods");
        break;
      case Scenario::CnShrinkage:
        if (k < 1 || k > n_schedule.front())
          throw ConfigError(
              "experiment: k must name an observation in every prefix");
        [[fallthrough]];
      case Scenario::EqDetection:
        if (h < 1 || h > (economy ? economy->num_inds() : 2))
          throw ConfigError("experiment: h out of range");
        if (scenario == Scenario::EqDetection &&
            (x.size() != 2 || y.size() != 2))
          throw ConfigError("experiment: x and y must have two goods");
        break;
      case Scenario::EqSet:
        if (grid_res < 2) throw ConfigError("experiment: grid_res too small");
        if (!(eps > 0.0)) throw ConfigError("experiment: eps must be positive");
        if (blocking != "joint" && blocking != "per-individual")
          throw ConfigError(
              "experiment: blocking must be joint or per-individual");
        break;
      default:
        break;
    }
  }
};

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["scenario"] = scenario_name(c.scenario);
  j["sequence"] = to_json(c.sequence);
  if (c.spec) j["spec"] = to_json(*c.spec);
  if (c.economy) j["economy"] = to_json(*c.economy);
  j["n_schedule"] = c.n_schedule;
  if (c.x.size() > 0) j["x"] = detail::vec_to_json(c.x);
  if (c.y.size() > 0) j["y"] = detail::vec_to_json(c.y);
  if (c.price.size() > 0) j["price"] = detail::vec_to_json(c.price);
  j["k"] = c.k;
  j["h"] = c.h;
  j["depth"] = c.depth;
  j["grid_res"] = c.grid_res;
  j["eps"] = c.eps;
  j["blocking"] = c.blocking;
  j["record_timing"] = c.record_timing;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  c.scenario = scenario_from_name(j.at("scenario").get<std::string>());
  if (j.contains("sequence"))
    c.sequence = sequence_config_from_json(j.at("sequence"));
  if (j.contains("spec")) c.spec = pref_spec_from_json(j.at("spec"));
  if (j.contains("economy")) c.economy = economy_from_json(j.at("economy"));
  if (j.contains("n_schedule"))
    c.n_schedule = j.at("n_schedule").get<std::vector<int>>();
  if (j.contains("x")) c.x = detail::vec_from_json(j.at("x"));
  if (j.contains("y")) c.y = detail::vec_from_json(j.at("y"));
  if (j.contains("price")) c.price = detail::vec_from_json(j.at("price"));
  if (j.contains("k")) c.k = j.at("k").get<int>();
  if (j.contains("h")) c.h = j.at("h").get<int>();
  if (j.contains("depth")) c.depth = j.at("depth").get<int>();
  if (j.contains("grid_res")) c.grid_res = j.at("grid_res").get<int>();
  if (j.contains("eps")) c.eps = j.at("eps").get<double>();
  if (j.contains("blocking"))
    c.blocking = j.at("blocking").get<std::string>();
  if (j.contains("record_timing"))
    c.record_timing = j.at("record_timing").get<bool>();
  return c;
}

struct ExperimentReport {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const unsigned char c : s) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline const char* render_bool(bool b) { return b ? "true" : "false"; }

class RowTimer {
 public:
  explicit RowTimer(bool enabled) : enabled_(enabled) {}
  void start() { t0_ = std::chrono::steady_clock::now(); }
  std::string stop() const {
    if (!enabled_) return "0";
    const auto dt = std::chrono::steady_clock::now() - t0_;
    return std::to_string(
        std::chrono::duration_cast<std::chrono::milliseconds>(dt).count());
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point t0_{};
};

inline void require_monotone(bool ok, const char* what, int n) {
  if (!ok) {
    std::ostringstream os;
    os << "experiment: " << what << " violated at n=" << n;
    throw NumericalFailure(os.str());
  }
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.scenario = scenario_name(cfg.scenario);
  rep.seed = cfg.sequence.seed;
  rep.version = kVersion;
  rep.config_hash = detail::hex64(detail::fnv1a(to_json(cfg).dump()));

  const int n_max = cfg.n_schedule.back();
  detail::RowTimer timer(cfg.record_timing);

  switch (cfg.scenario) {
    case Scenario::SarpCheck: {
      rep.columns = {"n", "holds", "wall_ms"};
      const auto data = gen_demand_dataset(*cfg.spec, cfg.sequence, n_max);
      for (const int n : cfg.n_schedule) {
        timer.start();
        const auto r = check_sarp({data.data(), static_cast<std::size_t>(n)});
        rep.rows.push_back(
            {std::to_string(n), detail::render_bool(r.holds), timer.stop()});
      }
      break;
    }

    case Scenario::DemandDetection: {
      rep.columns = {"n", "detected", "wall_ms"};
      const auto data = gen_demand_dataset(*cfg.spec, cfg.sequence, n_max);
      RevealedGraph g;
      int grown = 0;
      bool prev = false;
      for (const int n : cfg.n_schedule) {
        timer.start();
        for (; grown < n; ++grown) g.extend(data[grown]);
        const bool detected = strictly_revealed_preferred(g, cfg.x, cfg.y);
        detail::require_monotone(!prev || detected, "detection persistence", n);
        prev = detected;
        rep.rows.push_back(
            {std::to_string(n), detail::render_bool(detected), timer.stop()});
      }
      break;
    }

    case Scenario::DemandBounds: {
      rep.columns = {"n", "diameter", "contains_truth", "wall_ms"};
      const auto data = gen_demand_dataset(*cfg.spec, cfg.sequence, n_max);
      const Bundle truth = demand(*cfg.spec, cfg.price, 1.0);
      RevealedGraph g;
      int grown = 0;
      double prev = std::numeric_limits<double>::infinity();
      for (const int n : cfg.n_schedule) {
        timer.start();
        for (; grown < n; ++grown) g.extend(data[grown]);
        const Region r = revealed_demand_bounds(g, cfg.price, cfg.depth);
        const double diam = r.diameter();
        const bool contains = r.contains(truth);
        detail::require_monotone(diam <= prev + 1e-12,
                                 "diameter monotonicity", n);
        detail::require_monotone(contains, "truth containment", n);
        prev = diam;
        rep.rows.push_back({std::to_string(n), render_double(diam),
                            detail::render_bool(contains), timer.stop()});
      }
      break;
    }

    case Scenario::BinaryChoice: {
      rep.columns = {"n", "verdict", "wall_ms"};
      // the sequence box samples presented bundle pairs (both sides)
      auto joint = cfg.sequence.price_box;
      joint.insert(joint.end(), cfg.sequence.price_box.begin(),
                   cfg.sequence.price_box.end());
      detail::validate_box(joint, "binary_choice bundle box");
      std::mt19937_64 rng(cfg.sequence.seed);
      const auto rows = detail::sample_box(joint, n_max, cfg.sequence, 0, &rng);
      const int L = cfg.spec->num_goods();
      std::vector<BinaryChoiceObservation> choices;
      choices.reserve(rows.size());
      int consumed = 0;
      auto verdict_name = [](BinaryVerdict v) {
        switch (v) {
          case BinaryVerdict::MustPrefer: return "must_prefer";
          case BinaryVerdict::MustDisprefer: return "must_disprefer";
          default: return "undetermined";
        }
      };
      BinaryVerdict prev = BinaryVerdict::Undetermined;
      for (const int n : cfg.n_schedule) {
        timer.start();
        for (; consumed < n; ++consumed) {
          const Bundle a = rows[consumed].head(L);
          const Bundle b = rows[consumed].tail(L);
          switch (prefers(*cfg.spec, a, b)) {
            case PrefOrdering::StrictlyPreferred:
              choices.push_back({a, b});
              break;
            case PrefOrdering::StrictlyDispreferred:
              choices.push_back({b, a});
              break;
            default:
              break;  // indifferent pairs teach nothing; skip
          }
        }
        const BinaryVerdict v = binary_choice_infer(choices, cfg.x, cfg.y);
        detail::require_monotone(
            prev == BinaryVerdict::Undetermined || v == prev,
            "verdict persistence", n);
        prev = v;
        rep.rows.push_back({std::to_string(n), verdict_name(v), timer.stop()});
      }
      break;
    }

    case Scenario::CnShrinkage: {
      rep.columns = {"n", "diameter", "contains_truth", "wall_ms"};
      const auto data = gen_economy_dataset(*cfg.economy, cfg.sequence, n_max);
      const auto& obs = data[cfg.k - 1];
      const Bundle truth =
          demand(cfg.economy->specs[cfg.h - 1], obs.p, obs.w[cfg.h - 1]);
      double prev = std::numeric_limits<double>::infinity();
      for (const int n : cfg.n_schedule) {
        timer.start();
        const Region r = cnk_projection_bounds(
            {data.data(), static_cast<std::size_t>(n)}, cfg.k - 1, cfg.h - 1,
            cfg.depth);
        const double diam = r.diameter();
        const bool contains = r.contains(truth);
        detail::require_monotone(diam <= prev + 1e-12,
                                 "diameter monotonicity", n);
        detail::require_monotone(contains, "truth containment", n);
        prev = diam;
        rep.rows.push_back({std::to_string(n), render_double(diam),
                            detail::render_bool(contains), timer.stop()});
      }
      break;
    }

    case Scenario::EqDetection: {
      rep.columns = {"n", "value", "resolution", "wall_ms"};
      const auto data = gen_economy_dataset(*cfg.economy, cfg.sequence, n_max);
      bool was_true = false;
      for (const int n : cfg.n_schedule) {
        timer.start();
        const TriState t = eq_revealed_preferred(
            {data.data(), static_cast<std::size_t>(n)}, cfg.h - 1, cfg.x,
            cfg.y, cfg.depth);
        detail::require_monotone(!was_true || t.value == TriBool::True,
                                 "certificate persistence", n);
        was_true = was_true || t.value == TriBool::True;
        rep.rows.push_back({std::to_string(n), tribool_name(t.value),
                            render_double(t.resolution), timer.stop()});
      }
      break;
    }

    case Scenario::EqSet: {
      rep.columns = {"n", "set_size", "interval_width",
                     "contains_rounded_truth", "wall_ms"};
      const auto data = gen_economy_dataset(*cfg.economy, cfg.sequence, n_max);
      const PriceVector pstar = solve_equilibrium(*cfg.economy);
      const int rounded = std::clamp(
          static_cast<int>(std::lround(pstar[0] * cfg.grid_res)), 1,
          cfg.grid_res - 1);
      double prev = std::numeric_limits<double>::infinity();
      for (const int n : cfg.n_schedule) {
        timer.start();
        const EquilibriumSet s = approx_equilibrium_set(
            {data.data(), static_cast<std::size_t>(n)},
            cfg.economy->endowments, cfg.grid_res, cfg.eps, cfg.depth,
            cfg.blocking == "joint" ? BlockingRule::Joint
                                    : BlockingRule::PerIndividual);
        const double width = s.interval_width();
        const bool contains =
            std::find(s.indices.begin(), s.indices.end(), rounded) !=
            s.indices.end();
        detail::require_monotone(width <= prev + 1e-12,
                                 "width monotonicity", n);
        detail::require_monotone(contains, "rounded equilibrium containment",
                                 n);
        prev = width;
        rep.rows.push_back({std::to_string(n),
                            std::to_string(s.indices.size()),
                            render_double(width),
                            detail::render_bool(contains), timer.stop()});
      }
      break;
    }
  }
  return rep;
}

// --------------------------------------------------------------------------
// report emission: stable column order, shortest-round-trip floats; rerunning
// the same config yields byte-identical output (timing renders as 0 unless
// record_timing is set)

inline std::string emit_report(const ExperimentReport& rep,
                               const std::string& format) {
  if (format == "csv") {
    std::ostringstream os;
    os << "# scenario=" << rep.scenario << '\n';
    os << "# config_hash=" << rep.config_hash << '\n';
    os << "# seed=" << rep.seed << '\n';
    os << "# version=" << rep.version << '\n';
    for (std::size_t c = 0; c < rep.columns.size(); ++c)
      os << (c ? "," : "") << rep.columns[c];
    os << '\n';
    for (const auto& row : rep.rows) {
      for (std::size_t c = 0; c < row.size(); ++c)
        os << (c ? "," : "") << row[c];
      os << '\n';
    }
    return os.str();
  }
  if (format == "json") {
    Json j;
    j["scenario"] = rep.scenario;
    j["config_hash"] = rep.config_hash;
    j["seed"] = rep.seed;
    j["version"] = rep.version;
    j["columns"] = rep.columns;
    j["rows"] = rep.rows;
    return j.dump(2) + "\n";
  }
  throw ConfigError("unknown report format: " + format);
}

inline ExperimentReport report_from_json(const Json& j) {
  ExperimentReport rep;
  rep.scenario = j.at("scenario").get<std::string>();
  rep.config_hash = j.at("config_hash").get<std::string>();
  rep.seed = j.at("seed").get<std::uint64_t>();
  rep.version = j.at("version").get<std::string>();
  rep.columns = j.at("columns").get<std::vector<std::string>>();
  rep.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
  return rep;
}

inline void save_report(const ExperimentReport& rep, const std::string& path,
                        const std::string& format) {
  save_text(path, emit_report(rep, format));
}

}  // namespace revpref
