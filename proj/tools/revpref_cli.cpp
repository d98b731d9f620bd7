// Command-line front end: dataset generation, consistency checks, preference
// and demand queries, equilibrium computation, and convergence experiments.
//
// Exit codes: 0 success, 1 bad configuration or input, 2 numerical failure,
// 3 file I/O failure.

#include <revpref/revpref.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

namespace {

using namespace revpref;

Vec parse_vec_arg(const std::string& s, const char* flag) {
  const auto parts = detail::split_csv(s);
  if (parts.empty())
    throw ConfigError(std::string(flag) + ": expected comma-separated numbers");
  Vec v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[i] = parse_double(parts[i]);
  return v;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    save_text(out_path, text);
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

Json require_config(const std::string& path, const char* sub) {
  if (path.empty())
    throw ConfigError(std::string(sub) + ": --config is required");
  return load_json(path);
}

Dataset load_demand_dataset(const std::string& path, const char* sub) {
  if (path.empty()) throw ConfigError(std::string(sub) + ": --data is required");
  Dataset ds = load_dataset(path);
  if (!ds.is_demand())
    throw ConfigError(std::string(sub) + ": expected a demand dataset (H = 1)");
  return ds;
}

Dataset load_economy_dataset(const std::string& path, const char* sub) {
  if (path.empty()) throw ConfigError(std::string(sub) + ": --data is required");
  Dataset ds = load_dataset(path);
  if (ds.is_demand())
    throw ConfigError(std::string(sub) + ": expected an economy dataset (H >= 2)");
  return ds;
}

RevealedGraph build_graph(const Dataset& ds) {
  RevealedGraph g;
  for (const auto& o : ds.demand) g.extend(o);
  return g;
}

Economy economy_from_config(const Json& j) {
  return economy_from_json(j.contains("economy") ? j.at("economy") : j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "revpref: exact inference of preferences, demand, and equilibria from "
      "finite market data"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path;
  std::string format = "csv";
  std::uint64_t seed = 0;
  std::string x_str, y_str, price_str;
  int k = 1, h = 1, depth = 12, grid_res = 200;
  double eps = 0.01, tol = 1e-10;

  auto* seed_opt =
      app.add_option("--seed", seed, "Override the sequence seed");
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_path, "Output path (default: stdout)");
  app.add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto add_sub = [&](const char* name, const char* desc) {
    auto* sub = app.add_subcommand(name, desc);
    sub->fallthrough();
    return sub;
  };

  auto* gen = add_sub("generate",
                      "Generate a demand or economy dataset from a config");
  auto* sarp = add_sub("sarp", "Check a demand dataset for revealed-preference "
                               "cycles");
  sarp->add_option("--data", data_path, "Dataset CSV");
  auto* qpref = add_sub("query-pref",
                        "Is bundle x revealed preferred to bundle y?");
  qpref->add_option("--data", data_path, "Dataset CSV");
  qpref->add_option("--x", x_str, "Bundle x, comma-separated")->required();
  qpref->add_option("--y", y_str, "Bundle y, comma-separated")->required();
  auto* dset = add_sub("demand-set",
                       "Outer bounds on the demand set at a given price");
  dset->add_option("--data", data_path, "Dataset CSV");
  dset->add_option("--price", price_str, "Price vector, comma-separated")
      ->required();
  dset->add_option("--depth", depth, "Subdivision depth");
  auto* eq = add_sub("equilibrium",
                     "Solve for Walrasian equilibrium prices of an economy");
  eq->add_option("--tol", tol, "Residual tolerance");
  auto* cnb = add_sub("cn-bounds",
                      "Bounds on individual h's consistent allocation at "
                      "observation k");
  cnb->add_option("--data", data_path, "Economy dataset CSV");
  cnb->add_option("--k", k, "Observation index (1-based)")->required();
  cnb->add_option("--ind", h, "Individual index (1-based)")->required();
  cnb->add_option("--depth", depth, "Subdivision depth");
  auto* eqq = add_sub("eq-query",
                      "Does every consistent allocation rank x above y for "
                      "individual h?");
  eqq->add_option("--data", data_path, "Economy dataset CSV");
  eqq->add_option("--ind", h, "Individual index (1-based)")->required();
  eqq->add_option("--x", x_str, "Bundle x, comma-separated")->required();
  eqq->add_option("--y", y_str, "Bundle y, comma-separated")->required();
  eqq->add_option("--depth", depth, "Subdivision depth");
  auto* eqs = add_sub("eq-set",
                      "Grid approximation of the equilibrium price set");
  eqs->add_option("--data", data_path, "Economy dataset CSV");
  eqs->add_option("--grid-res", grid_res, "Price grid resolution");
  eqs->add_option("--eps", eps, "Improvement margin");
  eqs->add_option("--depth", depth, "Subdivision depth");
  std::string blocking = "joint";
  eqs->add_option("--blocking", blocking,
                  "Blocking rule: joint or per-individual")
      ->check(CLI::IsMember({"joint", "per-individual"}));
  auto* exp = add_sub("experiment",
                      "Run a convergence experiment over nested prefixes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const Json j = require_config(config_path, "generate");
      if (!j.contains("sequence"))
        throw ConfigError("generate: config needs a \"sequence\" object");
      SequenceConfig seq = sequence_config_from_json(j.at("sequence"));
      if (seed_opt->count() > 0) seq.seed = seed;
      const int n = j.at("n").get<int>();
      std::ostringstream os;
      if (j.contains("economy")) {
        const Economy eco = economy_from_json(j.at("economy"));
        const auto data = gen_economy_dataset(eco, seq, n);
        write_dataset(os, std::span<const EconomyObservation>(data));
      } else if (j.contains("spec")) {
        const PreferenceSpec spec = pref_spec_from_json(j.at("spec"));
        const auto data = gen_demand_dataset(spec, seq, n);
        write_dataset(os, std::span<const DemandObservation>(data));
      } else {
        throw ConfigError("generate: config needs \"spec\" or \"economy\"");
      }
      emit(out_path, os.str());
    } else if (*sarp) {
      const Dataset ds = load_demand_dataset(data_path, "sarp");
      emit(out_path, json_text(to_json(check_sarp(ds.demand))));
    } else if (*qpref) {
      const Dataset ds = load_demand_dataset(data_path, "query-pref");
      const RevealedGraph g = build_graph(ds);
      Json j;
      j["prefers"] = strictly_revealed_preferred(
          g, parse_vec_arg(x_str, "--x"), parse_vec_arg(y_str, "--y"));
      emit(out_path, json_text(j));
    } else if (*dset) {
      const Dataset ds = load_demand_dataset(data_path, "demand-set");
      const RevealedGraph g = build_graph(ds);
      const Region r =
          revealed_demand_bounds(g, parse_vec_arg(price_str, "--price"), depth);
      emit(out_path, json_text(to_json(r)));
    } else if (*eq) {
      const Economy eco =
          economy_from_config(require_config(config_path, "equilibrium"));
      const PriceVector p = solve_equilibrium(eco, tol);
      Json j;
      j["prices"] = detail::vec_to_json(p);
      j["residual"] = excess_demand(eco, p).cwiseAbs().maxCoeff();
      emit(out_path, json_text(j));
    } else if (*cnb) {
      const Dataset ds = load_economy_dataset(data_path, "cn-bounds");
      if (k < 1 || k > ds.size())
        throw ConfigError("cn-bounds: k out of range");
      if (h < 1 || h > ds.H) throw ConfigError("cn-bounds: h out of range");
      const Region r =
          cnk_projection_bounds(ds.economy, k - 1, h - 1, depth);
      emit(out_path, json_text(to_json(r)));
    } else if (*eqq) {
      const Dataset ds = load_economy_dataset(data_path, "eq-query");
      if (h < 1 || h > ds.H) throw ConfigError("eq-query: h out of range");
      const TriState t = eq_revealed_preferred(
          ds.economy, h - 1, parse_vec_arg(x_str, "--x"),
          parse_vec_arg(y_str, "--y"), depth);
      emit(out_path, json_text(to_json(t)));
    } else if (*eqs) {
      const Dataset ds = load_economy_dataset(data_path, "eq-set");
      const Economy eco =
          economy_from_config(require_config(config_path, "eq-set"));
      const EquilibriumSet s = approx_equilibrium_set(
          ds.economy, eco.endowments, grid_res, eps, depth,
          blocking == "joint" ? BlockingRule::Joint
                              : BlockingRule::PerIndividual);
      emit(out_path, json_text(to_json(s)));
    } else if (*exp) {
      ExperimentConfig cfg =
          experiment_config_from_json(require_config(config_path, "experiment"));
      if (seed_opt->count() > 0) cfg.sequence.seed = seed;
      const ExperimentReport rep = run_experiment(cfg);
      emit(out_path, emit_report(rep, format));
    }
  } catch (const NoConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
