// Serialization: dataset CSV with bit-exact float round-trips, and JSON
// forms for specs, economies, configs, regions, and query results.
#pragma once

#include <revpref/common.hpp>
#include <revpref/equilibrium.hpp>
#include <revpref/feasibility.hpp>
#include <revpref/prefs.hpp>
#include <revpref/revealed.hpp>
#include <revpref/sequences.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace revpref {

// keys emit in sorted order, so dumps are deterministic
using Json = nlohmann::json;

// --------------------------------------------------------------------------
// numbers

// shortest decimal that parses back to exactly the same double
inline std::string render_double(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw MalformedDataset("not a number: '" + std::string(s) + "'");
  return v;
}

inline long parse_long(std::string_view s) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw MalformedDataset("not an integer: '" + std::string(s) + "'");
  return v;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const Json& a) {
  if (!a.is_array()) throw ConfigError("expected a numeric array");
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

inline Json box_list_to_json(
    const std::vector<std::pair<double, double>>& box) {
  Json a = Json::array();
  for (const auto& [lo, hi] : box) a.push_back(Json::array({lo, hi}));
  return a;
}

inline std::vector<std::pair<double, double>> box_list_from_json(
    const Json& a) {
  std::vector<std::pair<double, double>> box;
  for (const auto& iv : a) {
    if (!iv.is_array() || iv.size() != 2)
      throw ConfigError("expected [lo, hi] pairs");
    box.emplace_back(iv[0].get<double>(), iv[1].get<double>());
  }
  return box;
}

}  // namespace detail

// --------------------------------------------------------------------------
// dataset CSV: header "L,H,n", then one row per observation
//   demand  (H = 1):  k, p_1..p_L, x_1..x_L
//   economy (H >= 2): k, p_1..p_L, w_1..w_H, D_1..D_L

struct Dataset {
  int L = 0;
  int H = 1;
  std::vector<DemandObservation> demand;     // populated when H == 1
  std::vector<EconomyObservation> economy;   // populated when H >= 2
  bool is_demand() const { return H == 1; }
  int size() const {
    return static_cast<int>(is_demand() ? demand.size() : economy.size());
  }
};

inline void write_dataset(std::ostream& os,
                          std::span<const DemandObservation> data) {
  const int L = data.empty() ? 2 : static_cast<int>(data.front().p.size());
  os << L << ",1," << data.size() << '\n';
  for (const auto& o : data) {
    os << o.k;
    for (int l = 0; l < L; ++l) os << ',' << render_double(o.p[l]);
    for (int l = 0; l < L; ++l) os << ',' << render_double(o.x[l]);
    os << '\n';
  }
}

inline void write_dataset(std::ostream& os,
                          std::span<const EconomyObservation> data) {
  const int L = data.empty() ? 2 : static_cast<int>(data.front().p.size());
  const int H = data.empty() ? 2 : static_cast<int>(data.front().w.size());
  os << L << ',' << H << ',' << data.size() << '\n';
  for (const auto& o : data) {
    os << o.k;
    for (int l = 0; l < L; ++l) os << ',' << render_double(o.p[l]);
    for (int h = 0; h < H; ++h) os << ',' << render_double(o.w[h]);
    for (int l = 0; l < L; ++l) os << ',' << render_double(o.D[l]);
    os << '\n';
  }
}

inline Dataset read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw MalformedDataset("dataset: missing header");
  auto head = detail::split_csv(line);
  if (head.size() != 3) throw MalformedDataset("dataset: header must be L,H,n");
  Dataset ds;
  ds.L = static_cast<int>(parse_long(head[0]));
  ds.H = static_cast<int>(parse_long(head[1]));
  const long n = parse_long(head[2]);
  if (ds.L < 2 || ds.H < 1 || n < 0)
    throw MalformedDataset("dataset: bad header values");

  const std::size_t want =
      1 + ds.L + (ds.H == 1 ? ds.L : ds.H + ds.L);
  long rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() != want)
      throw MalformedDataset("dataset: wrong column count");
    const int k = static_cast<int>(parse_long(f[0]));
    Vec p(ds.L);
    for (int l = 0; l < ds.L; ++l) p[l] = parse_double(f[1 + l]);
    if (ds.H == 1) {
      Vec x(ds.L);
      for (int l = 0; l < ds.L; ++l) x[l] = parse_double(f[1 + ds.L + l]);
      ds.demand.push_back({k, p, x});
    } else {
      Vec w(ds.H);
      for (int h = 0; h < ds.H; ++h) w[h] = parse_double(f[1 + ds.L + h]);
      Vec D(ds.L);
      for (int l = 0; l < ds.L; ++l)
        D[l] = parse_double(f[1 + ds.L + ds.H + l]);
      ds.economy.push_back({k, p, w, D});
    }
    ++rows;
  }
  if (rows != n) throw MalformedDataset("dataset: row count differs from header");
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open dataset: " + path);
  return read_dataset(f);
}

template <class Obs>
void save_dataset(const std::string& path, std::span<const Obs> data) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write dataset: " + path);
  write_dataset(f, data);
  if (!f) throw IoError("write failed: " + path);
}

// --------------------------------------------------------------------------
// JSON forms

inline Json to_json(const PreferenceSpec& s) {
  Json j;
  j["family"] =
      s.family == PrefFamily::CobbDouglas ? "cobb_douglas" : "ces";
  j["alpha"] = detail::vec_to_json(s.alpha);
  if (s.family == PrefFamily::CES) j["rho"] = s.rho;
  return j;
}

inline PreferenceSpec pref_spec_from_json(const Json& j) {
  const std::string family = j.at("family").get<std::string>();
  const Vec alpha = detail::vec_from_json(j.at("alpha"));
  if (family == "cobb_douglas") return PreferenceSpec::cobb_douglas(alpha);
  if (family == "ces")
    return PreferenceSpec::ces(alpha, j.at("rho").get<double>());
  throw ConfigError("unknown preference family: " + family);
}

inline Json to_json(const SequenceConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["generator"] =
      c.generator == Generator::Halton ? "halton" : "uniform";
  j["price_box"] = detail::box_list_to_json(c.price_box);
  if (!c.income_box.empty())
    j["income_box"] = detail::box_list_to_json(c.income_box);
  return j;
}

inline SequenceConfig sequence_config_from_json(const Json& j) {
  SequenceConfig c;
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("generator")) {
    const std::string g = j.at("generator").get<std::string>();
    if (g == "halton")
      c.generator = Generator::Halton;
    else if (g == "uniform")
      c.generator = Generator::UniformRandom;
    else
      throw ConfigError("unknown generator: " + g);
  }
  if (j.contains("price_box"))
    c.price_box = detail::box_list_from_json(j.at("price_box"));
  if (j.contains("income_box"))
    c.income_box = detail::box_list_from_json(j.at("income_box"));
  return c;
}

inline Json to_json(const Economy& e) {
  Json j;
  Json specs = Json::array(), ends = Json::array();
  for (const auto& s : e.specs) specs.push_back(to_json(s));
  for (const auto& v : e.endowments) ends.push_back(detail::vec_to_json(v));
  j["specs"] = specs;
  j["endowments"] = ends;
  j["income_box"] = detail::box_list_to_json(e.income_box);
  return j;
}

inline Economy economy_from_json(const Json& j) {
  std::vector<PreferenceSpec> specs;
  for (const auto& s : j.at("specs")) specs.push_back(pref_spec_from_json(s));
  std::vector<Vec> ends;
  for (const auto& v : j.at("endowments"))
    ends.push_back(detail::vec_from_json(v));
  std::vector<std::pair<double, double>> income_box;
  if (j.contains("income_box"))
    income_box = detail::box_list_from_json(j.at("income_box"));
  return Economy::make(std::move(specs), std::move(ends),
                       std::move(income_box));
}

inline const char* box_status_name(BoxStatus s) {
  switch (s) {
    case BoxStatus::Undominated: return "undominated";
    case BoxStatus::Dominated: return "dominated";
    default: return "unresolved";
  }
}

inline Json to_json(const Region& r) {
  Json boxes = Json::array();
  for (const auto& rb : r.boxes) {
    Json b;
    b["lo"] = detail::vec_to_json(rb.box.lo);
    b["hi"] = detail::vec_to_json(rb.box.hi);
    b["status"] = box_status_name(rb.status);
    boxes.push_back(std::move(b));
  }
  Json j;
  j["boxes"] = std::move(boxes);
  j["diameter"] = r.diameter();
  return j;
}

inline Json to_json(const SarpResult& r) {
  Json j;
  j["holds"] = r.holds;
  j["witness_cycle"] = r.witness_cycle;
  return j;
}

inline const char* tribool_name(TriBool v) {
  switch (v) {
    case TriBool::True: return "true";
    case TriBool::False: return "false";
    default: return "unknown";
  }
}

inline Json to_json(const TriState& t) {
  Json j;
  j["value"] = tribool_name(t.value);
  if (t.value == TriBool::Unknown) j["resolution"] = t.resolution;
  return j;
}

inline Json to_json(const EquilibriumSet& s) {
  Json j;
  j["grid_res"] = s.grid_res;
  j["indices"] = s.indices;
  j["interval_width"] = s.interval_width();
  return j;
}

// --------------------------------------------------------------------------
// files

inline Json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw ConfigError("bad json in " + path + ": " + e.what());
  }
}

inline void save_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write: " + path);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace revpref
