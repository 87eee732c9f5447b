#include "config.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dsl.hpp"

namespace nullot::cli {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

const std::map<std::string, std::set<std::string>>& metric_params() {
  static const std::map<std::string, std::set<std::string>> m{
      {"minkowski", {"n"}},
      {"schwarzschild-lemaitre", {"r_S", "r_min_fraction"}},
      {"product-surface-M2", {"sphere", "R"}},
      {"warped", {"p", "t0", "t_min"}},
      {"perturbed", {"n", "beta0", "sign", "eps", "c0", "c1", "c2", "c3", "c4", "c5"}},
  };
  return m;
}

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  // Reports unknown keys; false when j is not an object.
  bool object(const json& j, const std::string& path, const std::set<std::string>& keys) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [k, _] : j.items())
      if (!keys.count(k)) fail(path.empty() ? k : path + "." + k, "unknown key");
    return true;
  }

  const json* at(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  void number(const json& obj, const std::string& path, const char* key, double& out) {
    if (auto* v = at(obj, key)) {
      if (v->is_number()) out = v->get<double>();
      else fail(sub(path, key), "expected a number");
    }
  }
  void integer(const json& obj, const std::string& path, const char* key, int& out) {
    if (auto* v = at(obj, key)) {
      if (v->is_number_integer()) out = v->get<int>();
      else fail(sub(path, key), "expected an integer");
    }
  }
  void unsigned64(const json& obj, const std::string& path, const char* key, std::uint64_t& out) {
    if (auto* v = at(obj, key)) {
      if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
      else fail(sub(path, key), "expected a non-negative integer");
    }
  }
  void string(const json& obj, const std::string& path, const char* key, std::string& out) {
    if (auto* v = at(obj, key)) {
      if (v->is_string()) out = v->get<std::string>();
      else fail(sub(path, key), "expected a string");
    }
  }
  template <class T>
  void list(const json& obj, const std::string& path, const char* key, std::vector<T>& out) {
    auto* v = at(obj, key);
    if (!v) return;
    if (!v->is_array()) {
      fail(sub(path, key), "expected an array");
      return;
    }
    std::vector<T> tmp;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      const bool ok = std::is_same_v<T, std::string> ? e.is_string()
                      : std::is_same_v<T, int>       ? e.is_number_integer()
                                                     : e.is_number();
      if (!ok) {
        fail(sub(path, key) + "[" + std::to_string(i) + "]", "wrong type");
        return;
      }
      tmp.push_back(e.get<T>());
    }
    out = std::move(tmp);
  }

  static std::string sub(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }
};

void check_expr(Reader& r, const std::string& path, const std::string& text, const std::vector<std::string>& vars) {
  try {
    Expression::parse(text, vars);
  } catch (const Error& e) {
    r.fail(path, e.what());
  }
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ConfigError::ConfigError(ErrorKind kind, std::vector<std::string> violations)
    : Error(kind, join(violations, "; ")), violations_(std::move(violations)) {}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"nc1", "nce", "riccati", "lightcone", "hawking", "rigidity", "stability"};
  return names;
}

std::vector<std::string> weight_variables(int dimension) {
  std::vector<std::string> v;
  for (int i = 0; i < dimension; ++i) v.push_back("x" + std::to_string(i));
  v.push_back("s");
  return v;
}

std::vector<std::string> section_variables(int k) {
  std::vector<std::string> v;
  for (int i = 0; i < k; ++i) v.push_back("u" + std::to_string(i));
  return v;
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string msg = e.what();
    if (auto p = msg.find(": "); p != std::string::npos) msg = msg.substr(p + 2);
    throw ConfigError(ErrorKind::ParseError,
                      {"line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg});
  }

  Reader r;
  ScenarioConfig c;
  if (!r.object(j, "", {"metric", "hypersurface", "weight", "N", "checks", "tolerances", "resolution", "policy", "seed",
                        "output", "nce", "hawking", "lightcone", "stability"}))
    throw ConfigError(ErrorKind::ValidationError, r.errors);

  // --- metric
  std::shared_ptr<const MetricModel> model;
  if (auto* m = r.at(j, "metric"); !m) {
    r.fail("metric", "required");
  } else if (r.object(*m, "metric", {"name", "params"})) {
    if (!r.at(*m, "name")) r.fail("metric.name", "required");
    r.string(*m, "metric", "name", c.metric);
    if (auto* p = r.at(*m, "params")) {
      if (!p->is_object()) r.fail("metric.params", "expected an object");
      else
        for (const auto& [k, v] : p->items()) {
          if (v.is_number()) c.params[k] = v.get<double>();
          else r.fail("metric.params." + k, "expected a number");
        }
    }
    auto known = metric_params().find(c.metric);
    if (known == metric_params().end()) {
      r.fail("metric.name", "unknown metric '" + c.metric + "' (catalog: " + join(catalog_names(), ", ") + ")");
    } else {
      for (const auto& [k, _] : c.params)
        if (!known->second.count(k)) r.fail("metric.params." + k, "unknown parameter for " + c.metric);
      try {
        model = make_metric(c.metric, c.params);
        c.dimension = model->dimension();
      } catch (const Error& e) {
        r.fail("metric.params", e.what());
      }
    }
  }
  const int n = c.dimension;
  const int k = n - 2;

  // --- hypersurface
  HypersurfaceConfig& h = c.hypersurface;
  if (auto* hs = r.at(j, "hypersurface"); !hs) {
    r.fail("hypersurface", "required");
  } else if (r.object(*hs, "hypersurface",
                      {"kind", "grid", "tip", "s_ref", "t_max", "s_max", "slice", "window", "box", "x", "L"})) {
    const std::string p = "hypersurface";
    r.string(*hs, p, "kind", h.kind);
    r.list(*hs, p, "grid", h.grid);
    r.list(*hs, p, "tip", h.tip);
    r.number(*hs, p, "s_ref", h.s_ref);
    r.number(*hs, p, "t_max", h.t_max);
    r.number(*hs, p, "s_max", h.s_max);
    r.number(*hs, p, "slice", h.slice);
    r.list(*hs, p, "window", h.window);
    if (auto* b = r.at(*hs, "box"); b && r.object(*b, "hypersurface.box", {"lower", "upper"})) {
      r.list(*b, "hypersurface.box", "lower", h.box_lower);
      r.list(*b, "hypersurface.box", "upper", h.box_upper);
    }
    r.list(*hs, p, "x", h.x);
    r.list(*hs, p, "L", h.L);

    const bool cone = h.kind == "cone", horizon = h.kind == "horizon", custom = h.kind == "custom-section";
    if (!cone && !horizon && !custom) r.fail("hypersurface.kind", "expected cone, horizon or custom-section");
    if (h.grid.empty()) {
      if (custom) r.fail("hypersurface.grid", "required for custom-section");
      else h.grid = cone && n >= 5 ? std::vector<int>{8, 8} : std::vector<int>{8, 16};
    }
    if (!h.grid.empty()) {
      const std::size_t want = custom ? static_cast<std::size_t>(std::max(k, 1)) : 2;
      if (h.grid.size() != want)
        r.fail("hypersurface.grid", "expected " + std::to_string(want) + " entries");
      for (int g : h.grid)
        if (g < 8) {
          r.fail("hypersurface.grid", "grid sizes must be at least 8");
          break;
        }
    }
    if (cone) {
      if (h.tip.empty()) h.tip.assign(n, 0.0);
      if (static_cast<int>(h.tip.size()) != n) r.fail("hypersurface.tip", "expected " + std::to_string(n) + " coordinates");
      if (!(h.s_ref > 0)) r.fail("hypersurface.s_ref", "must be positive");
      if (!(h.t_max > 0)) r.fail("hypersurface.t_max", "must be positive");
      if (!(h.s_max > 0)) r.fail("hypersurface.s_max", "must be positive");
    } else {
      if (h.window.size() != 2 || !(h.window[0] < h.window[1])) r.fail("hypersurface.window", "expected [lo, hi] with lo < hi");
    }
    if (horizon && model) {
      const bool sl = c.metric == "schwarzschild-lemaitre", prod = c.metric == "product-surface-M2";
      if (!sl && !prod) r.fail("hypersurface.kind", "horizon needs schwarzschild-lemaitre or product-surface-M2");
      if (prod && c.params.count("sphere") && c.params.at("sphere") == 0.0) {
        if (h.box_lower.empty()) h.box_lower = {0.0, 0.0};
        if (h.box_upper.empty()) h.box_upper = {1.0, 1.0};
      }
    }
    if (custom) {
      if (static_cast<int>(h.box_lower.size()) != k || static_cast<int>(h.box_upper.size()) != k)
        r.fail("hypersurface.box", "lower and upper need " + std::to_string(k) + " entries");
      else
        for (int i = 0; i < k; ++i)
          if (!(h.box_lower[i] < h.box_upper[i])) r.fail("hypersurface.box", "lower must be below upper");
      if (static_cast<int>(h.x.size()) != n) r.fail("hypersurface.x", "expected " + std::to_string(n) + " expressions");
      if (static_cast<int>(h.L.size()) != n) r.fail("hypersurface.L", "expected " + std::to_string(n) + " expressions");
      const auto vars = section_variables(k);
      for (std::size_t i = 0; i < h.x.size(); ++i) check_expr(r, "hypersurface.x[" + std::to_string(i) + "]", h.x[i], vars);
      for (std::size_t i = 0; i < h.L.size(); ++i) check_expr(r, "hypersurface.L[" + std::to_string(i) + "]", h.L[i], vars);
    }
  }

  // --- weight, N
  r.string(j, "", "weight", c.weight);
  if (c.weight != "zero") check_expr(r, "weight", c.weight, weight_variables(n));
  c.N = n;
  r.number(j, "", "N", c.N);
  if (!(c.N > 2)) r.fail("N", "N must exceed 2");
  else if (c.N < n) r.fail("N", "N must be at least the dimension " + std::to_string(n));

  // --- checks
  if (!r.at(j, "checks")) r.fail("checks", "required");
  r.list(j, "", "checks", c.checks);
  if (r.at(j, "checks") && c.checks.empty()) r.fail("checks", "must not be empty");
  std::set<std::string> seen;
  for (const auto& ch : c.checks) {
    if (std::find(check_names().begin(), check_names().end(), ch) == check_names().end())
      r.fail("checks", "unknown check '" + ch + "' (known: " + join(check_names(), ", ") + ")");
    if (!seen.insert(ch).second) r.fail("checks", "duplicate check '" + ch + "'");
    if ((ch == "lightcone" || ch == "stability") && h.kind != "cone") r.fail("checks", ch + " needs a cone hypersurface");
    if (ch == "hawking" && h.kind == "cone") r.fail("checks", "hawking needs a horizon or custom-section hypersurface");
  }

  // --- tolerances
  Tolerances& t = c.tolerances;
  if (auto* tj = r.at(j, "tolerances");
      tj && r.object(*tj, "tolerances",
                     {"nc1", "nce", "riccati", "lightcone", "tip", "hawking", "equality", "rigidity", "stability"})) {
    const std::pair<const char*, double*> fields[] = {
        {"nc1", &t.nc1},         {"nce", &t.nce},           {"riccati", &t.riccati},
        {"lightcone", &t.lightcone}, {"tip", &t.tip},        {"hawking", &t.hawking},
        {"equality", &t.equality},   {"rigidity", &t.rigidity}, {"stability", &t.stability}};
    for (auto [name, ptr] : fields) {
      r.number(*tj, "tolerances", name, *ptr);
      if (!(*ptr > 0)) r.fail(std::string("tolerances.") + name, "must be positive");
    }
  }

  // --- resolution, policy, seed, output
  if (auto* rj = r.at(j, "resolution"); rj && r.object(*rj, "resolution", {"samples_per_unit", "refinement"})) {
    r.number(*rj, "resolution", "samples_per_unit", c.samples_per_unit);
    r.integer(*rj, "resolution", "refinement", c.refinement);
  }
  if (!(c.samples_per_unit >= 8)) r.fail("resolution.samples_per_unit", "grid sizes must be at least 8");
  if (c.refinement < 1) r.fail("resolution.refinement", "must be at least 1");
  std::string policy = "strict";
  r.string(j, "", "policy", policy);
  if (policy == "strict") c.policy = VerdictPolicy::Strict;
  else if (policy == "margin-report") c.policy = VerdictPolicy::MarginReport;
  else r.fail("policy", "expected strict or margin-report");
  r.unsigned64(j, "", "seed", c.seed);
  if (auto* o = r.at(j, "output"); o && r.object(*o, "output", {"report", "csv_prefix"})) {
    r.string(*o, "output", "report", c.report);
    r.string(*o, "output", "csv_prefix", c.csv_prefix);
  }
  if (c.report.empty()) r.fail("output.report", "must not be empty");

  // --- per-check blocks
  if (auto* b = r.at(j, "nce"); b && r.object(*b, "nce", {"pairs", "points"})) {
    r.integer(*b, "nce", "pairs", c.nce_pairs);
    r.integer(*b, "nce", "points", c.nce_points);
  }
  if (c.nce_pairs < 1) r.fail("nce.pairs", "must be at least 1");
  if (c.nce_points < 8) r.fail("nce.points", "grid sizes must be at least 8");
  if (auto* b = r.at(j, "hawking"); b && r.object(*b, "hawking", {"t1", "t2", "T_future"})) {
    r.string(*b, "hawking", "t1", c.t1);
    r.string(*b, "hawking", "t2", c.t2);
    r.number(*b, "hawking", "T_future", c.T_future);
  }
  check_expr(r, "hawking.t1", c.t1, section_variables(k));
  check_expr(r, "hawking.t2", c.t2, section_variables(k));
  if (c.T_future < 0) r.fail("hawking.T_future", "must be non-negative");
  if (auto* b = r.at(j, "lightcone"); b && r.object(*b, "lightcone", {"points"}))
    r.integer(*b, "lightcone", "points", c.lightcone_points);
  if (c.lightcone_points < 8) r.fail("lightcone.points", "grid sizes must be at least 8");
  StabilityConfig& st = c.stability;
  if (auto* b = r.at(j, "stability");
      b && r.object(*b, "stability", {"center", "sign", "eps", "amplitude", "densities"})) {
    r.list(*b, "stability", "center", st.center);
    r.number(*b, "stability", "sign", st.sign);
    r.list(*b, "stability", "eps", st.eps);
    r.string(*b, "stability", "amplitude", st.amplitude);
    r.list(*b, "stability", "densities", st.densities);
  }
  if (st.center.empty()) st.center = static_cast<int>(h.tip.size()) == n ? h.tip : std::vector<double>(n, 0.0);
  if (static_cast<int>(st.center.size()) != n) r.fail("stability.center", "expected " + std::to_string(n) + " coordinates");
  if (st.sign == 0.0) r.fail("stability.sign", "must be nonzero");
  if (st.eps.empty()) r.fail("stability.eps", "must not be empty");
  for (double e : st.eps)
    if (!(e >= 0)) r.fail("stability.eps", "entries must be non-negative");
  check_expr(r, "stability.amplitude", st.amplitude, {"eps"});
  if (st.densities.empty()) r.fail("stability.densities", "must not be empty");
  for (std::size_t i = 0; i < st.densities.size(); ++i) {
    if (st.densities[i] < 8) r.fail("stability.densities", "grid sizes must be at least 8");
    if (i > 0 && !(st.densities[i] > st.densities[i - 1])) r.fail("stability.densities", "must increase");
  }

  if (!r.errors.empty()) throw ConfigError(ErrorKind::ValidationError, r.errors);
  return c;
}

json to_json(const ScenarioConfig& c) {
  const HypersurfaceConfig& h = c.hypersurface;
  json hs{{"kind", h.kind}, {"grid", h.grid}};
  if (h.kind == "cone") {
    hs["tip"] = h.tip;
    hs["s_ref"] = h.s_ref;
    hs["t_max"] = h.t_max;
    hs["s_max"] = h.s_max;
  } else {
    hs["window"] = h.window;
    if (h.kind == "horizon") hs["slice"] = h.slice;
    if (!h.box_lower.empty()) hs["box"] = {{"lower", h.box_lower}, {"upper", h.box_upper}};
    if (h.kind == "custom-section") {
      hs["x"] = h.x;
      hs["L"] = h.L;
    }
  }
  const Tolerances& t = c.tolerances;
  return json{
      {"metric", {{"name", c.metric}, {"params", c.params}}},
      {"hypersurface", hs},
      {"weight", c.weight},
      {"N", c.N},
      {"checks", c.checks},
      {"tolerances",
       {{"nc1", t.nc1},
        {"nce", t.nce},
        {"riccati", t.riccati},
        {"lightcone", t.lightcone},
        {"tip", t.tip},
        {"hawking", t.hawking},
        {"equality", t.equality},
        {"rigidity", t.rigidity},
        {"stability", t.stability}}},
      {"resolution", {{"samples_per_unit", c.samples_per_unit}, {"refinement", c.refinement}}},
      {"policy", c.policy == VerdictPolicy::Strict ? "strict" : "margin-report"},
      {"seed", c.seed},
      {"output", {{"report", c.report}, {"csv_prefix", c.csv_prefix}}},
      {"nce", {{"pairs", c.nce_pairs}, {"points", c.nce_points}}},
      {"hawking", {{"t1", c.t1}, {"t2", c.t2}, {"T_future", c.T_future}}},
      {"lightcone", {{"points", c.lightcone_points}}},
      {"stability",
       {{"center", c.stability.center},
        {"sign", c.stability.sign},
        {"eps", c.stability.eps},
        {"amplitude", c.stability.amplitude},
        {"densities", c.stability.densities}}},
  };
}

}  // namespace nullot::cli
