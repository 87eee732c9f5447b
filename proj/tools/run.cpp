#include "run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "dsl.hpp"
#include "nullot/apps.hpp"

namespace nullot::cli {

using nlohmann::json;

namespace {

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vec_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

WeightField make_weight(const std::string& text, int n) {
  if (text == "zero") return WeightField::zero();
  const Expression e = Expression::parse(text, weight_variables(n));
  bool constant = true;
  for (int i = 0; i <= n; ++i) constant = constant && !e.uses(i);
  return WeightField(
      [e, n](const Vec& x, double s) {
        double v[kMaxDim + 1];
        for (int i = 0; i < n; ++i) v[i] = x(i);
        v[n] = s;
        return e.eval({v, static_cast<std::size_t>(n + 1)});
      },
      e.smooth() ? Smoothness::C2 : Smoothness::C0, text, constant);
}

TransverseFunction make_transverse(const std::string& text, int k) {
  const Expression e = Expression::parse(text, section_variables(k));
  return [e](std::span<const double> u) { return e.eval(u); };
}

QuadratureRule cone_rule(const ScenarioConfig& c) {
  return sphere_rule(c.dimension - 2, c.hypersurface.grid[0], c.hypersurface.grid[1]);
}

CrossSectionGrid make_custom_section(const MetricModel& model, const ScenarioConfig& c) {
  const HypersurfaceConfig& h = c.hypersurface;
  const int n = c.dimension, k = n - 2;
  const auto vars = section_variables(k);
  struct Component {
    Expression f;
    std::vector<Expression> df;
  };
  auto compile = [&](const std::vector<std::string>& texts) {
    std::vector<Component> out;
    for (const auto& t : texts) {
      Component comp{Expression::parse(t, vars), {}};
      for (int j = 0; j < k; ++j) comp.df.push_back(comp.f.derivative(j));
      out.push_back(std::move(comp));
    }
    return out;
  };
  const auto X = compile(h.x), L = compile(h.L);
  return make_section(model, box_rule(h.box_lower, h.box_upper, h.grid), [&](std::span<const double> u) {
    RayInit r;
    r.x = Vec::Zero(n);
    r.L = Vec::Zero(n);
    r.tangents.assign(k, Vec::Zero(n));
    r.dL.assign(k, Vec::Zero(n));
    for (int a = 0; a < n; ++a) {
      r.x(a) = X[a].f.eval(u);
      r.L(a) = L[a].f.eval(u);
      for (int j = 0; j < k; ++j) {
        r.tangents[j](a) = X[a].df[j].eval(u);
        r.dL[j](a) = L[a].df[j].eval(u);
      }
    }
    return r;
  });
}

CrossSectionGrid make_base_section(const MetricModel& model, const ScenarioConfig& c) {
  const HypersurfaceConfig& h = c.hypersurface;
  if (h.kind == "cone") return light_cone_section(model, to_vec(h.tip), h.s_ref, cone_rule(c));
  if (h.kind == "custom-section") return make_custom_section(model, c);
  if (auto* sl = dynamic_cast<const SchwarzschildLemaitre*>(&model))
    return horizon_section(*sl, h.slice, sphere_rule(2, h.grid[0], h.grid[1]));
  if (auto* pr = dynamic_cast<const ProductSurfaceM2*>(&model)) {
    const QuadratureRule rule = pr->surface() == ProductSurfaceM2::Surface::Sphere
                                    ? sphere_rule(2, h.grid[0], h.grid[1])
                                    : box_rule(h.box_lower, h.box_upper, h.grid);
    return product_section(*pr, h.slice, rule);
  }
  throw Error(ErrorKind::InvalidArgument, "no horizon section for " + model.name());
}

struct Context {
  explicit Context(const ScenarioConfig& config) : c(config) {}

  const ScenarioConfig& c;
  std::shared_ptr<const MetricModel> model;
  WeightField weight;
  Tolerances tol;
  std::uint64_t seed = 1;
  CheckConfig cc;
  double samples = 128.0;
  std::optional<NullHypersurfacePatch> analysis;
  std::optional<HawkingResult> hawking;

  const NullHypersurfacePatch& patch() {
    if (!analysis) {
      PatchOptions opt;
      if (c.hypersurface.kind == "cone") {
        opt.t_max = c.hypersurface.t_max;
      } else {
        opt.t_min = c.hypersurface.window[0];
        opt.t_max = c.hypersurface.window[1];
      }
      opt.propagation.samples_per_unit = samples;
      analysis = build_patch(model, make_base_section(*model, c), weight, opt);
    }
    return *analysis;
  }
};

json location(const NullHypersurfacePatch& P, std::size_t node, double t) {
  return json{{"node", node}, {"t", num(t)}, {"u", P.section().nodes[node].u}, {"x", vec_json(flow(P, node, t))}};
}

json integrator(const NullHypersurfacePatch& P) {
  RayDiagnostics d;
  std::size_t samples = 0;
  for (const auto& r : P.rays()) {
    d.structure = std::max(d.structure, r.diagnostics().structure);
    d.gauss = std::max(d.gauss, r.diagnostics().gauss);
    d.null_defect = std::max(d.null_defect, r.diagnostics().null_defect);
    d.ubar_symmetry = std::max(d.ubar_symmetry, r.diagnostics().ubar_symmetry);
    samples += r.size();
  }
  return json{{"generators", P.size()},
              {"samples", samples},
              {"structure", num(d.structure)},
              {"gauss", num(d.gauss)},
              {"null_defect", num(d.null_defect)},
              {"ubar_symmetry", num(d.ubar_symmetry)}};
}

json entry(const std::string& name, bool pass, bool strict, double tol, double worst, json where) {
  return json{{"check", name},
              {"verdict", pass ? "pass" : "fail"},
              {"strict", strict},
              {"tolerance", tol},
              {"worst_margin", num(worst)},
              {"worst_location", std::move(where)},
              {"per_generator", json::array()},
              {"details", json::object()},
              {"artifacts", json::array()}};
}

json per_generator(const CheckReport& r) {
  json out = json::array();
  for (const auto& g : r.per_generator) out.push_back(json{{"id", g.id}, {"margin", num(g.margin)}, {"t", num(g.t)}});
  return out;
}

std::string csv_name(const ScenarioConfig& c, const std::string& base) { return c.csv_prefix + base + ".csv"; }

json run_check(const std::string& name, Context& ctx, RunResult& out) {
  const ScenarioConfig& c = ctx.c;
  const bool strict = c.policy == VerdictPolicy::Strict;
  auto attach = [&](json& e, const std::string& base, const std::string& body) {
    const std::string file = csv_name(c, base);
    out.artifacts.emplace_back(file, body);
    e["artifacts"].push_back(file);
  };

  if (name == "nc1") {
    const auto& P = ctx.patch();
    const CheckReport r = nc1_check(P, ctx.cc);
    json e = entry(name, r.pass, strict, ctx.tol.nc1, r.worst_margin, location(P, r.worst_id, r.worst_t));
    e["per_generator"] = per_generator(r);
    e["details"] = {{"focal_truncated", r.focal_truncated}, {"integrator", integrator(P)}};
    std::ostringstream os;
    os << "node,t,margin\n" << std::setprecision(17);
    for (std::size_t z = 0; z < P.size(); ++z) {
      const auto m = concavity_margins(P.ray(z), c.N);
      for (std::size_t i = 0; i < m.size(); ++i) os << z << ',' << P.ray(z).t(i + 1) << ',' << m[i] << '\n';
    }
    attach(e, "nc1", os.str());
    return e;
  }
  if (name == "nce") {
    const auto& P = ctx.patch();
    const auto pairs = random_pairs(P, static_cast<std::size_t>(c.nce_pairs), ctx.seed);
    const CheckReport r = nce_check(P, ctx.cc, pairs);
    json e = entry(name, r.pass, strict, ctx.tol.nce, r.worst_margin,
                   json{{"node", nullptr}, {"pair", r.worst_id}, {"t", num(r.worst_t)}});
    for (const auto& g : r.per_generator)
      e["per_generator"].push_back(
          json{{"id", g.id}, {"margin", num(g.margin)}, {"t", num(g.t)}, {"midpoint", num(g.midpoint)}});
    e["details"] = {{"pairs", pairs.size()}, {"seed", ctx.seed}, {"integrator", integrator(P)}};
    return e;
  }
  if (name == "riccati") {
    const auto& P = ctx.patch();
    const auto curves = riccati_diagnostic(P, ctx.cc);
    double worst = -std::numeric_limits<double>::infinity(), worst_t = 0.0;
    std::size_t worst_node = 0;
    json gens = json::array();
    std::ostringstream os;
    os << "node,t,d\n" << std::setprecision(17);
    for (const auto& cv : curves) {
      double tmax = cv.t.empty() ? 0.0 : cv.t.front();
      for (std::size_t i = 0; i < cv.d.size(); ++i) {
        if (cv.d[i] == cv.max_d) tmax = cv.t[i];
        os << cv.node << ',' << cv.t[i] << ',' << cv.d[i] << '\n';
      }
      gens.push_back(json{{"id", cv.node}, {"margin", num(-cv.max_d)}, {"t", num(tmax)}});
      if (cv.max_d > worst) {
        worst = cv.max_d;
        worst_node = cv.node;
        worst_t = tmax;
      }
    }
    json e = entry(name, -worst >= -ctx.tol.riccati, strict, ctx.tol.riccati, -worst, location(P, worst_node, worst_t));
    e["per_generator"] = std::move(gens);
    e["details"] = {{"integrator", integrator(P)}};
    attach(e, "riccati", os.str());
    return e;
  }
  if (name == "lightcone") {
    ConeScenario sc;
    sc.model = ctx.model;
    sc.tip = to_vec(c.hypersurface.tip);
    sc.rule = cone_rule(c);
    sc.s_max = c.hypersurface.s_max;
    sc.weight = ctx.weight;
    sc.N = c.N;
    sc.grid_points = c.lightcone_points;
    sc.samples_per_unit = ctx.samples;
    sc.monotonicity_tol = ctx.tol.lightcone;
    sc.tip_tol = ctx.tol.tip;
    sc.policy = VerdictPolicy::MarginReport;
    const ConeCurve cv = lightcone_comparison(sc);
    std::size_t k_worst = 0;
    for (std::size_t k = 0; k + 1 < cv.A.size(); ++k)
      if (cv.A[k] - cv.A[k + 1] == cv.monotonicity_margin) k_worst = k + 1;
    json e = entry(name, cv.monotone && cv.tip_ok, strict, ctx.tol.lightcone, cv.monotonicity_margin,
                   json{{"node", nullptr}, {"t", num(cv.s[k_worst])}});
    e["details"] = {{"monotone", cv.monotone},
                    {"tip_value", num(cv.tip_value)},
                    {"tip_deviation", num(cv.tip_deviation)},
                    {"tip_ok", cv.tip_ok},
                    {"max_deviation_from_one", num(cv.max_deviation_from_one)},
                    {"integrator", integrator(cv.patch)}};
    std::ostringstream os;
    write_cone_csv(cv, os);
    attach(e, "lightcone", os.str());
    return e;
  }
  if (name == "hawking") {
    HorizonScenario hs;
    hs.model = ctx.model;
    hs.base = make_base_section(*ctx.model, c);
    hs.weight = ctx.weight;
    hs.t1 = make_transverse(c.t1, c.dimension - 2);
    hs.t2 = make_transverse(c.t2, c.dimension - 2);
    hs.T_future = c.T_future;
    hs.samples_per_unit = ctx.samples;
    hs.tol = ctx.tol.hawking;
    hs.equality_tol = ctx.tol.equality;
    ctx.hawking = hawking_area(hs);
    const HawkingResult& r = *ctx.hawking;
    json e = entry(name, r.pass, strict, ctx.tol.hawking, r.relative_gap, nullptr);
    e["details"] = {{"area1", num(r.area1)},           {"area2", num(r.area2)},
                    {"relative_gap", num(r.relative_gap)}, {"equality", r.equality},
                    {"separation", num(r.separation)},     {"certified_to", num(r.certified_to)},
                    {"integrator", integrator(r.patch)}};
    return e;
  }
  if (name == "rigidity") {
    const bool cone = c.hypersurface.kind == "cone";
    const NullHypersurfacePatch& P = ctx.hawking ? ctx.hawking->patch : ctx.patch();
    const RigidityMode mode = cone ? RigidityMode::Cone : RigidityMode::Horizon;
    const RigidityReport rig = rigidity_diagnostic(P, mode, c.N);
    const double dev = std::max({cone ? rig.shape_deviation : rig.identity_deviation, rig.det_deviation, rig.ricci});
    json e = entry(name, -dev >= -ctx.tol.rigidity, strict, ctx.tol.rigidity, -dev, nullptr);
    e["details"] = {{"mode", cone ? "cone" : "horizon"},
                    {"det_deviation", num(rig.det_deviation)},
                    {"shape_deviation", num(rig.shape_deviation)},
                    {"offdiagonal", num(rig.offdiagonal)},
                    {"identity_deviation", num(rig.identity_deviation)},
                    {"ricci", num(rig.ricci)},
                    {"patch", ctx.hawking ? "hawking" : "analysis"}};
    return e;
  }
  if (name == "stability") {
    StabilityScenario ss;
    ss.base = ctx.model;
    ss.h = std::make_shared<ConformalWell>(to_vec(c.stability.center), c.stability.sign);
    ss.eps = c.stability.eps;
    const Expression amp = Expression::parse(c.stability.amplitude, {"eps"});
    ss.amplitude = [amp](double eps) { return amp.eval({&eps, 1}); };
    if (!ctx.weight.is_zero()) ss.weight = [w = ctx.weight](double) { return w; };
    ss.tip = to_vec(c.hypersurface.tip);
    ss.s_ref = c.hypersurface.s_ref;
    ss.t_max = c.hypersurface.t_max;
    ss.rule = cone_rule(c);
    ss.densities = c.stability.densities;
    ss.config = ctx.cc;
    const StabilityReport r = stability_experiment(ss);
    double worst = *std::min_element(r.base_margins.begin(), r.base_margins.end());
    json rows = json::array();
    for (const auto& row : r.rows) {
      worst = std::min(worst, row.margins.back());
      json m = json::array();
      for (double x : row.margins) m.push_back(num(x));
      rows.push_back(json{{"eps", row.eps},
                          {"amplitude", num(row.amplitude)},
                          {"margins", m},
                          {"pass", row.pass},
                          {"resolution_monotone", row.resolution_monotone}});
    }
    const bool pass = r.all_pass && r.limit_pass && r.resolution_monotone && r.limit_gap <= ctx.tol.stability;
    json e = entry(name, pass, strict, ctx.tol.stability, worst, nullptr);
    json base = json::array();
    for (double x : r.base_margins) base.push_back(num(x));
    e["details"] = {{"densities", r.densities},       {"base_margins", base},
                    {"rows", rows},                   {"all_pass", r.all_pass},
                    {"limit_pass", r.limit_pass},     {"limit_gap", num(r.limit_gap)},
                    {"resolution_monotone", r.resolution_monotone}, {"rate", num(r.rate)}};
    std::ostringstream os;
    write_stability_csv(r, os);
    attach(e, "stability", os.str());
    return e;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown check " + name);
}

json skeleton(const char* status, int exit_status) {
  return json{{"schema_version", kSchemaVersion},
              {"tool", "nullot"},
              {"status", status},
              {"exit_status", exit_status},
              {"config", nullptr},
              {"seed", nullptr},
              {"tolerance_scale", nullptr},
              {"checks", json::array()},
              {"error", nullptr},
              {"violations", json::array()}};
}

const char* status_name(int code) {
  switch (code) {
    case kPass: return "pass";
    case kCheckFailed: return "check-failed";
    case kNumericalAbort: return "numerical-abort";
    default: return "config-error";
  }
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidN:
      return kConfigError;
    default:
      return kNumericalAbort;
  }
}

RunResult run(const ScenarioConfig& c, const RunOptions& options) {
  if (!(options.tolerance_scale > 0)) throw ConfigError(ErrorKind::ValidationError, {"tolerance-scale: must be positive"});
  RunResult out;
  Context ctx(c);
  ctx.model = make_metric(c.metric, c.params);
  ctx.weight = make_weight(c.weight, c.dimension);
  ctx.tol = c.tolerances;
  for (double* t : {&ctx.tol.nc1, &ctx.tol.nce, &ctx.tol.riccati, &ctx.tol.lightcone, &ctx.tol.tip, &ctx.tol.hawking,
                    &ctx.tol.equality, &ctx.tol.rigidity, &ctx.tol.stability})
    *t *= options.tolerance_scale;
  ctx.seed = options.seed.value_or(c.seed);
  ctx.samples = c.samples_per_unit * c.refinement;
  ctx.cc.N = c.N;
  ctx.cc.tol_c = ctx.tol.nc1;
  ctx.cc.refinement = c.refinement;
  ctx.cc.policy = c.policy;
  ctx.cc.nce_points = c.nce_points;
  ctx.cc.nce_tol = ctx.tol.nce;
  ctx.cc.riccati_tol = ctx.tol.riccati;

  json checks = json::array();
  json error = nullptr;
  int code = kPass;
  for (const auto& name : c.checks) {
    try {
      json e = run_check(name, ctx, out);
      if (e["verdict"] == "fail" && e["strict"].get<bool>()) code = kCheckFailed;
      checks.push_back(std::move(e));
    } catch (const Error& err) {
      code = exit_code_for(err.kind());
      error = json{{"check", name}, {"kind", to_string(err.kind())}, {"message", err.what()}};
      if (auto* f = dynamic_cast<const FocalPointError*>(&err)) error["parameter"] = num(f->parameter());
      json e = entry(name, false, c.policy == VerdictPolicy::Strict, 0.0, std::nan(""), nullptr);
      e["verdict"] = "aborted";
      checks.push_back(std::move(e));
      break;  // later checks may depend on this one
    } catch (const std::exception& err) {
      code = kNumericalAbort;
      error = json{{"check", name}, {"kind", "Internal"}, {"message", err.what()}};
      json e = entry(name, false, c.policy == VerdictPolicy::Strict, 0.0, std::nan(""), nullptr);
      e["verdict"] = "aborted";
      checks.push_back(std::move(e));
      break;
    }
  }
  out.exit_code = code;
  out.report = skeleton(status_name(code), code);
  out.report["config"] = to_json(c);
  out.report["seed"] = ctx.seed;
  out.report["tolerance_scale"] = options.tolerance_scale;
  out.report["checks"] = std::move(checks);
  out.report["error"] = std::move(error);
  return out;
}

json config_error_report(const ConfigError& e) {
  json r = skeleton("config-error", kConfigError);
  r["error"] = json{{"check", nullptr}, {"kind", to_string(e.kind())}, {"message", e.what()}};
  r["violations"] = e.violations();
  return r;
}

void write_outputs(const RunResult& result, const std::string& report_name, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const std::filesystem::path& p, const std::string& body) {
    std::ofstream f(out_dir / p, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + (out_dir / p).string());
    f << body;
  };
  write(report_name, result.report.dump(2) + "\n");
  for (const auto& [name, body] : result.artifacts) write(name, body);
}

}  // namespace nullot::cli
