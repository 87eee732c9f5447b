#include "nullot/apps.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "nullot/parallel.hpp"

namespace nullot {

// --- light-cone comparison ------------------------------------------------------

ConeCurve lightcone_comparison(const ConeScenario& sc) {
  if (!sc.model) throw Error(ErrorKind::InvalidArgument, "cone scenario without a metric");
  if (!(sc.N > 2.0)) throw Error(ErrorKind::InvalidN, "N must exceed 2");
  if (sc.grid_points < 2) throw Error(ErrorKind::InvalidArgument, "cone grid needs two points");
  const double s_min = sc.s_min > 0.0 ? sc.s_min : 1e-3 * sc.s_max;
  if (!(sc.s_max > s_min)) throw Error(ErrorKind::InvalidArgument, "s_max must exceed s_min");

  PatchOptions opt;
  opt.t_min = 0.0;
  opt.t_max = sc.s_max - s_min;
  opt.propagation.samples_per_unit = sc.samples_per_unit;
  opt.propagation.truncate_at_focal = false;  // focal points inside (0, s_max] are an error here
  ConeCurve c;
  c.patch = build_patch(sc.model, light_cone_section(*sc.model, sc.tip, s_min, sc.rule), sc.weight, opt);
  const NullHypersurfacePatch& P = c.patch;
  const double omega = unit_sphere_area(sc.N - 2.0);

  const int m = sc.grid_points;
  c.s.resize(m);
  c.A.resize(m);
  for (int k = 0; k < m; ++k) c.s[k] = s_min * std::pow(sc.s_max / s_min, static_cast<double>(k) / (m - 1));
  c.s.back() = sc.s_max;
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t k) {
    const double t = std::min(c.s[k] - s_min, P.ray(0).t_hi());
    // J̄ is smooth at the tip while log det is not, so interpolate J̄
    const double I = P.section().integrate([&](std::size_t z) {
      const GeneratorRay& r = P.ray(z);
      const double phi = sc.weight.is_zero() ? 0.0 : sc.weight(r.position(t), r.affine_offset() + r.affine_rate() * t);
      return std::exp(phi) * r.jbar_at(t).determinant();
    });
    c.A[k] = I / (omega * std::pow(c.s[k], sc.N - 2.0));
  });

  c.monotonicity_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < m; ++k) c.monotonicity_margin = std::min(c.monotonicity_margin, c.A[k] - c.A[k + 1]);
  c.monotone = c.monotonicity_margin >= -sc.monotonicity_tol;
  for (double a : c.A) c.max_deviation_from_one = std::max(c.max_deviation_from_one, std::abs(a - 1.0));

  const double phi_p = sc.weight(sc.tip, 0.0);
  if (std::isfinite(phi_p)) {
    c.tip_value = std::exp(phi_p);
    c.tip_deviation = std::abs(c.A.front() - c.tip_value);
    c.tip_ok = c.tip_deviation <= sc.tip_tol * std::max(1.0, c.tip_value);
  } else {
    c.tip_value = std::numeric_limits<double>::quiet_NaN();
  }
  if (!c.monotone && sc.policy == VerdictPolicy::Strict)
    throw Error(ErrorKind::MonotonicityViolation,
                "A(s) increases by " + std::to_string(-c.monotonicity_margin) + " on " + sc.model->name());
  return c;
}

void write_cone_csv(const ConeCurve& c, std::ostream& out) {
  out << "s,A\n" << std::setprecision(17);
  for (std::size_t k = 0; k < c.s.size(); ++k) out << c.s[k] << ',' << c.A[k] << '\n';
}

// --- Hawking area ----------------------------------------------------------------

double weighted_area(const CrossSectionGrid& S, const WeightField& weight) {
  return S.integrate([&](std::size_t z) {
    if (weight.is_zero()) return 1.0;
    return std::exp(weight(S.nodes[z].init.x, S.nodes[z].init.affine_offset));
  });
}

HawkingResult hawking_area(const HorizonScenario& sc) {
  if (!sc.model) throw Error(ErrorKind::InvalidArgument, "horizon scenario without a metric");
  const std::size_t m = sc.base.size();
  double lo = 0.0, hi = 0.0, sep = 0.0;
  for (std::size_t z = 0; z < m; ++z) {
    const double a = sc.t1(sc.base.nodes[z].u), b = sc.t2(sc.base.nodes[z].u);
    if (a > b) throw Error(ErrorKind::InvalidArgument, "S1 must lie in the causal past of S2 (t1 <= t2)");
    lo = std::min(lo, a);
    hi = std::max(hi, b);
    sep = std::max(sep, b - a);
  }
  HawkingResult r;
  r.separation = sep;
  const double T = sc.T_future > 0.0 ? sc.T_future : 10.0 * std::max(sep, 1e-3);

  // completeness certificate on a coarse grid
  PatchOptions cert;
  cert.t_min = lo;
  cert.t_max = hi + T;
  cert.propagation.samples_per_unit = sc.certificate_samples_per_unit;
  cert.propagation.truncate_at_focal = false;
  try {
    build_patch(sc.model, sc.base, WeightField(), cert);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::FocalPoint || e.kind() == ErrorKind::LeftChart || e.kind() == ErrorKind::OutOfChart)
      throw Error(ErrorKind::NotComplete, std::string("generators not complete on the certificate window: ") + e.what());
    throw;
  }
  r.certified_to = hi + T;

  PatchOptions opt;
  opt.t_min = lo;
  opt.t_max = hi;
  opt.propagation.samples_per_unit = sc.samples_per_unit;
  opt.propagation.truncate_at_focal = false;
  r.patch = build_patch(sc.model, sc.base, sc.weight, opt);
  r.area1 = weighted_area(graph_section_transfer(r.patch, sc.t1), sc.weight);
  r.area2 = weighted_area(graph_section_transfer(r.patch, sc.t2), sc.weight);
  r.relative_gap = (r.area2 - r.area1) / r.area2;
  r.pass = r.area1 <= r.area2 * (1.0 + sc.tol);
  r.equality = std::abs(r.relative_gap) <= sc.equality_tol;
  return r;
}

// --- rigidity ----------------------------------------------------------------------

RigidityReport rigidity_diagnostic(const NullHypersurfacePatch& patch, RigidityMode mode, double N,
                                   std::size_t stride) {
  if (stride == 0) stride = 1;
  const int n = patch.model().dimension();
  const int K = n - 2;
  std::vector<RigidityReport> per(patch.size());
  parallel_for(patch.size(), [&](std::size_t z) {
    const GeneratorRay& ray = patch.ray(z);
    RigidityReport& o = per[z];
    for (std::size_t i = 0; i < ray.size(); i += stride) {
      const Mat J = ray.jbar(i);
      const double det = J.determinant();
      const double s = ray.affine_offset() + ray.affine_rate() * ray.t(i);
      const double target = mode == RigidityMode::Horizon ? 1.0 : std::pow(s / ray.affine_offset(), K);
      o.det_deviation = std::max(o.det_deviation, std::abs(det - target) / target);
      const double lam = std::pow(std::abs(det), 1.0 / K);
      const Mat S = J / lam;
      const Mat I = Mat::Identity(K, K);
      o.shape_deviation = std::max(o.shape_deviation, (S - I).norm());
      Mat off = S;
      off.diagonal().setZero();
      o.offdiagonal = std::max(o.offdiagonal, off.norm());
      o.identity_deviation = std::max(o.identity_deviation, (J - I).norm());
      BakryEmeryQuery q;
      q.N = N;
      q.x = ray.x(i);
      q.v = ray.v(i);
      q.affine = s;
      q.affine_rate = ray.affine_rate();
      o.ricci = std::max(o.ricci, std::abs(bakry_emery_ricci(patch.model(), patch.weight(), q)));
    }
  });
  RigidityReport out;
  for (const auto& o : per) {
    out.det_deviation = std::max(out.det_deviation, o.det_deviation);
    out.shape_deviation = std::max(out.shape_deviation, o.shape_deviation);
    out.offdiagonal = std::max(out.offdiagonal, o.offdiagonal);
    out.identity_deviation = std::max(out.identity_deviation, o.identity_deviation);
    out.ricci = std::max(out.ricci, o.ricci);
  }
  return out;
}

// --- stability ---------------------------------------------------------------------

namespace {

double cone_margin(const StabilityScenario& sc, std::shared_ptr<const MetricModel> model, const WeightField& w,
                   double density) {
  PatchOptions opt;
  opt.t_min = 0.0;
  opt.t_max = sc.t_max;
  opt.propagation.samples_per_unit = density;
  const auto patch = build_patch(model, light_cone_section(*model, sc.tip, sc.s_ref, sc.rule), w, opt);
  for (const auto& ray : patch.rays())
    for (std::size_t i = 0; i < ray.size(); ++i)
      if (!is_lorentzian(model->metric(ray.x(i))))
        throw Error(ErrorKind::SignatureLoss, model->name() + " is not Lorentzian along the cone");
  return nc1_check(patch, sc.config).worst_margin;
}

bool shrinking(const std::vector<double>& m) {
  // successive changes under refinement must not grow; round-off level changes count as converged
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < m.size(); ++k) {
    const double d = std::abs(m[k + 1] - m[k]);
    if (d > 1e-12 && d > prev) return false;
    prev = std::max(d, 1e-12);
  }
  return true;
}

}  // namespace

StabilityReport stability_experiment(const StabilityScenario& sc) {
  if (!sc.base || !sc.h) throw Error(ErrorKind::InvalidArgument, "stability needs a base metric and a perturbation");
  if (sc.densities.empty()) throw Error(ErrorKind::InvalidArgument, "stability needs at least one resolution");
  validate(sc.config);
  StabilityReport r;
  r.densities = sc.densities;
  const WeightField w0 = sc.weight ? sc.weight(0.0) : WeightField();
  if (!is_lorentzian(sc.base->metric(sc.tip))) throw Error(ErrorKind::SignatureLoss, "base metric at the tip");
  for (double d : sc.densities) r.base_margins.push_back(cone_margin(sc, sc.base, w0, d));
  r.limit_pass = r.base_margins.back() >= -sc.config.tol_c;
  r.resolution_monotone = shrinking(r.base_margins);

  r.all_pass = true;
  for (double eps : sc.eps) {
    StabilityRow row;
    row.eps = eps;
    row.amplitude = sc.amplitude ? sc.amplitude(eps) : eps;
    auto model = std::make_shared<Perturbed>(sc.base, sc.h, row.amplitude);
    if (!is_lorentzian(model->metric(sc.tip)))
      throw Error(ErrorKind::SignatureLoss, "g + " + std::to_string(row.amplitude) + " h at the tip");
    const WeightField w = sc.weight ? sc.weight(eps) : WeightField();
    for (double d : sc.densities) row.margins.push_back(cone_margin(sc, model, w, d));
    row.pass = row.margins.back() >= -sc.config.tol_c;
    row.resolution_monotone = shrinking(row.margins);
    r.all_pass = r.all_pass && row.pass;
    r.resolution_monotone = r.resolution_monotone && row.resolution_monotone;
    r.rows.push_back(std::move(row));
  }

  const StabilityRow* smallest = nullptr;
  for (const auto& row : r.rows)
    if (row.eps > 0.0 && (!smallest || row.eps < smallest->eps)) smallest = &row;
  if (smallest) r.limit_gap = std::abs(smallest->margins.back() - r.base_margins.back());

  // least-squares slope of log gap against log ε
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& row : r.rows) {
    const double gap = std::abs(row.margins.back() - r.base_margins.back());
    if (row.eps <= 0.0 || gap <= 1e-14) continue;
    const double x = std::log(row.eps), y = std::log(gap);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) r.rate = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return r;
}

void write_stability_csv(const StabilityReport& r, std::ostream& out) {
  out << "eps,amplitude";
  for (double d : r.densities) out << ",margin_" << static_cast<long long>(d);
  out << '\n' << std::setprecision(17);
  out << "base,0";
  for (double m : r.base_margins) out << ',' << m;
  out << '\n';
  for (const auto& row : r.rows) {
    out << row.eps << ',' << row.amplitude;
    for (double m : row.margins) out << ',' << m;
    out << '\n';
  }
}

}  // namespace nullot
