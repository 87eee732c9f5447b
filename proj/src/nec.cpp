#include "nullot/nec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "nullot/parallel.hpp"

namespace nullot {

void validate(const CheckConfig& c) {
  if (!(c.N > 2.0)) throw Error(ErrorKind::InvalidN, "N must exceed 2");
  if (!(c.tol_c >= 0.0) || !(c.nce_tol >= 0.0) || !(c.riccati_tol >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "tolerances must be nonnegative");
  if (c.nce_points < 3) throw Error(ErrorKind::InvalidArgument, "nce needs at least three t-points");
  if (c.refinement < 1) throw Error(ErrorKind::InvalidArgument, "refinement must be at least 1");
}

namespace {

void finish(CheckReport& r) {
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& g : r.per_generator)
    if (g.margin < r.worst_margin) {
      r.worst_margin = g.margin;
      r.worst_id = g.id;
      r.worst_t = g.t;
    }
  if (r.per_generator.empty()) r.worst_margin = 0.0;
  r.pass = r.worst_margin >= -r.tolerance;
}

}  // namespace

std::vector<double> concavity_margins(const GeneratorRay& ray, double N) {
  const std::size_t m = ray.size();
  if (m < 3) return {};
  // b / max b without overflow
  const auto& a = ray.a_values();
  const double amax = *std::max_element(a.begin(), a.end());
  std::vector<double> b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = std::exp((a[i] - amax) / (N - 2.0));
  std::vector<double> out(m - 2);
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double lam = (ray.t(i + 1) - ray.t(i)) / (ray.t(i + 1) - ray.t(i - 1));
    out[i - 1] = b[i] - (lam * b[i - 1] + (1.0 - lam) * b[i + 1]);
  }
  return out;
}

CheckReport nc1_check(const NullHypersurfacePatch& patch, const CheckConfig& config) {
  validate(config);
  CheckReport r;
  r.check = "nc1";
  r.tolerance = config.tol_c;
  r.per_generator.resize(patch.size());
  parallel_for(patch.size(), [&](std::size_t z) {
    const GeneratorRay& ray = patch.ray(z);
    const auto mg = concavity_margins(ray, config.N);
    GeneratorMargin g;
    g.id = z;
    g.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mg.size(); ++i)
      if (mg[i] < g.margin) {
        g.margin = mg[i];
        g.t = ray.t(i + 1);
      }
    if (mg.empty()) g.margin = 0.0;
    r.per_generator[z] = g;
  });
  for (std::size_t z = 0; z < patch.size(); ++z)
    if (!std::isnan(patch.ray(z).focal_hi()) || !std::isnan(patch.ray(z).focal_lo())) r.focal_truncated.push_back(z);
  finish(r);
  return r;
}

CheckReport nce_check(const NullHypersurfacePatch& patch, const CheckConfig& config,
                      const std::vector<MeasurePair>& pairs) {
  validate(config);
  CheckReport r;
  r.check = "nce";
  r.tolerance = config.nce_tol;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const MonotonePlan plan = monotone_plan(pairs[k].first, pairs[k].second);
    const EntropyCurve c = entropy_curve(plan, patch, config.N - 1.0, config.nce_points);
    const std::size_t m = c.u.size();
    const double u0 = c.u.front(), u1 = c.u.back();
    const double scale = std::max({u0, u1, 1e-300});
    GeneratorMargin g;
    g.id = k;
    g.margin = std::numeric_limits<double>::infinity();
    g.midpoint = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double chord = (c.u[i] - ((1.0 - c.t[i]) * u0 + c.t[i] * u1)) / scale;
      if (chord < g.margin) {
        g.margin = chord;
        g.t = c.t[i];
      }
      if (i > 0 && i + 1 < m) g.midpoint = std::min(g.midpoint, (c.u[i] - 0.5 * (c.u[i - 1] + c.u[i + 1])) / scale);
    }
    r.per_generator.push_back(g);
  }
  finish(r);
  return r;
}

std::vector<RiccatiCurve> riccati_diagnostic(const NullHypersurfacePatch& patch, const CheckConfig& config) {
  validate(config);
  const WeightField& w = patch.weight();
  if (w.smoothness() == Smoothness::C0 && !w.is_constant())
    throw Error(ErrorKind::WeightNotSmooth, "Riccati diagnostic needs a C2 weight: " + w.description());
  std::vector<RiccatiCurve> out(patch.size());
  parallel_for(patch.size(), [&](std::size_t z) {
    const GeneratorRay& ray = patch.ray(z);
    RiccatiCurve& c = out[z];
    c.node = z;
    c.max_d = -std::numeric_limits<double>::infinity();
    const std::size_t m = ray.size();
    // a′ is exact from the Jacobi data; a″ by 6th-order differences of a′
    for (std::size_t i = 3; i + 3 < m; ++i) {
      const double h = ray.t(i + 1) - ray.t(i);
      double app;
      if (std::abs(ray.t(i + 3) - ray.t(i - 3) - 6 * h) <= 1e-9 * std::abs(h)) {
        app = (ray.da(i + 3) - 9 * ray.da(i + 2) + 45 * ray.da(i + 1) - 45 * ray.da(i - 1) + 9 * ray.da(i - 2) -
               ray.da(i - 3)) /
              (60 * h);
      } else {
        const double hl = ray.t(i) - ray.t(i - 1);
        app = (ray.da(i + 1) - ray.da(i - 1)) / (h + hl);
      }
      BakryEmeryQuery q;
      q.N = config.N;
      q.x = ray.x(i);
      q.v = ray.v(i);
      q.affine = ray.affine_offset() + ray.affine_rate() * ray.t(i);
      q.affine_rate = ray.affine_rate();
      const double d = app + ray.da(i) * ray.da(i) / (config.N - 2.0) + bakry_emery_ricci(patch.model(), w, q);
      c.t.push_back(ray.t(i));
      c.d.push_back(d);
      c.max_d = std::max(c.max_d, d);
    }
  });
  return out;
}

RescalingReport rescaling_invariance_check(const NullHypersurfacePatch& patch, const CheckConfig& config,
                                           const std::vector<TransverseFunction>& phis, double location_tol) {
  RescalingReport out;
  const CheckReport base = nc1_check(patch, config);
  for (const auto& phi : phis) {
    RescalingCase c;
    c.original = base;
    const RescaleResult rs = rescale_transverse(patch, phi);
    c.rescaled = nc1_check(rs.patch, config);
    c.same_verdict = c.original.pass == c.rescaled.pass;
    double predicted = std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < patch.size(); ++z) {
      const double f = phi(patch.section().nodes[z].u);
      const auto& o = c.original.per_generator[z];
      const auto& n = c.rescaled.per_generator[z];
      predicted = std::min(predicted, f * f * o.margin);
      // only violating generators have a well-defined worst location
      if (o.margin < -config.tol_c && n.margin < -config.tol_c)
        c.location_shift = std::max(c.location_shift, std::abs(n.t * f - o.t));
      if ((o.margin < -config.tol_c) != (n.margin < -config.tol_c)) c.same_violators = false;
    }
    c.reweighted_discrepancy =
        std::abs(c.rescaled.worst_margin - predicted) / std::max(std::abs(c.rescaled.worst_margin), config.tol_c);
    if (!c.same_verdict || !c.same_violators || c.location_shift > location_tol) out.pass = false;
    out.cases.push_back(std::move(c));
  }
  return out;
}

std::vector<MeasurePair> random_pairs(const NullHypersurfacePatch& patch, std::size_t count, unsigned long long seed,
                                      int refine) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const std::size_t m = patch.size();
  std::vector<MeasurePair> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> mass(m);
    for (auto& x : mass) x = 0.5 + U(rng);
    // random windows (at least a fifth of the ray window) and wavy densities
    auto draw = [&] {
      std::vector<std::pair<double, double>> win(m);
      std::vector<std::array<double, 3>> wave(m);
      for (std::size_t z = 0; z < m; ++z) {
        const double lo = patch.ray(z).t_lo(), hi = patch.ray(z).t_hi(), len = hi - lo;
        const double w = len * (0.2 + 0.8 * U(rng));
        const double a = lo + (len - w) * U(rng);
        win[z] = {a, a + w};
        wave[z] = {0.9 * U(rng), 1.0 + 6.0 * U(rng), 6.283185307179586 * U(rng)};
      }
      FiberedMeasure mu = from_reference_density(
          patch, win,
          [&](const Vec&, std::size_t z, double t) { return 1.0 + wave[z][0] * std::sin(wave[z][1] * t + wave[z][2]); },
          refine);
      for (std::size_t z = 0; z < m; ++z) mu.fibers[z] = mu.fibers[z].scaled(mass[z] / mu.fibers[z].mass());
      return mu;
    };
    FiberedMeasure mu0 = draw();
    FiberedMeasure mu1 = draw();
    const double total = mu0.total_mass();
    // same rescaling on both sides keeps the fiber masses equal
    for (std::size_t z = 0; z < m; ++z) {
      mu0.fibers[z] = mu0.fibers[z].scaled(1.0 / total);
      mu1.fibers[z] = mu1.fibers[z].scaled(mu0.fibers[z].mass() / mu1.fibers[z].mass());
    }
    out.emplace_back(std::move(mu0), std::move(mu1));
  }
  return out;
}

namespace {

double b_at(const GeneratorRay& ray, double t, double N) { return std::exp(ray.a_at(t) / (N - 2.0)); }

}  // namespace

MeasurePair thin_window_pair(const NullHypersurfacePatch& patch, std::size_t node, double t_c, double delta,
                             double width, double N) {
  const GeneratorRay& ray = patch.ray(node);
  const double x0 = t_c - delta, x1 = t_c + delta;
  const double bc = b_at(ray, t_c, N);
  const double w0 = width * b_at(ray, x0, N) / bc, w1 = width * b_at(ray, x1, N) / bc;
  if (x0 - w0 / 2 < ray.t_lo() || x1 + w1 / 2 > ray.t_hi())
    throw Error(ErrorKind::OutOfWindow, "thin windows leave the ray window");
  const auto& nd = patch.section().nodes[node];
  const double sw = nd.weight * nd.area_element;
  MeasurePair p;
  for (FiberedMeasure* mu : {&p.first, &p.second}) {
    mu->fibers.assign(patch.size(), DensityProfile({0.0, 1.0}, {0.0}));
    mu->section_weights.assign(patch.size(), 0.0);
    for (std::size_t z = 0; z < patch.size(); ++z)
      mu->section_weights[z] = patch.section().nodes[z].weight * patch.section().nodes[z].area_element;
  }
  p.first.fibers[node] = DensityProfile::uniform(x0 - w0 / 2, x0 + w0 / 2, 1.0 / sw);
  p.second.fibers[node] = DensityProfile::uniform(x1 - w1 / 2, x1 + w1 / 2, 1.0 / sw);
  return p;
}

ConverseProbe converse_probe(const NullHypersurfacePatch& patch, const CheckConfig& config, std::size_t node,
                             double t_c, const std::vector<double>& deltas, double width) {
  std::vector<MeasurePair> pairs;
  for (double d : deltas) pairs.push_back(thin_window_pair(patch, node, t_c, d, width, config.N));
  ConverseProbe out;
  out.nce = nce_check(patch, config, pairs);
  const GeneratorRay& ray = patch.ray(node);
  out.b_margin = std::numeric_limits<double>::infinity();
  double bmax = 0.0;
  for (std::size_t i = 0; i < ray.size(); ++i) bmax = std::max(bmax, std::exp(ray.a(i) / (config.N - 2.0)));
  for (double d : deltas) {
    const double m = b_at(ray, t_c, config.N) - 0.5 * (b_at(ray, t_c - d, config.N) + b_at(ray, t_c + d, config.N));
    out.b_margin = std::min(out.b_margin, m / bmax);
  }
  return out;
}

}  // namespace nullot
