#include "nullot/transport.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "nullot/parallel.hpp"

namespace nullot {

// --- profiles -------------------------------------------------------------------

DensityProfile::DensityProfile(std::vector<double> edges, std::vector<double> density)
    : edges_(std::move(edges)), f_(std::move(density)) {
  if (edges_.size() != f_.size() + 1 || f_.empty())
    throw Error(ErrorKind::InvalidArgument, "profile needs one more edge than cells");
  cdf_.assign(edges_.size(), 0.0);
  for (std::size_t j = 0; j < f_.size(); ++j) {
    const double len = edges_[j + 1] - edges_[j];
    if (!(len >= 0.0)) throw Error(ErrorKind::InvalidArgument, "profile edges must be nondecreasing");
    if (!(f_[j] >= 0.0) || !std::isfinite(f_[j])) throw Error(ErrorKind::InvalidArgument, "density must be nonnegative");
    if (f_[j] < 1e-300) f_[j] = 0.0;
    cdf_[j + 1] = cdf_[j] + f_[j] * len;
  }
}

DensityProfile DensityProfile::from_masses(std::vector<double> edges, const std::vector<double>& masses) {
  std::vector<double> f(masses.size());
  for (std::size_t j = 0; j < masses.size(); ++j) {
    const double len = edges[j + 1] - edges[j];
    if (masses[j] < 0.0) throw Error(ErrorKind::InvalidArgument, "cell mass must be nonnegative");
    f[j] = len > 0.0 ? masses[j] / len : 0.0;
    if (len <= 0.0 && masses[j] > 0.0) throw Error(ErrorKind::InvalidArgument, "mass on an empty cell");
  }
  return DensityProfile(std::move(edges), std::move(f));
}

DensityProfile DensityProfile::uniform(double lo, double hi, double mass) {
  if (!(hi > lo)) throw Error(ErrorKind::InvalidArgument, "uniform profile needs lo < hi");
  return DensityProfile({lo, hi}, {mass / (hi - lo)});
}

double DensityProfile::cdf(double t) const {
  if (cdf_.empty() || t <= edges_.front()) return 0.0;
  if (t >= edges_.back()) return cdf_.back();
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - edges_.begin()) - 1;
  return cdf_[j] + f_[j] * (t - edges_[j]);
}

double DensityProfile::quantile(double m) const {
  if (empty()) throw Error(ErrorKind::EmptySupport, "quantile of an empty profile");
  m = std::clamp(m, 0.0, mass());
  // first cell with positive mass whose upper cumulative reaches m
  for (std::size_t j = 0; j < f_.size(); ++j) {
    if (f_[j] <= 0.0) continue;
    if (cdf_[j + 1] >= m) return edges_[j] + std::max(0.0, m - cdf_[j]) / f_[j];
  }
  return support().second;
}

std::pair<double, double> DensityProfile::support() const {
  double lo = std::numeric_limits<double>::quiet_NaN(), hi = lo;
  for (std::size_t j = 0; j < f_.size(); ++j)
    if (cell_mass(j) > 0.0) {
      if (std::isnan(lo)) lo = edges_[j];
      hi = edges_[j + 1];
    }
  return {lo, hi};
}

DensityProfile DensityProfile::scaled(double c) const {
  std::vector<double> f = f_;
  for (double& x : f) x *= c;
  return DensityProfile(edges_, std::move(f));
}

DensityProfile DensityProfile::shifted(double s) const {
  std::vector<double> e = edges_;
  for (double& x : e) x += s;
  return DensityProfile(std::move(e), f_);
}

double cdf_distance(const DensityProfile& a, const DensityProfile& b) {
  double d = 0.0;
  for (double t : a.edges()) d = std::max(d, std::abs(a.cdf(t) - b.cdf(t)));
  for (double t : b.edges()) d = std::max(d, std::abs(a.cdf(t) - b.cdf(t)));
  return d;
}

// --- fibered measures -------------------------------------------------------------

double FiberedMeasure::total_mass() const {
  double s = 0.0;
  for (std::size_t z = 0; z < fibers.size(); ++z) s += section_weights[z] * fibers[z].mass();
  return s;
}

void FiberedMeasure::normalize() {
  const double m = total_mass();
  if (!(m > 0.0)) throw Error(ErrorKind::EmptySupport, "cannot normalize a zero measure");
  for (auto& f : fibers) f = f.scaled(1.0 / m);
}

double FiberedMeasure::integrate_label(const std::vector<double>& phi) const {
  double s = 0.0;
  for (std::size_t z = 0; z < fibers.size(); ++z) s += section_weights[z] * phi[z] * fibers[z].mass();
  return s;
}

namespace {

std::vector<double> section_weights(const NullHypersurfacePatch& patch) {
  std::vector<double> w(patch.size());
  for (std::size_t z = 0; z < w.size(); ++z) w[z] = patch.section().nodes[z].weight * patch.section().nodes[z].area_element;
  return w;
}

// Ray cells inside [lo, hi], each split `refine` times.
std::vector<double> cell_edges(const GeneratorRay& r, double lo, double hi, int refine) {
  lo = std::max(lo, r.t_lo());
  hi = std::min(hi, r.t_hi());
  if (!(hi > lo)) throw Error(ErrorKind::InvalidArgument, "window does not meet the ray window");
  std::vector<double> knots{lo};
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r.t(i) > lo && r.t(i) < hi) knots.push_back(r.t(i));
  knots.push_back(hi);
  std::vector<double> e{lo};
  for (std::size_t k = 0; k + 1 < knots.size(); ++k)
    for (int q = 1; q <= refine; ++q) e.push_back(q == refine ? knots[k + 1] : knots[k] + (knots[k + 1] - knots[k]) * q / refine);
  return e;
}

}  // namespace

FiberedMeasure fiber_uniform(const NullHypersurfacePatch& patch, const std::vector<std::pair<double, double>>& windows,
                             const std::vector<double>& fiber_mass, int refine) {
  if (windows.size() != patch.size() || fiber_mass.size() != patch.size())
    throw Error(ErrorKind::InvalidArgument, "one window and mass per node required");
  FiberedMeasure mu;
  mu.section_weights = section_weights(patch);
  mu.fibers.resize(patch.size());
  parallel_for(patch.size(), [&](std::size_t z) {
    const auto e = cell_edges(patch.ray(z), windows[z].first, windows[z].second, refine);
    std::vector<double> m(e.size() - 1);
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < e.size(); ++j) total += m[j] = patch.fiber_mass(z, e[j], e[j + 1]);
    for (double& x : m) x *= fiber_mass[z] / total;
    mu.fibers[z] = DensityProfile::from_masses(e, m);
  });
  return mu;
}

FiberedMeasure from_reference_density(const NullHypersurfacePatch& patch,
                                      const std::vector<std::pair<double, double>>& windows, const Integrand& rho,
                                      int refine) {
  if (windows.size() != patch.size()) throw Error(ErrorKind::InvalidArgument, "one window per node required");
  FiberedMeasure mu;
  mu.section_weights = section_weights(patch);
  mu.fibers.resize(patch.size());
  parallel_for(patch.size(), [&](std::size_t z) {
    const GeneratorRay& r = patch.ray(z);
    const auto e = cell_edges(r, windows[z].first, windows[z].second, refine);
    std::vector<double> m(e.size() - 1);
    for (std::size_t j = 0; j + 1 < e.size(); ++j)
      m[j] = std::max(0.0, patch.fiber_integral(z, e[j], e[j + 1], [&](double t) { return rho(r.position(t), z, t); }));
    mu.fibers[z] = DensityProfile::from_masses(e, m);
  });
  return mu;
}

FiberedMeasure flow_pushforward(const FiberedMeasure& mu, const std::vector<double>& s) {
  FiberedMeasure out = mu;
  for (std::size_t z = 0; z < mu.size(); ++z) out.fibers[z] = mu.fibers[z].shifted(s[z]);
  return out;
}

NullConnection check_null_connected(const FiberedMeasure& mu0, const FiberedMeasure& mu1, double tol) {
  if (mu0.size() != mu1.size()) throw Error(ErrorKind::InvalidArgument, "measures live on different patches");
  NullConnection c;
  double scale = 1.0;
  for (std::size_t z = 0; z < mu0.size(); ++z) {
    c.mismatch = std::max(c.mismatch, std::abs(mu0.fibers[z].mass() - mu1.fibers[z].mass()));
    scale = std::max({scale, mu0.fibers[z].mass(), mu1.fibers[z].mass()});
  }
  c.connected = c.mismatch <= tol * scale;
  return c;
}

// --- monotone rearrangement ------------------------------------------------------------

double FiberPlan::map(double x) const {
  if (segments.empty()) throw Error(ErrorKind::EmptySupport, "empty plan");
  auto it = std::lower_bound(segments.begin(), segments.end(), x,
                             [](const PlanSegment& s, double v) { return s.x1 < v; });
  if (it == segments.end()) --it;
  const PlanSegment& s = *it;
  if (x <= s.x0) return s.y0;
  if (s.x1 == s.x0) return s.y1;
  return s.y0 + (s.y1 - s.y0) * (x - s.x0) / (s.x1 - s.x0);
}

double FiberPlan::min_displacement() const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : segments) d = std::min({d, s.y0 - s.x0, s.y1 - s.x1});
  return d;
}

bool FiberPlan::nondecreasing() const {
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (segments[k].y1 < segments[k].y0 || segments[k].x1 < segments[k].x0) return false;
    if (k > 0 && (segments[k].y0 < segments[k - 1].y1 || segments[k].x0 < segments[k - 1].x1)) return false;
  }
  return true;
}

FiberPlan monotone_rearrangement(const DensityProfile& rho0, const DensityProfile& rho1, double rel_tol) {
  if (rho0.empty() || rho1.empty()) throw Error(ErrorKind::EmptySupport, "monotone rearrangement of an empty profile");
  const double m0 = rho0.mass(), m1 = rho1.mass();
  if (std::abs(m0 - m1) > rel_tol * std::max(m0, m1))
    throw Error(ErrorKind::MassMismatch, "fiber masses " + std::to_string(m0) + " and " + std::to_string(m1));
  FiberPlan plan;
  plan.mass_scale = m0 / m1;
  const auto& e0 = rho0.edges();
  const auto& e1 = rho1.edges();
  const auto& f0 = rho0.density();
  std::vector<double> f1 = rho1.density();
  for (double& f : f1) f *= plan.mass_scale;

  auto next = [](const std::vector<double>& f, const std::vector<double>& e, std::size_t j) {
    while (j < f.size() && !(f[j] > 0.0 && e[j + 1] > e[j])) ++j;
    return j;
  };
  std::size_t i = next(f0, e0, 0), j = next(f1, e1, 0);
  double x = i < f0.size() ? e0[i] : 0.0, y = j < f1.size() ? e1[j] : 0.0;
  double r0 = i < f0.size() ? f0[i] * (e0[i + 1] - e0[i]) : 0.0;
  double r1 = j < f1.size() ? f1[j] * (e1[j + 1] - e1[j]) : 0.0;
  while (i < f0.size() && j < f1.size()) {
    PlanSegment s{x, 0, y, 0, f0[i]};
    // cell masses f·(e[j+1] − e[j]) carry round-off relative to |e|, not to the length
    const double eps = std::max(1e-13 * m0, 8 * std::numeric_limits<double>::epsilon() *
                                                 (f0[i] * std::max(std::abs(e0[i]), std::abs(e0[i + 1])) +
                                                  f1[j] * std::max(std::abs(e1[j]), std::abs(e1[j + 1]))));
    const bool end0 = r0 <= r1 + eps, end1 = r1 <= r0 + eps;
    const double dm = std::min(r0, r1);
    s.x1 = end0 ? e0[i + 1] : x + dm / f0[i];
    s.y1 = end1 ? e1[j + 1] : y + dm / f1[j];
    // segments below the floating-point resolution carry round-off mass only
    if (s.x1 > s.x0 && s.y1 > s.y0) plan.segments.push_back(s);
    x = s.x1;
    y = s.y1;
    r0 -= dm;
    r1 -= dm;
    if (end0) {
      i = next(f0, e0, i + 1);
      if (i < f0.size()) {
        x = e0[i];
        r0 = f0[i] * (e0[i + 1] - e0[i]);
      }
    }
    if (end1) {
      j = next(f1, e1, j + 1);
      if (j < f1.size()) {
        y = e1[j];
        r1 = f1[j] * (e1[j + 1] - e1[j]);
      }
    }
  }
  return plan;
}

DensityProfile pushforward(const FiberPlan& plan, double t) {
  if (plan.empty()) throw Error(ErrorKind::EmptySupport, "empty plan");
  std::vector<double> edges, dens;
  for (const auto& s : plan.segments) {
    const double a = (1.0 - t) * s.x0 + t * s.y0;
    const double b = (1.0 - t) * s.x1 + t * s.y1;
    const double mass = s.f0 * (s.x1 - s.x0);
    if (mass <= 0.0) continue;
    if (!(b > a)) throw Error(ErrorKind::NonInjective, "interpolating map collapses a segment");
    if (edges.empty()) {
      edges.push_back(a);
    } else if (a > edges.back()) {
      dens.push_back(0.0);
      edges.push_back(a);
    }
    // a may undercut the previous edge by round-off
    const double lo = edges.back();
    if (!(b > lo)) throw Error(ErrorKind::NonInjective, "pushforward concentrates mass at a point");
    edges.push_back(b);
    dens.push_back(mass / (b - lo));
  }
  return DensityProfile(std::move(edges), std::move(dens));
}

double MonotonePlan::min_displacement() const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& f : fibers)
    if (!f.empty()) d = std::min(d, f.min_displacement());
  return d;
}

MonotonePlan monotone_plan(const FiberedMeasure& mu0, const FiberedMeasure& mu1, double rel_tol) {
  if (mu0.size() != mu1.size()) throw Error(ErrorKind::InvalidArgument, "measures live on different patches");
  MonotonePlan plan;
  plan.section_weights = mu0.section_weights;
  plan.fibers.resize(mu0.size());
  for (std::size_t z = 0; z < mu0.size(); ++z) {
    const double a = mu0.fibers[z].mass(), b = mu1.fibers[z].mass();
    if (std::abs(a - b) > rel_tol * std::max({a, b, 1e-300}) && (a > 0.0 || b > 0.0))
      throw Error(ErrorKind::NotNullConnected, "fiber " + std::to_string(z) + " masses differ: " + std::to_string(a) +
                                                    " vs " + std::to_string(b));
    if (a > 0.0) {
      plan.fibers[z] = monotone_rearrangement(mu0.fibers[z], mu1.fibers[z], rel_tol);
      plan.max_mass_correction = std::max(plan.max_mass_correction, std::abs(plan.fibers[z].mass_scale - 1.0));
    }
  }
  return plan;
}

FiberedMeasure interpolate(const MonotonePlan& plan, double t) {
  if (t < 0.0 || t > 1.0) throw Error(ErrorKind::InvalidArgument, "interpolation parameter outside [0, 1]");
  FiberedMeasure mu;
  mu.section_weights = plan.section_weights;
  mu.fibers.resize(plan.fibers.size());
  for (std::size_t z = 0; z < plan.fibers.size(); ++z)
    mu.fibers[z] = plan.fibers[z].empty() ? DensityProfile({0.0, 1.0}, {0.0}) : pushforward(plan.fibers[z], t);
  return mu;
}

// --- entropy -----------------------------------------------------------------------

namespace {

// ∫ a over [lo, hi] ⊂ ray window from the exact Hermite antiderivative.
class AIntegral {
 public:
  explicit AIntegral(const GeneratorRay& r) : r_(r), prefix_(r.size(), 0.0) {
    for (std::size_t i = 0; i + 1 < r.size(); ++i) prefix_[i + 1] = prefix_[i] + r.a_integral(i, r.t(i + 1) - r.t(i));
  }
  double F(double t) const {
    if (r_.size() < 2) return 0.0;
    const std::size_t i = r_.locate(t);
    return prefix_[i] + r_.a_integral(i, t - r_.t(i));
  }

 private:
  const GeneratorRay& r_;
  std::vector<double> prefix_;
};

}  // namespace

double entropy(const FiberedMeasure& mu, const NullHypersurfacePatch& patch) {
  if (mu.size() != patch.size()) throw Error(ErrorKind::InvalidArgument, "measure and patch differ in size");
  std::vector<double> fiber(mu.size(), 0.0);
  std::vector<int> bad(mu.size(), 0);
  parallel_for(mu.size(), [&](std::size_t z) {
    const DensityProfile& p = mu.fibers[z];
    if (p.empty()) return;
    const GeneratorRay& r = patch.ray(z);
    const double tol = 1e-12 * std::max(1.0, std::abs(r.t_hi()) + std::abs(r.t_lo()));
    const auto [lo, hi] = p.support();
    if (lo < r.t_lo() - tol || hi > r.t_hi() + tol) {
      bad[z] = 1;
      return;
    }
    const AIntegral A(r);
    double s = 0.0;
    const auto& e = p.edges();
    const auto& f = p.density();
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (f[j] <= 0.0) continue;
      const double len = e[j + 1] - e[j];
      if (!(len > 0.0)) {
        fiber[z] = std::numeric_limits<double>::infinity();
        return;
      }
      const double a0 = std::clamp(e[j], r.t_lo(), r.t_hi()), a1 = std::clamp(e[j + 1], r.t_lo(), r.t_hi());
      s += f[j] * len * std::log(f[j]) - f[j] * (A.F(a1) - A.F(a0));
    }
    fiber[z] = s;
  });
  for (std::size_t z = 0; z < mu.size(); ++z)
    if (bad[z])
      throw Error(ErrorKind::NotAbsolutelyContinuous, "fiber " + std::to_string(z) + " carries mass outside its ray window");
  double ent = 0.0;
  for (std::size_t z = 0; z < mu.size(); ++z) {
    if (std::isinf(fiber[z])) return std::numeric_limits<double>::infinity();
    ent += mu.section_weights[z] * fiber[z];
  }
  return ent;
}

double entropy_power(double ent, double divisor) {
  if (!(divisor > 0.0)) throw Error(ErrorKind::InvalidArgument, "entropy power needs a positive divisor");
  if (std::isinf(ent) && ent > 0) return 0.0;
  return std::exp(-ent / divisor);
}

double entropy_power(const FiberedMeasure& mu, const NullHypersurfacePatch& patch, double divisor) {
  return entropy_power(entropy(mu, patch), divisor);
}

EntropyCurve entropy_curve(const MonotonePlan& plan, const NullHypersurfacePatch& patch, double divisor, int points) {
  if (points < 2) throw Error(ErrorKind::InvalidArgument, "entropy curve needs at least two points");
  EntropyCurve c;
  for (int k = 0; k < points; ++k) {
    const double t = static_cast<double>(k) / (points - 1);
    const double e = entropy(interpolate(plan, t), patch);
    c.t.push_back(t);
    c.ent.push_back(e);
    c.u.push_back(entropy_power(e, divisor));
  }
  return c;
}

void write_entropy_csv(const EntropyCurve& curve, std::ostream& out) {
  out << "t,Ent,U\n" << std::setprecision(17);
  for (std::size_t k = 0; k < curve.t.size(); ++k) out << curve.t[k] << ',' << curve.ent[k] << ',' << curve.u[k] << '\n';
}

}  // namespace nullot
