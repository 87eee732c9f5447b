#include "nullot/hypersurface.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "nullot/parallel.hpp"

namespace nullot {

namespace {

constexpr double kPi = std::numbers::pi;

double gdot(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

Vec gamma_contract(const Christoffel& G, const Vec& a, const Vec& b) {
  const int n = static_cast<int>(a.size());
  Vec out = Vec::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out(i) += G(i, j, k) * a(j) * b(k);
  return out;
}

// sqrt det of the tangent Gram matrix; throws DegenerateSection.
double area_element_of(const MetricModel& model, const RayInit& r) {
  const Mat g = model.metric(r.x);
  const int K = static_cast<int>(r.tangents.size());
  Mat gram(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) gram(i, k) = gdot(g, r.tangents[i], r.tangents[k]);
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::DegenerateSection, "induced metric not positive definite");
  const Mat C = llt.matrixL();
  return C.diagonal().prod();
}

// Central difference gradient of a transverse function in the parameters.
std::vector<double> parameter_gradient(const TransverseFunction& f, const std::vector<double>& u) {
  std::vector<double> grad(u.size());
  std::vector<double> w = u;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(u[k]));
    w[k] = u[k] + h;
    const double fp = f(w);
    w[k] = u[k] - h;
    const double fm = f(w);
    w[k] = u[k];
    grad[k] = (fp - fm) / (2 * h);
  }
  return grad;
}

// Hyperspherical unit vector ω(a) ∈ S^K ⊂ R^{K+1} and its partials.
void hyperspherical(const std::vector<double>& a, Vec& w, std::vector<Vec>& dw) {
  const int K = static_cast<int>(a.size());
  w = Vec::Ones(K + 1);
  dw.assign(K, Vec::Ones(K + 1));
  for (int i = 0; i <= K; ++i)
    for (int j = 0; j < K; ++j) {
      double f, df;
      if (j < i) {
        f = std::sin(a[j]);
        df = std::cos(a[j]);
      } else if (j == i) {
        f = std::cos(a[j]);
        df = -std::sin(a[j]);
      } else {
        f = 1.0;
        df = 0.0;
      }
      w(i) *= f;
      for (int k = 0; k < K; ++k) dw[k](i) *= (k == j ? df : f);
    }
}

}  // namespace

// --- quadrature ------------------------------------------------------------------

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m, double a, double b) {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "Gauss-Legendre needs at least one node");
  std::vector<double> x(m), w(m);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[m - 1 - i] = 0.5 * (a + b) + 0.5 * (b - a) * z;
    w[m - 1 - i] = (b - a) / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

namespace {
QuadratureRule tensor(const std::vector<std::pair<std::vector<double>, std::vector<double>>>& axes) {
  QuadratureRule r;
  r.dim = static_cast<int>(axes.size());
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    std::vector<double> p(axes.size());
    double w = 1.0;
    for (std::size_t d = 0; d < axes.size(); ++d) {
      p[d] = axes[d].first[idx[d]];
      w *= axes[d].second[idx[d]];
    }
    r.points.push_back(std::move(p));
    r.weights.push_back(w);
    std::size_t d = axes.size();
    while (d > 0) {
      --d;
      if (++idx[d] < axes[d].first.size()) break;
      idx[d] = 0;
      if (d == 0) return r;
    }
    if (axes.empty()) return r;
  }
}
}  // namespace

QuadratureRule box_rule(const std::vector<double>& lower, const std::vector<double>& upper, const std::vector<int>& counts) {
  if (lower.size() != upper.size() || lower.size() != counts.size() || lower.empty())
    throw Error(ErrorKind::InvalidArgument, "box rule needs matching bounds and counts");
  std::vector<std::pair<std::vector<double>, std::vector<double>>> axes;
  for (std::size_t d = 0; d < lower.size(); ++d) axes.push_back(gauss_legendre(counts[d], lower[d], upper[d]));
  return tensor(axes);
}

QuadratureRule sphere_rule(int k, int n_polar, int n_azimuth, double eps) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "sphere rule needs k >= 1");
  std::vector<std::pair<std::vector<double>, std::vector<double>>> axes;
  for (int d = 0; d + 1 < k; ++d) axes.push_back(gauss_legendre(n_polar, eps, kPi - eps));
  std::vector<double> phi(n_azimuth), wphi(n_azimuth, 2 * kPi / n_azimuth);
  for (int j = 0; j < n_azimuth; ++j) phi[j] = (j + 0.5) * 2 * kPi / n_azimuth;
  axes.emplace_back(phi, wphi);
  return tensor(axes);
}

// --- sections -------------------------------------------------------------------

double CrossSectionGrid::integrate(const std::function<double(std::size_t)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += nodes[i].weight * nodes[i].area_element * f(i);
  return s;
}

double CrossSectionGrid::area() const {
  return integrate([](std::size_t) { return 1.0; });
}

CrossSectionGrid make_section(const MetricModel& model, const QuadratureRule& rule, const SectionMap& map) {
  if (rule.dim != model.dimension() - 2)
    throw Error(ErrorKind::InvalidArgument, "section parameter dimension must be n-2");
  CrossSectionGrid grid;
  grid.dimension = model.dimension();
  grid.nodes.resize(rule.points.size());
  parallel_for(rule.points.size(), [&](std::size_t i) {
    SectionNode& node = grid.nodes[i];
    node.u = rule.points[i];
    node.weight = rule.weights[i];
    node.init = map(node.u);
    model.require_in_chart(node.init.x);
    node.area_element = area_element_of(model, node.init);
  });
  return grid;
}

CrossSectionGrid light_cone_section(const MetricModel& model, const Vec& p, double s_ref, const QuadratureRule& rule,
                                    int tip_steps) {
  if (!(s_ref > 0.0)) throw Error(ErrorKind::InvalidArgument, "cone slice needs positive affine distance");
  const auto tet = orthonormal_tetrad(model, p);
  const int n = model.dimension();
  return make_section(model, rule, [&](std::span<const double> u) {
    Vec w;
    std::vector<Vec> dw;
    hyperspherical(std::vector<double>(u.begin(), u.end()), w, dw);
    Vec l = tet[0];
    std::vector<Vec> dl(dw.size(), Vec::Zero(n));
    for (int i = 0; i + 1 < n; ++i) {
      l += w(i) * tet[i + 1];
      for (std::size_t k = 0; k < dw.size(); ++k) dl[k] += dw[k](i) * tet[i + 1];
    }
    return integrate_from_tip(model, p, l, dl, s_ref, tip_steps);
  });
}

CrossSectionGrid horizon_section(const SchwarzschildLemaitre& model, double tau, const QuadratureRule& rule) {
  const double rho = tau + model.rho_minus_tau(model.schwarzschild_radius());
  return make_section(model, rule, [&](std::span<const double> u) {
    RayInit r;
    r.x = make_vec({tau, rho, u[0], u[1]});
    r.L = make_vec({1, 1, 0, 0});
    r.tangents = {make_vec({0, 0, 1, 0}), make_vec({0, 0, 0, 1})};
    const Christoffel G = christoffel(model, r.x);
    for (const auto& T : r.tangents) r.dL.push_back(gamma_contract(G, T, r.L));
    return r;
  });
}

CrossSectionGrid product_section(const ProductSurfaceM2& model, double t0, const QuadratureRule& rule) {
  return make_section(model, rule, [&](std::span<const double> u) {
    RayInit r;
    r.x = make_vec({t0, t0, u[0], u[1]});
    r.L = make_vec({1, 1, 0, 0});
    r.tangents = {make_vec({0, 0, 1, 0}), make_vec({0, 0, 0, 1})};
    const Christoffel G = christoffel(model, r.x);
    for (const auto& T : r.tangents) r.dL.push_back(gamma_contract(G, T, r.L));
    return r;
  });
}

// --- patches --------------------------------------------------------------------

NullHypersurfacePatch::NullHypersurfacePatch(std::shared_ptr<const MetricModel> model, CrossSectionGrid section,
                                             WeightField weight, std::vector<GeneratorRay> rays, PatchOptions options)
    : model_(std::move(model)),
      section_(std::move(section)),
      weight_(std::move(weight)),
      rays_(std::move(rays)),
      options_(std::move(options)) {}

double NullHypersurfacePatch::fiber_integral(std::size_t node, double lo, double hi,
                                             const std::function<double(double)>& f, double det_power) const {
  const GeneratorRay& r = rays_[node];
  lo = std::max(lo, r.t_lo());
  hi = std::min(hi, r.t_hi());
  if (!(hi > lo) || r.size() < 2) return 0.0;
  auto density = [&](double t) {
    double a = r.a_at(t);
    if (det_power != 1.0) a += (det_power - 1.0) * std::log(r.det_at(t));
    return std::exp(a);
  };
  std::size_t i = r.locate(lo);
  double s = 0.0;
  for (double c0 = lo; c0 < hi; ++i) {
    const double c1 = std::min(hi, i + 1 < r.size() ? r.t(i + 1) : hi);
    if (c1 > c0) {
      const double mid = 0.5 * (c0 + c1);
      s += (c1 - c0) / 6.0 *
           (f(c0) * density(c0) + 4.0 * f(mid) * density(mid) + f(c1) * density(c1));
    }
    c0 = c1;
    if (i + 1 >= r.size()) break;
  }
  return s;
}

double NullHypersurfacePatch::fiber_mass(std::size_t node, double lo, double hi) const {
  return fiber_integral(node, lo, hi, [](double) { return 1.0; });
}

NullHypersurfacePatch build_patch(std::shared_ptr<const MetricModel> model, CrossSectionGrid section,
                                  const WeightField& weight, const PatchOptions& options) {
  const std::size_t m = section.size();
  if (!options.windows.empty() && options.windows.size() != m)
    throw Error(ErrorKind::InvalidArgument, "one window per section node required");
  std::vector<GeneratorRay> rays(m);
  parallel_for(m, [&](std::size_t i) {
    const auto [lo, hi] = options.windows.empty() ? std::pair{options.t_min, options.t_max} : options.windows[i];
    rays[i] = propagate_jacobi(*model, section.nodes[i].init, lo, hi, options.propagation, weight, static_cast<int>(i));
  });
  return NullHypersurfacePatch(std::move(model), std::move(section), weight, std::move(rays), options);
}

Vec flow(const NullHypersurfacePatch& patch, std::size_t node, double t) { return patch.ray(node).position(t); }

double integrate_measure(const NullHypersurfacePatch& patch, const Integrand& phi, const MeasureOptions& opt) {
  const std::size_t m = patch.size();
  if (!opt.windows.empty() && opt.windows.size() != m)
    throw Error(ErrorKind::InvalidArgument, "one window per node required");
  std::vector<double> fiber(m, 0.0);
  parallel_for(m, [&](std::size_t z) {
    const GeneratorRay& r = patch.ray(z);
    const auto [lo, hi] = opt.windows.empty() ? std::pair{r.t_lo(), r.t_hi()} : opt.windows[z];
    fiber[z] = patch.fiber_integral(z, lo, hi, [&](double t) { return phi(r.position(t), z, t); }, opt.det_power);
  });
  return patch.section().integrate([&](std::size_t z) { return fiber[z]; });
}

RescaleResult rescale_transverse(const NullHypersurfacePatch& patch, const TransverseFunction& phi) {
  const CrossSectionGrid& S = patch.section();
  const std::size_t m = S.size();
  CrossSectionGrid S2 = S;
  std::vector<double> scale(m);
  PatchOptions opt = patch.options();
  opt.windows.assign(m, {0.0, 0.0});
  for (std::size_t z = 0; z < m; ++z) {
    const auto& u = S.nodes[z].u;
    const double f = phi(u);
    if (!(f > 0.0) || !std::isfinite(f))
      throw Error(ErrorKind::NonPositiveScale, "transverse function must be positive, got " + std::to_string(f));
    scale[z] = f;
    const auto grad = parameter_gradient(phi, u);
    RayInit& r = S2.nodes[z].init;
    r.L = f * r.L;
    for (std::size_t k = 0; k < r.dL.size(); ++k) r.dL[k] = f * r.dL[k] + grad[k] * patch.ray(z).init().L;
    r.affine_rate *= f;
    opt.windows[z] = {patch.ray(z).t_lo() / f, patch.ray(z).t_hi() / f};
  }
  RescaleResult out;
  out.patch = build_patch(patch.model_ptr(), std::move(S2), patch.weight(), opt);
  std::vector<double> dflow(m), dlog(m), ddens(m);
  parallel_for(m, [&](std::size_t z) {
    const GeneratorRay& a = patch.ray(z);
    const GeneratorRay& b = out.patch.ray(z);
    const double f = scale[z];
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double t = std::clamp(f * b.t(i), a.t_lo(), a.t_hi());
      dflow[z] = std::max(dflow[z], (b.x(i) - a.position(t)).norm());
      dlog[z] = std::max(dlog[z], std::abs(b.W(i) - std::log(a.det_at(t))));
    }
    const double ma = patch.fiber_mass(z, a.t_lo(), a.t_hi());
    const double mb = out.patch.fiber_mass(z, b.t_lo(), b.t_hi());
    ddens[z] = ma > 0 ? std::abs(f * mb - ma) / ma : 0.0;
  });
  for (std::size_t z = 0; z < m; ++z) {
    out.flow_deviation = std::max(out.flow_deviation, dflow[z]);
    out.log_det_deviation = std::max(out.log_det_deviation, dlog[z]);
    out.density_deviation = std::max(out.density_deviation, ddens[z]);
  }
  return out;
}

CrossSectionGrid graph_section_transfer(const NullHypersurfacePatch& patch, const TransverseFunction& t_L) {
  const CrossSectionGrid& S = patch.section();
  const MetricModel& model = patch.model();
  CrossSectionGrid out;
  out.dimension = S.dimension;
  out.nodes.resize(S.size());
  parallel_for(S.size(), [&](std::size_t z) {
    const SectionNode& node = S.nodes[z];
    const GeneratorRay& ray = patch.ray(z);
    const double tz = t_L(node.u);
    const JacobiPoint p = ray.exact_state(tz);
    const auto grad = parameter_gradient(t_L, node.u);
    // T_k = Σ_i C(k,i) e_i with C the inverse of gs
    const Mat& gs = ray.frame().gs;
    const int K = static_cast<int>(gs.rows());
    const Mat C = gs.triangularView<Eigen::Lower>().solve(Mat::Identity(K, K));
    RayInit r;
    r.x = p.x;
    r.L = p.v;
    for (int k = 0; k < K; ++k) {
      Vec T = Vec::Zero(p.x.size()), D = Vec::Zero(p.x.size());
      for (int i = 0; i <= k; ++i) {
        T += C(k, i) * p.J[i];
        D += C(k, i) * p.DJ[i];
      }
      r.tangents.push_back(T + grad[k] * p.v);
      r.dL.push_back(D);
    }
    r.affine_offset = ray.affine_offset() + ray.affine_rate() * tz;
    r.affine_rate = ray.affine_rate();
    SectionNode& o = out.nodes[z];
    o.u = node.u;
    o.weight = node.weight;
    o.init = std::move(r);
    o.area_element = area_element_of(model, o.init);
  });
  return out;
}

IndependenceReport cross_section_independence_check(const NullHypersurfacePatch& first,
                                                    const NullHypersurfacePatch& second,
                                                    const std::vector<double>& shift, double lo, double hi,
                                                    const std::vector<Integrand>& integrands,
                                                    double second_det_power) {
  const std::size_t m = first.size();
  if (second.size() != m || shift.size() != m)
    throw Error(ErrorKind::InvalidArgument, "sections must share their node set");
  MeasureOptions o1, o2;
  o1.windows.assign(m, {lo, hi});
  o2.windows.resize(m);
  for (std::size_t z = 0; z < m; ++z) o2.windows[z] = {lo - shift[z], hi - shift[z]};
  o2.det_power = second_det_power;
  IndependenceReport rep;
  for (const auto& f : integrands) {
    const double a = integrate_measure(first, f, o1);
    const double b = integrate_measure(
        second, [&](const Vec& x, std::size_t z, double t) { return f(x, z, t + shift[z]); }, o2);
    rep.via_first.push_back(a);
    rep.via_second.push_back(b);
    const double d = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
    rep.max_discrepancy = std::max(rep.max_discrepancy, d);
  }
  return rep;
}

std::size_t extra_section_crossings(const NullHypersurfacePatch& patch) {
  std::size_t bad = 0;
  for (std::size_t z = 0; z < patch.size(); ++z) {
    const GeneratorRay& r = patch.ray(z);
    const AdaptedFrame& f = r.frame();
    const Mat g = patch.model().metric(f.x);
    const Vec alpha = -(g * f.e.back());
    const Vec x0 = r.x(r.origin());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r.t(i) == 0.0) continue;
      const double c = alpha.dot(r.x(i) - x0);
      if (!(c * r.t(i) > 0.0)) {
        ++bad;
        break;
      }
    }
  }
  return bad;
}

void write_patch_csv(const NullHypersurfacePatch& patch, std::ostream& out, std::size_t stride) {
  const int n = patch.model().dimension();
  out << "node,t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  out << ",W_L,a_z,det_Jbar\n";
  out << std::setprecision(17);
  for (std::size_t z = 0; z < patch.size(); ++z) {
    const GeneratorRay& r = patch.ray(z);
    for (std::size_t i = 0; i < r.size(); i += std::max<std::size_t>(1, stride)) {
      out << z << ',' << r.t(i);
      const Vec x = r.x(i);
      for (int c = 0; c < n; ++c) out << ',' << x(c);
      out << ',' << r.W(i) << ',' << r.a(i) << ',' << r.det(i) << '\n';
    }
  }
}

}  // namespace nullot
