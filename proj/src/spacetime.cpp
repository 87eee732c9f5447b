#include "nullot/spacetime.hpp"

#include <cmath>
#include <numbers>

namespace nullot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSingularTol = 1e-14;

ChartDescription box_chart(std::vector<std::string> names, std::vector<double> lo, std::vector<double> hi,
                           double scale) {
  ChartDescription c;
  c.coordinate_names = std::move(names);
  c.lower = std::move(lo);
  c.upper = std::move(hi);
  c.scale = scale;
  return c;
}

// f(x + h e_k) sampled on the 4th-order central stencil.
template <typename F>
auto central4(F&& f, const Vec& x, int k, double h) {
  Vec p = x;
  p(k) = x(k) + 2 * h;
  auto f2 = f(p);
  p(k) = x(k) + h;
  auto f1 = f(p);
  p(k) = x(k) - h;
  auto fm1 = f(p);
  p(k) = x(k) - 2 * h;
  auto fm2 = f(p);
  return std::array<decltype(f2), 4>{f2, f1, fm1, fm2};
}

double stencil_first(double f2, double f1, double fm1, double fm2, double h) {
  return (-f2 + 8.0 * f1 - 8.0 * fm1 + fm2) / (12.0 * h);
}

Christoffel christoffel_from(const Mat& g, const MetricDerivative& dg) {
  const int n = static_cast<int>(g.rows());
  const Mat ginv = g.inverse();
  Christoffel lower(n);  // Γ_dbc
  for (int d = 0; d < n; ++d)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        const double v = 0.5 * (dg(d, b, c) + dg(d, c, b) - dg(b, c, d));
        lower(d, b, c) = v;
        lower(d, c, b) = v;
      }
  Christoffel gamma(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += ginv(a, d) * lower(d, b, c);
        gamma(a, b, c) = s;
        gamma(a, c, b) = s;
      }
  return gamma;
}

void check_metric(const Mat& g) {
  const double det = g.determinant();
  double norm = 0.0;
  for (int i = 0; i < g.rows(); ++i) norm = std::max(norm, g.row(i).cwiseAbs().sum());
  if (!std::isfinite(det) || std::abs(det) <= kSingularTol * std::pow(norm, static_cast<double>(g.rows())))
    throw Error(ErrorKind::SingularMetric, "metric determinant " + std::to_string(det));
}

}  // namespace

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Minkowski: return "minkowski";
    case MetricKind::SchwarzschildLemaitre: return "schwarzschild-lemaitre";
    case MetricKind::ProductSurfaceM2: return "product-surface-M2";
    case MetricKind::Warped: return "warped";
    case MetricKind::Perturbed: return "perturbed";
  }
  return "unknown";
}

MetricModel::MetricModel(MetricKind kind, ChartDescription chart) : kind_(kind), chart_(std::move(chart)) {}

bool MetricModel::in_chart(const Vec& x) const {
  if (x.size() != dimension()) return false;
  for (int i = 0; i < dimension(); ++i) {
    if (!std::isfinite(x(i))) return false;
    if (x(i) < chart_.lower[i] || x(i) > chart_.upper[i]) return false;
  }
  return true;
}

void MetricModel::require_in_chart(const Vec& x) const {
  if (!in_chart(x)) {
    std::string s = "point (";
    for (int i = 0; i < x.size(); ++i) s += (i ? ", " : "") + std::to_string(x(i));
    throw Error(ErrorKind::OutOfChart, s + ") outside chart of " + name());
  }
}

void MetricModel::metric_derivatives(const Vec& x, MetricDerivative& dg) const {
  const int n = dimension();
  const double h = fd_step();
  dg = MetricDerivative(n);
  for (int k = 0; k < n; ++k) {
    const auto s = central4([this](const Vec& p) { return metric(p); }, x, k, h);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dg(i, j, k) = stencil_first(s[0](i, j), s[1](i, j), s[2](i, j), s[3](i, j), h);
  }
}

void MetricModel::metric_second_derivatives(const Vec&, MetricSecondDerivative&) const {
  throw Error(ErrorKind::InvalidArgument, name() + " has no analytic second derivatives");
}

void MetricModel::metric_jet(const Vec& x, Mat& g, MetricDerivative& dg, MetricSecondDerivative* ddg) const {
  g = metric(x);
  metric_derivatives(x, dg);
  if (ddg) metric_second_derivatives(x, *ddg);
}

Vec MetricModel::time_orientation(const Vec&) const {
  Vec t = Vec::Zero(dimension());
  t(0) = 1.0;
  return t;
}

// --- Minkowski ---------------------------------------------------------------

namespace {
ChartDescription minkowski_chart(int n, double extent) {
  if (n < 3 || n > kMaxDim) throw Error(ErrorKind::InvalidArgument, "minkowski dimension must be in 3.." + std::to_string(kMaxDim));
  std::vector<std::string> names{"t"};
  for (int i = 1; i < n; ++i) names.push_back("x" + std::to_string(i));
  return box_chart(names, std::vector<double>(n, -extent), std::vector<double>(n, extent), 1.0);
}
}  // namespace

Minkowski::Minkowski(int n, double extent) : MetricModel(MetricKind::Minkowski, minkowski_chart(n, extent)) {}

Mat Minkowski::metric(const Vec&) const {
  Mat g = Mat::Identity(dimension(), dimension());
  g(0, 0) = -1.0;
  return g;
}

void Minkowski::metric_derivatives(const Vec&, MetricDerivative& dg) const { dg = MetricDerivative(dimension()); }

void Minkowski::metric_second_derivatives(const Vec&, MetricSecondDerivative& ddg) const {
  ddg = MetricSecondDerivative(dimension());
}

// --- Schwarzschild in Lemaitre coordinates -------------------------------------

SchwarzschildLemaitre::SchwarzschildLemaitre(double r_s, double r_min_fraction, double pole_margin)
    : JetMetric(MetricKind::SchwarzschildLemaitre,
                box_chart({"tau", "rho", "theta", "phi"}, {-1e4 * r_s, -1e4 * r_s, 0.0, -1e4},
                          {1e4 * r_s, 1e4 * r_s, kPi, 1e4}, r_s)),
      r_s_(r_s),
      r_min_(r_min_fraction * r_s),
      pole_margin_(pole_margin) {
  if (!(r_s > 0.0)) throw Error(ErrorKind::InvalidArgument, "schwarzschild-lemaitre requires r_S > 0");
}

double SchwarzschildLemaitre::areal_radius(const Vec& x) const {
  return std::pow(1.5 * (x(1) - x(0)), 2.0 / 3.0) * std::cbrt(r_s_);
}

double SchwarzschildLemaitre::rho_minus_tau(double r) const { return (2.0 / 3.0) * std::pow(r, 1.5) / std::sqrt(r_s_); }

bool SchwarzschildLemaitre::in_chart(const Vec& x) const {
  if (!MetricModel::in_chart(x)) return false;
  if (x(1) - x(0) <= rho_minus_tau(r_min_)) return false;
  return x(2) > pole_margin_ && x(2) < kPi - pole_margin_;
}

// --- Σ² × M² -------------------------------------------------------------------

ProductSurfaceM2::ProductSurfaceM2(Surface surface, double radius, double pole_margin)
    : JetMetric(MetricKind::ProductSurfaceM2,
                box_chart({"t", "x", "u", "v"}, {-1e6, -1e6, surface == Surface::Sphere ? 0.0 : -1e6, -1e6},
                          {1e6, 1e6, surface == Surface::Sphere ? kPi : 1e6, 1e6}, radius)),
      surface_(surface),
      radius_(radius),
      pole_margin_(pole_margin) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "product-surface-M2 requires R > 0");
}

bool ProductSurfaceM2::in_chart(const Vec& x) const {
  if (!MetricModel::in_chart(x)) return false;
  if (surface_ == Surface::Sphere) return x(2) > pole_margin_ && x(2) < kPi - pole_margin_;
  return true;
}

// --- FLRW ----------------------------------------------------------------------

Warped::Warped(double exponent, double t0, double t_min)
    : JetMetric(MetricKind::Warped,
                box_chart({"t", "x", "y", "z"}, {t_min, -1e6, -1e6, -1e6}, {1e6, 1e6, 1e6, 1e6}, std::min(t0, 1.0))),
      p_(exponent),
      t0_(t0) {
  if (!(t0 > 0.0) || !(t_min > 0.0)) throw Error(ErrorKind::InvalidArgument, "warped requires t0 > 0 and t_min > 0");
}

// --- perturbations ---------------------------------------------------------------

bool PerturbationField::admissible(const Vec& x, const Mat& g_base, double eps) const {
  return is_lorentzian(g_base + eps * value(x));
}

ConformalWell::ConformalWell(Vec center, double sign) : center_(std::move(center)), sign_(sign) {}

Mat ConformalWell::value(const Vec& x) const {
  const int n = static_cast<int>(x.size());
  Mat eta = Mat::Identity(n, n);
  eta(0, 0) = -1.0;
  return -sign_ * (x - center_).squaredNorm() * eta;
}

void ConformalWell::derivatives(const Vec& x, MetricDerivative& dh) const {
  const int n = static_cast<int>(x.size());
  dh = MetricDerivative(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) dh(i, i, k) = -2.0 * sign_ * (x(k) - center_(k)) * (i == 0 ? -1.0 : 1.0);
}

void ConformalWell::second_derivatives(const Vec& x, MetricSecondDerivative& ddh) const {
  const int n = static_cast<int>(x.size());
  ddh = MetricSecondDerivative(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) ddh(i, i, k, k) = -2.0 * sign_ * (i == 0 ? -1.0 : 1.0);
}

bool ConformalWell::admissible(const Vec& x, const Mat& g_base, double eps) const {
  return PerturbationField::admissible(x, g_base, eps) && 1.0 - eps * sign_ * (x - center_).squaredNorm() > 0.05;
}

double ConformalWell::null_ricci(const Vec& x, const Vec& center, double beta, const Vec& k) {
  const Vec d = x - center;
  const double D = 1.0 - beta * d.squaredNorm();
  const double kd = k.dot(d);
  return 2.0 * beta * k.squaredNorm() / D + 6.0 * beta * beta * kd * kd / (D * D);
}

Perturbed::Perturbed(std::shared_ptr<const MetricModel> base, std::shared_ptr<const PerturbationField> h, double eps)
    : MetricModel(MetricKind::Perturbed, base->chart()), base_(std::move(base)), h_(std::move(h)), eps_(eps) {}

bool Perturbed::in_chart(const Vec& x) const {
  if (!base_->in_chart(x)) return false;
  return eps_ == 0.0 || h_->admissible(x, base_->metric(x), eps_);
}

Mat Perturbed::metric(const Vec& x) const { return base_->metric(x) + eps_ * h_->value(x); }

void Perturbed::metric_derivatives(const Vec& x, MetricDerivative& dg) const {
  base_->metric_derivatives(x, dg);
  if (eps_ == 0.0) return;
  MetricDerivative dh;
  h_->derivatives(x, dh);
  const int n = dimension();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) dg(i, j, k) += eps_ * dh(i, j, k);
}

void Perturbed::metric_second_derivatives(const Vec& x, MetricSecondDerivative& ddg) const {
  base_->metric_second_derivatives(x, ddg);
  if (eps_ == 0.0) return;
  MetricSecondDerivative ddh;
  h_->second_derivatives(x, ddh);
  const int n = dimension();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) ddg(i, j, k, l) += eps_ * ddh(i, j, k, l);
}

void Perturbed::metric_jet(const Vec& x, Mat& g, MetricDerivative& dg, MetricSecondDerivative* ddg) const {
  base_->metric_jet(x, g, dg, ddg);
  if (eps_ == 0.0) return;
  const int n = dimension();
  g += eps_ * h_->value(x);
  MetricDerivative dh;
  h_->derivatives(x, dh);
  MetricSecondDerivative ddh(n);
  if (ddg) h_->second_derivatives(x, ddh);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        dg(i, j, k) += eps_ * dh(i, j, k);
        if (ddg)
          for (int l = 0; l < n; ++l) (*ddg)(i, j, k, l) += eps_ * ddh(i, j, k, l);
      }
}

// --- evaluators ------------------------------------------------------------------

Christoffel christoffel(const MetricModel& model, const Vec& x) {
  model.require_in_chart(x);
  const Mat g = model.metric(x);
  check_metric(g);
  MetricDerivative dg;
  model.metric_derivatives(x, dg);
  return christoffel_from(g, dg);
}

Christoffel christoffel_fd(const MetricModel& model, const Vec& x) {
  model.require_in_chart(x);
  const Mat g = model.metric(x);
  check_metric(g);
  MetricDerivative dg;
  model.MetricModel::metric_derivatives(x, dg);
  return christoffel_from(g, dg);
}

namespace {

ChristoffelDerivative christoffel_derivative_exact(const Mat& g, const MetricDerivative& dg,
                                                   const MetricSecondDerivative& ddg, const Christoffel& gamma) {
  const int n = static_cast<int>(g.rows());
  const Mat ginv = g.inverse();
  ChristoffelDerivative out(n);
  // ∂_k Γ^a_bc = g^{ad} ∂_k Γ_dbc − g^{ae} ∂_k g_ef Γ^f_bc
  for (int k = 0; k < n; ++k)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        Vec dlow(n);
        Vec corr(n);
        for (int d = 0; d < n; ++d) {
          dlow(d) = 0.5 * (ddg(d, b, c, k) + ddg(d, c, b, k) - ddg(b, c, d, k));
          double s = 0.0;
          for (int f = 0; f < n; ++f) s += dg(d, f, k) * gamma(f, b, c);
          corr(d) = s;
        }
        const Vec v = ginv * (dlow - corr);
        for (int a = 0; a < n; ++a) {
          out(a, b, c, k) = v(a);
          out(a, c, b, k) = v(a);
        }
      }
  return out;
}

ChristoffelDerivative christoffel_derivative_fd(const MetricModel& model, const Vec& x) {
  const int n = model.dimension();
  const double h = model.fd_step();
  ChristoffelDerivative out(n);
  for (int k = 0; k < n; ++k) {
    const auto s = central4(
        [&model](const Vec& p) {
          MetricDerivative dg;
          model.metric_derivatives(p, dg);
          return christoffel_from(model.metric(p), dg);
        },
        x, k, h);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          out(a, b, c, k) = stencil_first(s[0](a, b, c), s[1](a, b, c), s[2](a, b, c), s[3](a, b, c), h);
  }
  return out;
}

}  // namespace

ChristoffelDerivative christoffel_derivative(const MetricModel& model, const Vec& x) {
  model.require_in_chart(x);
  const Mat g = model.metric(x);
  check_metric(g);
  if (model.has_second_derivatives()) {
    Mat gj;
    MetricDerivative dg;
    MetricSecondDerivative ddg;
    model.metric_jet(x, gj, dg, &ddg);
    return christoffel_derivative_exact(gj, dg, ddg, christoffel_from(gj, dg));
  }
  return christoffel_derivative_fd(model, x);
}

LocalGeometry local_geometry(const MetricModel& model, const Vec& x) {
  if (!model.in_chart(x)) throw Error(ErrorKind::LeftChart, "left the chart of " + model.name());
  LocalGeometry out;
  if (model.kind() == MetricKind::Minkowski) {
    out.g = model.metric(x);
    out.gamma = Christoffel(model.dimension());
    out.dgamma = ChristoffelDerivative(model.dimension());
    return out;
  }
  MetricDerivative dg;
  if (model.has_second_derivatives()) {
    MetricSecondDerivative ddg;
    model.metric_jet(x, out.g, dg, &ddg);
    check_metric(out.g);
    out.gamma = christoffel_from(out.g, dg);
    out.dgamma = christoffel_derivative_exact(out.g, dg, ddg, out.gamma);
  } else {
    model.metric_jet(x, out.g, dg, nullptr);
    check_metric(out.g);
    out.gamma = christoffel_from(out.g, dg);
    out.dgamma = christoffel_derivative_fd(model, x);
  }
  return out;
}

Riemann riemann(const MetricModel& model, const Vec& x) {
  const int n = model.dimension();
  const Christoffel G = christoffel(model, x);
  const ChristoffelDerivative dG = christoffel_derivative(model, x);
  Riemann R(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = dG(a, d, b, c) - dG(a, c, b, d);
          for (int e = 0; e < n; ++e) s += G(a, c, e) * G(e, d, b) - G(a, d, e) * G(e, c, b);
          R(a, b, c, d) = s;
        }
  return R;
}

Mat ricci_tensor(const MetricModel& model, const Vec& x) {
  const int n = model.dimension();
  Mat ric = Mat::Zero(n, n);
  if (model.kind() == MetricKind::Minkowski) {
    model.require_in_chart(x);
    return ric;
  }
  const Riemann R = riemann(model, x);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += R(a, b, a, d);
      ric(b, d) = s;
    }
  return ric;
}

double ricci(const MetricModel& model, const Vec& x, const Vec& v, const Vec& w) {
  const Mat ric = ricci_tensor(model, x);
  // symmetrize so the bilinear form is exactly symmetric in floating point
  return 0.5 * (v.dot(ric * w) + w.dot(ric * v));
}

bool is_lorentzian(const Mat& g, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  int neg = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) <= tol * scale) return false;
    if (ev(i) < 0) ++neg;
  }
  return neg == 1;
}

// --- weights -----------------------------------------------------------------

WeightField::WeightField() : fn_([](const Vec&, double) { return 0.0; }) {}

WeightField::WeightField(Fn fn, Smoothness smoothness, std::string description, bool constant)
    : fn_(std::move(fn)), smoothness_(smoothness), description_(std::move(description)), zero_(false), constant_(constant) {}

WeightField WeightField::constant(double c) {
  WeightField w([c](const Vec&, double) { return c; }, Smoothness::C2, std::to_string(c), true);
  w.zero_ = (c == 0.0);
  return w;
}

WeightField::AlongDerivatives WeightField::along(const MetricModel& model, const Vec& x, const Vec& v, double affine,
                                                 double affine_rate) const {
  AlongDerivatives out;
  if (constant_) return out;
  const int n = model.dimension();
  double h = model.fd_step();
  if (affine_rate != 0.0 && affine != 0.0) h = std::min(h, 0.01 * std::abs(affine / affine_rate));
  auto line = [&](double t) { return fn_(x + t * v, affine + affine_rate * t); };
  const double f2 = line(2 * h), f1 = line(h), f0 = line(0.0), fm1 = line(-h), fm2 = line(-2 * h);
  out.first = stencil_first(f2, f1, fm1, fm2, h);
  const double straight = (-f2 + 16.0 * f1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
  // geodesic acceleration correction: γ'' = −Γ(v,v)
  const Christoffel G = christoffel(model, x);
  double corr = 0.0;
  for (int a = 0; a < n; ++a) {
    double gvv = 0.0;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) gvv += G(a, b, c) * v(b) * v(c);
    if (gvv == 0.0) continue;
    Vec e = Vec::Zero(n);
    e(a) = 1.0;
    auto axis = [&](double t) { return fn_(x + t * e, affine); };
    const double da = stencil_first(axis(2 * h), axis(h), axis(-h), axis(-2 * h), h);
    corr += gvv * da;
  }
  out.second = straight - corr;
  return out;
}

double WeightField::rate(const MetricModel& model, const Vec& x, const Vec& v, double affine,
                         double affine_rate) const {
  if (constant_) return 0.0;
  double h = model.fd_step();
  if (affine_rate != 0.0 && affine != 0.0) h = std::min(h, 0.01 * std::abs(affine / affine_rate));
  auto line = [&](double t) { return fn_(x + t * v, affine + affine_rate * t); };
  return stencil_first(line(2 * h), line(h), line(-h), line(-2 * h), h);
}

double bakry_emery_ricci(const MetricModel& model, const WeightField& weight, const BakryEmeryQuery& q) {
  const double n = model.dimension();
  if (!(q.N > 2.0)) throw Error(ErrorKind::InvalidN, "N must exceed 2");
  if (q.N < n - 1e-12) throw Error(ErrorKind::InvalidN, "N below the dimension");
  const double ric = ricci(model, q.x, q.v, q.v);
  if (std::abs(q.N - n) <= 1e-12) {
    if (weight.is_constant()) return ric;
    const auto d = weight.along(model, q.x, q.v, q.affine, q.affine_rate);
    bool flat = std::abs(d.first) <= 1e-12 && std::abs(d.second) <= 1e-9;
    for (int k = 0; flat && k < model.dimension(); ++k) {
      Vec e = Vec::Zero(model.dimension());
      e(k) = 1.0;
      const auto dk = weight.along(model, q.x, e, q.affine, 0.0);
      flat = std::abs(dk.first) <= 1e-12;
    }
    if (!flat) throw Error(ErrorKind::InvalidN, "N = n requires a constant weight");
    return ric;
  }
  if (weight.smoothness() == Smoothness::C0) throw Error(ErrorKind::WeightNotSmooth, weight.description());
  if (weight.is_constant()) return ric;
  const auto d = weight.along(model, q.x, q.v, q.affine, q.affine_rate);
  return ric - d.second - d.first * d.first / (q.N - n);
}

// --- catalog -------------------------------------------------------------------

namespace {

double param(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double required(const ParamMap& p, const std::string& key, const std::string& metric) {
  auto it = p.find(key);
  if (it == p.end()) throw Error(ErrorKind::InvalidArgument, metric + " requires parameter " + key);
  return it->second;
}

}  // namespace

std::vector<std::string> catalog_names() {
  return {"minkowski", "schwarzschild-lemaitre", "product-surface-M2", "warped", "perturbed"};
}

std::shared_ptr<const MetricModel> make_metric(const std::string& name, const ParamMap& params) {
  if (name == "minkowski") {
    const double n = param(params, "n", 4);
    if (n != std::floor(n)) throw Error(ErrorKind::InvalidArgument, "minkowski n must be an integer");
    return std::make_shared<Minkowski>(static_cast<int>(n));
  }
  if (name == "schwarzschild-lemaitre") {
    return std::make_shared<SchwarzschildLemaitre>(required(params, "r_S", name), param(params, "r_min_fraction", 0.05));
  }
  if (name == "product-surface-M2") {
    const bool sphere = param(params, "sphere", 1.0) != 0.0;
    return std::make_shared<ProductSurfaceM2>(sphere ? ProductSurfaceM2::Surface::Sphere : ProductSurfaceM2::Surface::Flat,
                                              param(params, "R", 1.0));
  }
  if (name == "warped") {
    return std::make_shared<Warped>(param(params, "p", 0.5), param(params, "t0", 1.0), param(params, "t_min", 0.05));
  }
  if (name == "perturbed") {
    // (1 − beta0 |x−c|²) η + eps · sign · (−|x−c|²) η
    const int n = static_cast<int>(param(params, "n", 4));
    Vec c = Vec::Zero(n);
    for (int i = 0; i < n; ++i) c(i) = param(params, "c" + std::to_string(i), 0.0);
    std::shared_ptr<const MetricModel> base = std::make_shared<Minkowski>(n);
    const double beta0 = param(params, "beta0", 0.0);
    if (beta0 != 0.0) base = std::make_shared<Perturbed>(base, std::make_shared<ConformalWell>(c, 1.0), beta0);
    return std::make_shared<Perturbed>(base, std::make_shared<ConformalWell>(c, param(params, "sign", 1.0)),
                                       param(params, "eps", 0.0));
  }
  throw Error(ErrorKind::InvalidArgument, "unknown metric " + name);
}

}  // namespace nullot
