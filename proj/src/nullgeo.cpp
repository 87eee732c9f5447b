#include "nullot/nullgeo.hpp"

#include <algorithm>
#include <cmath>

namespace nullot {

namespace {

// State layout: x[n], v[n], e[ne][n], J[nj][n], P[nj][n]. P is the chart
// derivative of J, so DJ/dt = P + Γ(v, J).
struct Bundle {
  int n;
  int ne;
  int nj;
  int size() const { return 2 * n + ne * n + 2 * nj * n; }
  int e(int i) const { return 2 * n + i * n; }
  int J(int i) const { return 2 * n + ne * n + i * n; }
  int P(int i) const { return 2 * n + ne * n + nj * n + i * n; }
};

using State = std::vector<double>;

Vec slice(const State& y, int off, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = y[off + i];
  return v;
}

void put(State& y, int off, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) y[off + i] = v(i);
}

// Gv(a,c) = Γ^a_bc v^b
Mat contract_gamma(const Christoffel& G, const Vec& v) {
  const int n = static_cast<int>(v.size());
  Mat out = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (v(b) == 0.0) continue;
      for (int c = 0; c < n; ++c) out(a, c) += G(a, b, c) * v(b);
    }
  return out;
}

LocalGeometry geometry_at(const MetricModel& model, const State& y, int n) {
  return local_geometry(model, slice(y, 0, n));
}

void rhs(const Bundle& b, const State& y, const LocalGeometry& geo, State& dy) {
  const int n = b.n;
  dy.assign(y.size(), 0.0);
  const Vec v = slice(y, n, n);
  const Mat Gv = contract_gamma(geo.gamma, v);
  // M(a,k) = ∂_k Γ^a_bc v^b v^c
  Mat M = Mat::Zero(n, n);
  if (b.nj > 0) {
    for (int a = 0; a < n; ++a)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int bb = 0; bb < n; ++bb)
          for (int c = 0; c < n; ++c) s += geo.dgamma(a, bb, c, k) * v(bb) * v(c);
        M(a, k) = s;
      }
  }
  for (int i = 0; i < n; ++i) dy[i] = v(i);
  put(dy, n, -Gv * v);
  for (int i = 0; i < b.ne; ++i) put(dy, b.e(i), -Gv * slice(y, b.e(i), n));
  for (int i = 0; i < b.nj; ++i) {
    const Vec J = slice(y, b.J(i), n);
    const Vec P = slice(y, b.P(i), n);
    put(dy, b.J(i), P);
    put(dy, b.P(i), -M * J - 2.0 * Gv * P);
  }
}

// One classical RK4 step; geo0 is the geometry at the current state.
State rk4_step(const MetricModel& model, const Bundle& b, const State& y, const LocalGeometry& geo0, double h) {
  const int m = b.size();
  State k1, k2, k3, k4, tmp(m);
  rhs(b, y, geo0, k1);
  for (int i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  rhs(b, tmp, geometry_at(model, tmp, b.n), k2);
  for (int i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  rhs(b, tmp, geometry_at(model, tmp, b.n), k3);
  for (int i = 0; i < m; ++i) tmp[i] = y[i] + h * k3[i];
  rhs(b, tmp, geometry_at(model, tmp, b.n), k4);
  State out(m);
  for (int i = 0; i < m; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

State advance(const MetricModel& model, const Bundle& b, State y, double h, int steps) {
  const double dt = h / steps;
  for (int s = 0; s < steps; ++s) y = rk4_step(model, b, y, geometry_at(model, y, b.n), dt);
  return y;
}

double gdot(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

Vec future_orient_check(const MetricModel& model, const Vec& x, const Vec& v, double null_tol) {
  const Mat g = model.metric(x);
  const double defect = gdot(g, v, v);
  if (std::abs(defect) > null_tol * std::max(1.0, v.squaredNorm()))
    throw Error(ErrorKind::InvalidArgument, "initial velocity is not null (g(v,v) = " + format_number(defect) + ")");
  if (gdot(g, v, model.time_orientation(x)) >= 0.0)
    throw Error(ErrorKind::InvalidArgument, "initial velocity is not future directed");
  return v;
}

}  // namespace

// --- geodesics ---------------------------------------------------------------

std::vector<GeodesicSample> integrate_null_geodesic(const MetricModel& model, const Vec& x0, const Vec& v0,
                                                    std::span<const double> grid, const GeodesicOptions& opt) {
  if (grid.empty() || grid[0] != 0.0) throw Error(ErrorKind::InvalidArgument, "geodesic grid must start at 0");
  const int n = model.dimension();
  model.require_in_chart(x0);
  future_orient_check(model, x0, v0, opt.null_tol);
  const Bundle b{n, 0, 0};
  State y(b.size());
  put(y, 0, x0);
  put(y, n, v0);
  std::vector<GeodesicSample> out;
  out.push_back({0.0, x0, v0});
  long steps_done = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double h = grid[i] - grid[i - 1];
    if ((grid[i] - grid[0]) * (grid[1] - grid[0]) <= 0.0 || (i > 1 && h * (grid[1] - grid[0]) <= 0.0))
      throw Error(ErrorKind::InvalidArgument, "geodesic grid must be monotone");
    const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(h) / opt.max_step - 1e-9)));
    for (int s = 0; s < sub; ++s) {
      y = rk4_step(model, b, y, geometry_at(model, y, n), h / sub);
      if (++steps_done % opt.projection_interval == 0) {
        // rescale-free projection onto the cone along the time orientation
        const Vec x = slice(y, 0, n);
        Vec v = slice(y, n, n);
        const Mat g = model.metric(x);
        const Vec T = model.time_orientation(x);
        const double A = gdot(g, T, T), B = 2.0 * gdot(g, v, T), C = gdot(g, v, v);
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
          const double c1 = (-B + std::sqrt(disc)) / (2.0 * A), c2 = (-B - std::sqrt(disc)) / (2.0 * A);
          v += (std::abs(c1) < std::abs(c2) ? c1 : c2) * T;
          put(y, n, v);
        }
      }
    }
    const Vec x = slice(y, 0, n);
    const Vec v = slice(y, n, n);
    if (!model.in_chart(x)) throw Error(ErrorKind::LeftChart, "geodesic left the chart at t = " + std::to_string(grid[i]));
    const double defect = gdot(model.metric(x), v, v);
    if (std::abs(defect) > opt.null_tol * std::max(1.0, v.squaredNorm()))
      throw Error(ErrorKind::NullDefect, "null defect " + format_number(defect) + " at t = " + std::to_string(grid[i]));
    out.push_back({grid[i], x, v});
  }
  return out;
}

// --- frames ----------------------------------------------------------------------

AdaptedFrame build_adapted_frame(const MetricModel& model, const Vec& x, const std::vector<Vec>& tangents, const Vec& L) {
  const int n = model.dimension();
  const int K = n - 2;
  if (static_cast<int>(tangents.size()) != K)
    throw Error(ErrorKind::InvalidArgument, "need n-2 section tangents, got " + std::to_string(tangents.size()));
  model.require_in_chart(x);
  const Mat g = model.metric(x);
  const double lscale = std::sqrt(L.squaredNorm());
  if (std::abs(gdot(g, L, L)) > 1e-8 * lscale * lscale) throw Error(ErrorKind::InvalidArgument, "L is not null");

  Mat gram(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) gram(i, k) = gdot(g, tangents[i], tangents[k]);
  Eigen::LLT<Mat> llt(gram);
  const double gscale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::DegenerateSection, "tangent Gram block not positive definite");
  const Mat C = llt.matrixL();
  for (int i = 0; i < K; ++i)
    if (C(i, i) * C(i, i) <= 1e-14 * gscale) throw Error(ErrorKind::DegenerateSection, "tangent Gram block singular");
  for (int i = 0; i < K; ++i)
    if (std::abs(gdot(g, tangents[i], L)) > 1e-8 * lscale * std::sqrt(gram(i, i)))
      throw Error(ErrorKind::InvalidArgument, "L is not orthogonal to the section");

  AdaptedFrame f;
  f.x = x;
  f.gs = C.triangularView<Eigen::Lower>().solve(Mat::Identity(K, K));
  f.area_element = C.diagonal().prod();
  f.e.assign(n, Vec::Zero(n));
  for (int i = 0; i < K; ++i)
    for (int k = 0; k <= i; ++k) f.e[i] += f.gs(i, k) * tangents[k];

  // transverse null vector: L̄ = a w + b L with w ⊥ TS
  const Vec gL = g * L;
  int best = 0;
  for (int j = 1; j < n; ++j)
    if (std::abs(gL(j)) > std::abs(gL(best))) best = j;
  if (std::abs(gL(best)) <= 1e-12 * std::max(1.0, lscale)) throw Error(ErrorKind::NoTransverse, "g(w, L) vanishes");
  Vec w = Vec::Zero(n);
  w(best) = 1.0;
  for (int i = 0; i < K; ++i) w -= gdot(g, w, f.e[i]) * f.e[i];
  const double wl = gdot(g, w, L);
  if (std::abs(wl) <= 1e-12 * std::max(1.0, lscale)) throw Error(ErrorKind::NoTransverse, "g(w, L) vanishes");
  const double a = -1.0 / wl;
  const double bcoef = -a * gdot(g, w, w) / (2.0 * wl);
  f.e[K] = L;
  Vec lbar = a * w + bcoef * L;
  // one refinement pass against cancellation in the projection
  for (int i = 0; i < K; ++i) lbar -= gdot(g, lbar, f.e[i]) * f.e[i];
  lbar += (gdot(g, lbar, lbar) / 2.0) * L;
  lbar /= -gdot(g, lbar, L);
  f.e[K + 1] = lbar;

  f.eta.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f.eta(i, j) = gdot(g, f.e[i], f.e[j]);
  return f;
}

double rigged_metric_check(const MetricModel& model, const AdaptedFrame& frame) {
  const int n = static_cast<int>(frame.e.size());
  const int K = n - 2;
  const Mat g = model.metric(frame.x);
  const Vec& L = frame.e[K];
  const Vec& Lbar = frame.e[K + 1];
  auto alpha = [&](const Vec& X) { return -gdot(g, Lbar, X); };
  auto gt = [&](const Vec& X, const Vec& Y) { return gdot(g, X, Y) + alpha(X) * alpha(Y); };
  double worst = std::abs(gt(L, L) - 1.0);
  for (int i = 0; i < K; ++i) {
    worst = std::max(worst, std::abs(gt(frame.e[i], L)));
    for (int j = 0; j < K; ++j) worst = std::max(worst, std::abs(gt(frame.e[i], frame.e[j]) - gdot(g, frame.e[i], frame.e[j])));
  }
  return worst;
}

std::vector<Vec> orthonormal_tetrad(const MetricModel& model, const Vec& p) {
  const int n = model.dimension();
  const Mat g = model.metric(p);
  std::vector<Vec> e;
  Vec T = model.time_orientation(p);
  const double tt = gdot(g, T, T);
  if (!(tt < 0.0)) throw Error(ErrorKind::InvalidArgument, "time orientation is not timelike");
  e.push_back(T / std::sqrt(-tt));
  for (int j = 0; j < n && static_cast<int>(e.size()) < n; ++j) {
    Vec w = Vec::Zero(n);
    w(j) = 1.0;
    w += gdot(g, w, e[0]) * e[0];
    for (std::size_t i = 1; i < e.size(); ++i) w -= gdot(g, w, e[i]) * e[i];
    const double ww = gdot(g, w, w);
    if (ww <= 1e-10) continue;
    e.push_back(w / std::sqrt(ww));
  }
  if (static_cast<int>(e.size()) != n) throw Error(ErrorKind::SingularMetric, "could not build a tetrad");
  return e;
}

// --- generator rays -----------------------------------------------------------------

GeneratorRay::GeneratorRay(const MetricModel* model, int node, const RayInit& init, const AdaptedFrame& frame, Mat b0)
    : model_(model),
      n_(model->dimension()),
      k_(model->dimension() - 2),
      node_(node),
      offset_(init.affine_offset),
      init_(init),
      frame_(frame),
      b0_(std::move(b0)) {}

void GeneratorRay::reserve(std::size_t m) {
  t_.reserve(m);
  x_.reserve(m * n_);
  v_.reserve(m * n_);
  jb_.reserve(m * k_ * k_);
  djb_.reserve(m * k_ * k_);
  jc_.reserve(m * k_ * n_);
  pc_.reserve(m * k_ * n_);
  det_.reserve(m);
  W_.reserve(m);
  dW_.reserve(m);
  a_.reserve(m);
  da_.reserve(m);
}

void GeneratorRay::push_back(double t, const Vec& x, const Vec& v, const Mat& J, const Mat& dJ,
                             const std::vector<Vec>& Jc, const std::vector<Vec>& Pc, double a_phi, double da_phi) {
  t_.push_back(t);
  for (int i = 0; i < n_; ++i) x_.push_back(x(i));
  for (int i = 0; i < n_; ++i) v_.push_back(v(i));
  const Mat jb = J.topLeftCorner(k_, k_);
  const Mat djb = dJ.topLeftCorner(k_, k_);
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j) {
      jb_.push_back(jb(i, j));
      djb_.push_back(djb(i, j));
    }
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < n_; ++j) {
      jc_.push_back(Jc[i](j));
      pc_.push_back(Pc[i](j));
    }
  const double d = jb.determinant();
  det_.push_back(d);
  W_.push_back(std::log(d));
  const double dw = jb.partialPivLu().solve(djb).trace();
  dW_.push_back(dw);
  a_.push_back(a_phi + std::log(d));
  da_.push_back(da_phi + dw);
}

void GeneratorRay::reverse_prefix(std::size_t count) {
  auto rev = [count](std::vector<double>& v, std::size_t stride) {
    for (std::size_t i = 0, j = count - 1; i < j; ++i, --j)
      std::swap_ranges(v.begin() + i * stride, v.begin() + (i + 1) * stride, v.begin() + j * stride);
  };
  rev(t_, 1);
  rev(x_, n_);
  rev(v_, n_);
  rev(jb_, k_ * k_);
  rev(djb_, k_ * k_);
  rev(jc_, k_ * n_);
  rev(pc_, k_ * n_);
  rev(det_, 1);
  rev(W_, 1);
  rev(dW_, 1);
  rev(a_, 1);
  rev(da_, 1);
}

void GeneratorRay::copy_sample(const GeneratorRay& o, std::size_t i) {
  auto app = [i](std::vector<double>& dst, const std::vector<double>& src, std::size_t stride) {
    dst.insert(dst.end(), src.begin() + i * stride, src.begin() + (i + 1) * stride);
  };
  app(t_, o.t_, 1);
  app(x_, o.x_, n_);
  app(v_, o.v_, n_);
  app(jb_, o.jb_, k_ * k_);
  app(djb_, o.djb_, k_ * k_);
  app(jc_, o.jc_, k_ * n_);
  app(pc_, o.pc_, k_ * n_);
  app(det_, o.det_, 1);
  app(W_, o.W_, 1);
  app(dW_, o.dW_, 1);
  app(a_, o.a_, 1);
  app(da_, o.da_, 1);
}

Vec GeneratorRay::x(std::size_t i) const { return to_vec(std::span(x_).subspan(i * n_, n_)); }
Vec GeneratorRay::v(std::size_t i) const { return to_vec(std::span(v_).subspan(i * n_, n_)); }

Mat GeneratorRay::jbar(std::size_t i) const {
  Mat m(k_, k_);
  for (int r = 0; r < k_; ++r)
    for (int c = 0; c < k_; ++c) m(r, c) = jb_[i * k_ * k_ + r * k_ + c];
  return m;
}

Mat GeneratorRay::djbar(std::size_t i) const {
  Mat m(k_, k_);
  for (int r = 0; r < k_; ++r)
    for (int c = 0; c < k_; ++c) m(r, c) = djb_[i * k_ * k_ + r * k_ + c];
  return m;
}

std::size_t GeneratorRay::locate(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  if (t_.empty() || t < t_.front() - tol || t > t_.back() + tol)
    throw Error(ErrorKind::OutOfWindow, "parameter " + std::to_string(t) + " outside ray window");
  if (t_.size() == 1) return 0;
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - t_.begin()) - 1));
  return std::min(i, t_.size() - 2);
}

namespace {
struct HermiteBasis {
  double h00, h10, h01, h11, dt;
};
HermiteBasis hermite(double t0, double t1, double t) {
  const double dt = t1 - t0;
  const double u = (t - t0) / dt;
  const double u2 = u * u, u3 = u2 * u;
  return {2 * u3 - 3 * u2 + 1, u3 - 2 * u2 + u, -2 * u3 + 3 * u2, u3 - u2, dt};
}
}  // namespace

Vec GeneratorRay::position(double t) const {
  const std::size_t i = locate(t);
  if (t_.size() == 1) return x(0);
  const auto h = hermite(t_[i], t_[i + 1], t);
  return h.h00 * x(i) + h.h10 * h.dt * v(i) + h.h01 * x(i + 1) + h.h11 * h.dt * v(i + 1);
}

Mat GeneratorRay::jbar_at(double t) const {
  const std::size_t i = locate(t);
  if (t_.size() == 1) return jbar(0);
  const auto h = hermite(t_[i], t_[i + 1], t);
  return h.h00 * jbar(i) + h.h10 * h.dt * djbar(i) + h.h01 * jbar(i + 1) + h.h11 * h.dt * djbar(i + 1);
}

double GeneratorRay::det_at(double t) const { return jbar_at(t).determinant(); }

double GeneratorRay::a_at(double t) const {
  const std::size_t i = locate(t);
  if (t_.size() == 1) return a_[0];
  const auto h = hermite(t_[i], t_[i + 1], t);
  return h.h00 * a_[i] + h.h10 * h.dt * da_[i] + h.h01 * a_[i + 1] + h.h11 * h.dt * da_[i + 1];
}

double GeneratorRay::a_integral(std::size_t i, double s) const {
  const double dt = t_[i + 1] - t_[i];
  const double u = s / dt;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
  const double H00 = u4 / 2 - u3 + u, H10 = u4 / 4 - 2 * u3 / 3 + u2 / 2, H01 = -u4 / 2 + u3, H11 = u4 / 4 - u3 / 3;
  return dt * (H00 * a_[i] + H10 * dt * da_[i] + H01 * a_[i + 1] + H11 * dt * da_[i + 1]);
}

JacobiPoint GeneratorRay::exact_state(double t) const {
  std::size_t i = locate(t);
  if (i + 1 < t_.size() && std::abs(t_[i + 1] - t) < std::abs(t - t_[i])) ++i;
  const Bundle b{n_, 0, k_};
  State y(b.size());
  for (int c = 0; c < n_; ++c) {
    y[c] = x_[i * n_ + c];
    y[n_ + c] = v_[i * n_ + c];
  }
  for (int r = 0; r < k_; ++r)
    for (int c = 0; c < n_; ++c) {
      y[b.J(r) + c] = jc_[i * k_ * n_ + r * n_ + c];
      y[b.P(r) + c] = pc_[i * k_ * n_ + r * n_ + c];
    }
  const double h = t - t_[i];
  if (h != 0.0) y = advance(*model_, b, y, h, 8);
  JacobiPoint p;
  p.t = t;
  p.x = slice(y, 0, n_);
  p.v = slice(y, n_, n_);
  const Mat Gv = contract_gamma(local_geometry(*model_, p.x).gamma, p.v);
  for (int r = 0; r < k_; ++r) {
    p.J.push_back(slice(y, b.J(r), n_));
    p.DJ.push_back(slice(y, b.P(r), n_) + Gv * p.J.back());
  }
  return p;
}

RayInit GeneratorRay::rebased(double t) const {
  const JacobiPoint p = exact_state(t);
  return RayInit{p.x, p.v, p.J, p.DJ, offset_ + init_.affine_rate * t, init_.affine_rate};
}

void GeneratorRay::difference_weight_rates() {
  const std::size_t m = t_.size();
  if (m < 2) return;
  std::vector<double> phi(m);
  for (std::size_t i = 0; i < m; ++i) phi[i] = a_[i] - W_[i];
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 == m ? i : i + 1;
    da_[i] = (phi[hi] - phi[lo]) / (t_[hi] - t_[lo]) + dW_[i];
  }
}

// --- propagation ------------------------------------------------------------------

namespace {

struct SampleData {
  Mat J, dJ;
  std::vector<Vec> Jc, Pc;
  double det = 0.0;
};

// Frame components of every Jacobi row at the current state.
SampleData frame_components(const Bundle& b, const State& y, const LocalGeometry* geo) {
  const int n = b.n, K = n - 2;
  Mat E(n, n);
  for (int i = 0; i < K; ++i) E.col(i) = slice(y, b.e(i), n);
  E.col(K) = slice(y, n, n);
  E.col(K + 1) = slice(y, b.e(K), n);
  const auto lu = E.partialPivLu();
  SampleData s;
  s.J.resize(n, n);
  s.dJ.resize(n, n);
  Mat Gv;
  if (geo) Gv = contract_gamma(geo->gamma, slice(y, n, n));
  for (int r = 0; r < n; ++r) {
    const Vec J = slice(y, b.J(r), n);
    s.J.row(r) = lu.solve(J).transpose();
    if (geo) {
      const Vec P = slice(y, b.P(r), n);
      s.dJ.row(r) = lu.solve(P + Gv * J).transpose();
      if (r < K) {
        s.Jc.push_back(J);
        s.Pc.push_back(P);
      }
    }
  }
  s.det = s.J.topLeftCorner(K, K).determinant();
  return s;
}

}  // namespace

GeneratorRay propagate_jacobi(const MetricModel& model, const RayInit& init, double t_min, double t_max,
                              const PropagationOptions& opt, const WeightField& weight, int node) {
  if (t_min > 0.0 || t_max < 0.0) throw Error(ErrorKind::InvalidArgument, "window must contain 0");
  const int n = model.dimension();
  const int K = n - 2;
  if (static_cast<int>(init.dL.size()) != K) throw Error(ErrorKind::InvalidArgument, "need n-2 derivatives of L");
  future_orient_check(model, init.x, init.L, 1e-8);
  const AdaptedFrame frame = build_adapted_frame(model, init.x, init.tangents, init.L);

  const LocalGeometry geo0 = local_geometry(model, init.x);
  const Mat GL = contract_gamma(geo0.gamma, init.L);
  const Bundle b{n, K + 1, n};
  State y0(b.size());
  put(y0, 0, init.x);
  put(y0, n, init.L);
  for (int i = 0; i < K; ++i) put(y0, b.e(i), frame.e[i]);
  put(y0, b.e(K), frame.e[K + 1]);
  Mat B0 = Mat::Zero(n, n);
  {
    Mat E(n, n);
    for (int i = 0; i < n; ++i) E.col(i) = frame.e[i];
    const auto lu = E.partialPivLu();
    for (int i = 0; i < K; ++i) {
      Vec dl = Vec::Zero(n);
      for (int k = 0; k <= i; ++k) dl += frame.gs(i, k) * init.dL[k];
      put(y0, b.J(i), frame.e[i]);
      put(y0, b.P(i), dl - GL * frame.e[i]);
      B0.row(i) = lu.solve(dl).transpose();
    }
    // L is geodesic; L̄ˢ is carried by parallel transport, so both rows start with zero covariant derivative.
    put(y0, b.J(K), init.L);
    put(y0, b.P(K), -GL * init.L);
    put(y0, b.J(K + 1), frame.e[K + 1]);
    put(y0, b.P(K + 1), -GL * frame.e[K + 1]);
  }

  GeneratorRay ray(&model, node, init, frame, B0);
  auto& diag = ray.mutable_diagnostics();
  {
    const Mat Bb = B0.topLeftCorner(K, K);
    diag.ubar_symmetry = (Bb - Bb.transpose()).cwiseAbs().maxCoeff();
  }
  const double gauss0[2] = {0.0, -1.0};  // g(J_L, L), g(J_L̄, L) at t = 0

  const double dens = opt.samples_per_unit;
  const int m_fwd = t_max > 0 ? static_cast<int>(std::ceil(t_max * dens - 1e-9)) : 0;
  const int m_bwd = t_min < 0 ? static_cast<int>(std::ceil(-t_min * dens - 1e-9)) : 0;
  ray.reserve(static_cast<std::size_t>(m_fwd + m_bwd + 1));

  const bool phi_zero = weight.is_zero() || weight.is_constant();
  const double phi_const = phi_zero ? weight(init.x, init.affine_offset) : 0.0;
  const bool phi_c2 = weight.smoothness() == Smoothness::C2;

  // An eigenvalue of J̄ may pass through zero with det keeping its sign
  // (isotropic focusing with K even), so compare with the previous sample.
  auto crossed = [&](const Mat& from, const SampleData& to) {
    if (!(to.det > opt.det_floor)) return true;
    const Mat M = from.topLeftCorner(K, K).partialPivLu().solve(to.J.topLeftCorner(K, K));
    const auto ev = M.eigenvalues();
    for (int i = 0; i < K; ++i)
      if (!(ev(i).real() > 0.0)) return true;
    return false;
  };
  Mat last_J;

  // Returns false at a focal point.
  auto record = [&](double t, const State& y, const LocalGeometry& geo) -> bool {
    const SampleData s = frame_components(b, y, &geo);
    if (crossed(last_J, s)) return false;
    last_J = s.J;
    const Vec x = slice(y, 0, n);
    const Vec v = slice(y, n, n);
    for (int j = 0; j < n; ++j) {
      diag.structure = std::max(diag.structure, std::abs(s.J(K, j) - (j == K ? 1.0 : 0.0)));
      diag.structure = std::max(diag.structure, std::abs(s.J(j, K + 1) - (j == K + 1 ? 1.0 : 0.0)));
    }
    for (int r = 0; r < n; ++r) {
      const double g0 = r < K ? 0.0 : gauss0[r - K];
      diag.gauss = std::max(diag.gauss, std::abs(gdot(geo.g, slice(y, b.J(r), n), v) - g0));
    }
    diag.null_defect = std::max(diag.null_defect, std::abs(gdot(geo.g, v, v)));
    double a_phi = phi_const, da_phi = 0.0;
    if (!phi_zero) {
      const double s_aff = init.affine_offset + init.affine_rate * t;
      a_phi = weight(x, s_aff);
      da_phi = phi_c2 ? weight.rate(model, x, v, s_aff, init.affine_rate) : 0.0;
    }
    ray.push_back(t, x, v, s.J, s.dJ, s.Jc, s.Pc, a_phi, da_phi);
    return true;
  };

  auto crossed_after = [&](const State& y, double h) {
    const State z = advance(model, b, y, h, opt.substeps);
    return crossed(frame_components(b, y, nullptr).J, frame_components(b, z, nullptr));
  };

  // Integrates one direction; returns the focal parameter or NaN.
  auto sweep = [&](double t_end, int m, bool include_origin) -> double {
    State y = y0;
    LocalGeometry geo = geo0;
    last_J = frame_components(b, y0, nullptr).J;
    if (include_origin && !record(0.0, y, geo)) throw FocalPointError(0.0, "degenerate Jacobi matrix at the section");
    if (m == 0) return std::numeric_limits<double>::quiet_NaN();
    const double dt = t_end / m;
    long steps = 0;
    for (int i = 1; i <= m; ++i) {
      State yn = y;
      for (int s = 0; s < opt.substeps; ++s) {
        yn = rk4_step(model, b, yn, s == 0 ? geo : geometry_at(model, yn, n), dt / opt.substeps);
        ++steps;
      }
      const Vec xn = slice(yn, 0, n);
      if (!model.in_chart(xn))
        throw Error(ErrorKind::LeftChart, "generator left the chart at t = " + std::to_string(i * dt));
      LocalGeometry gn = local_geometry(model, xn);
      // project on schedule, or early once RK4 drift eats a tenth of the budget
      const Vec v0 = slice(yn, n, n);
      const double drift = std::abs(gdot(gn.g, v0, v0));
      if (steps >= opt.projection_interval || drift > 0.1 * opt.null_tol * std::max(1.0, v0.squaredNorm())) {
        steps = 0;
        Vec v = v0;
        const Vec en = slice(yn, b.e(K), n);
        const double delta = gdot(gn.g, v, v);
        v += -delta / (2.0 * gdot(gn.g, v, en)) * en;
        put(yn, n, v);
      }
      const Vec vn = slice(yn, n, n);
      const double defect = std::abs(gdot(gn.g, vn, vn));
      if (defect > opt.null_tol * std::max(1.0, vn.squaredNorm()))
        throw Error(ErrorKind::NullDefect, "null defect " + format_number(defect) + " at t = " + std::to_string(i * dt));
      const double t = (i == m) ? t_end : i * dt;
      if (!record(t, yn, geo = std::move(gn))) {
        // bisection for the first crossing of the determinant floor
        double lo = 0.0, hi = dt;
        for (int it = 0; it < 60 && hi - lo > 1e-14 * std::max(1.0, std::abs(t)); ++it) {
          const double mid = 0.5 * (lo + hi);
          if (!crossed_after(y, mid))
            lo = mid;
          else
            hi = mid;
        }
        return (i - 1) * dt + 0.5 * (lo + hi);
      }
      y = std::move(yn);
    }
    return std::numeric_limits<double>::quiet_NaN();
  };

  double focal_lo = std::numeric_limits<double>::quiet_NaN();
  double focal_hi = focal_lo;
  focal_lo = sweep(t_min, m_bwd, true);
  if (!std::isnan(focal_lo) && !opt.truncate_at_focal)
    throw FocalPointError(focal_lo, "focal point at t = " + std::to_string(focal_lo));
  std::size_t count = ray.size();
  ray.reverse_prefix(count);
  ray.set_origin(count - 1);
  focal_hi = sweep(t_max, m_fwd, false);
  if (!std::isnan(focal_hi) && !opt.truncate_at_focal)
    throw FocalPointError(focal_hi, "focal point at t = " + std::to_string(focal_hi));
  ray.set_focal(focal_lo, focal_hi);
  if (!phi_zero && !phi_c2) ray.difference_weight_rates();
  if (!std::isnan(focal_lo) || !std::isnan(focal_hi)) {
    // drop the last stored grid step before each focal point
    const double dt_b = m_bwd ? -t_min / m_bwd : 0.0;
    const double dt_f = m_fwd ? t_max / m_fwd : 0.0;
    GeneratorRay cut(&model, node, init, frame, B0);
    cut.mutable_diagnostics() = diag;
    cut.set_focal(focal_lo, focal_hi);
    cut.reserve(ray.size());
    for (std::size_t i = 0; i < ray.size(); ++i) {
      const double t = ray.t(i);
      if (!std::isnan(focal_lo) && t < focal_lo + dt_b * (1.0 - 1e-9) && t < 0.0) continue;
      if (!std::isnan(focal_hi) && t > focal_hi - dt_f * (1.0 - 1e-9) && t > 0.0) continue;
      if (t == 0.0) cut.set_origin(cut.size());
      cut.copy_sample(ray, i);
    }
    return cut;
  }
  return ray;
}

RayInit integrate_from_tip(const MetricModel& model, const Vec& p, const Vec& l, const std::vector<Vec>& dl, double s,
                           int steps) {
  const int n = model.dimension();
  const int K = static_cast<int>(dl.size());
  const Bundle b{n, 0, K};
  State y(b.size(), 0.0);
  put(y, 0, p);
  put(y, n, l);
  for (int k = 0; k < K; ++k) put(y, b.P(k), dl[k]);
  y = advance(model, b, y, s, steps);
  RayInit r;
  r.x = slice(y, 0, n);
  r.L = slice(y, n, n);
  const Mat Gv = contract_gamma(local_geometry(model, r.x).gamma, r.L);
  for (int k = 0; k < K; ++k) {
    r.tangents.push_back(slice(y, b.J(k), n));
    r.dL.push_back(slice(y, b.P(k), n) + Gv * r.tangents.back());
  }
  r.affine_offset = s;
  return r;
}

TaylorProbeResult taylor_ricci_probe(const MetricModel& model, const Vec& p, const Vec& v, double h_max) {
  const int n = model.dimension();
  const int K = n - 2;
  future_orient_check(model, p, v, 1e-8);
  const Mat g = model.metric(p);
  const auto tet = orthonormal_tetrad(model, p);
  // v = α (e0 + u) with u a unit spatial vector
  const double alpha = -gdot(g, v, tet[0]);
  const Vec u = v / alpha - tet[0];
  std::vector<Vec> sp;
  {
    std::vector<Vec> basis{u};
    for (int j = 1; j < n; ++j) {
      Vec w = tet[j];
      for (const auto& q : basis) w -= gdot(g, w, q) * q;
      const double ww = gdot(g, w, w);
      if (ww <= 1e-8) continue;
      w /= std::sqrt(ww);
      basis.push_back(w);
      sp.push_back(w);
      if (static_cast<int>(sp.size()) == K) break;
    }
  }
  if (static_cast<int>(sp.size()) != K) throw Error(ErrorKind::FitFailure, "no screen basis at the probe point");

  // the default step halves while higher-order terms spoil the fit
  const bool adaptive = h_max <= 0.0;
  if (adaptive) h_max = 0.25 * model.chart().scale / std::sqrt(v.squaredNorm());
  for (int attempt = 0;; ++attempt, h_max *= 0.5) {
    const int M = 24;
    const int steps_per = 40;
    const Bundle b{n, 0, K};
    State y(b.size(), 0.0);
    put(y, 0, p);
    put(y, n, v);
    for (int k = 0; k < K; ++k) put(y, b.P(k), sp[k]);
    Eigen::MatrixXd A(M, 4);
    Eigen::VectorXd rhs(M);
    const double dh = h_max / M;
    for (int j = 1; j <= M; ++j) {
      y = advance(model, b, y, dh, steps_per);
      const Mat gx = model.metric(slice(y, 0, n));
      Mat gram(K, K);
      for (int r = 0; r < K; ++r)
        for (int c = 0; c < K; ++c) gram(r, c) = gdot(gx, slice(y, b.J(r), n), slice(y, b.J(c), n));
      const double h = j * dh;
      const double f = std::pow(gram.determinant(), 0.5 / K);
      const double hn = h / h_max;
      for (int q = 0; q < 4; ++q) A(j - 1, q) = std::pow(hn, q + 2);
      rhs(j - 1) = f / h - 1.0;
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(rhs);
    TaylorProbeResult out;
    out.h_max = h_max;
    out.residual = (A * c - rhs).cwiseAbs().maxCoeff();
    out.cubic = c(0) / (h_max * h_max);
    out.ricci = -6.0 * K * out.cubic;
    const double scale = std::max(rhs.cwiseAbs().maxCoeff(), 1e-300);
    if (std::isfinite(out.ricci) && out.residual <= 1e-6 * scale + 1e-12) return out;
    if (!adaptive || attempt == 3)
      throw Error(ErrorKind::FitFailure, "cubic fit residual " + format_number(out.residual));
  }
}

}  // namespace nullot
