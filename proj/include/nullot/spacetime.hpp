#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nullot/core.hpp"
#include "nullot/jet.hpp"

namespace nullot {

// Dense tensor with `Rank` indices of extent n <= kMaxDim.
template <int Rank>
class Tensor {
 public:
  static constexpr std::size_t kCapacity = [] {
    std::size_t c = 1;
    for (int i = 0; i < Rank; ++i) c *= kMaxDim;
    return c;
  }();

  // Only the first n^Rank slots are live; copies skip the rest.
  explicit Tensor(int n = 0) : n_(n) { std::fill_n(data_.begin(), size(), 0.0); }
  Tensor(const Tensor& o) : n_(o.n_) { std::copy_n(o.data_.begin(), size(), data_.begin()); }
  Tensor& operator=(const Tensor& o) {
    n_ = o.n_;
    std::copy_n(o.data_.begin(), size(), data_.begin());
    return *this;
  }

  int dim() const { return n_; }
  std::size_t size() const {
    std::size_t c = 1;
    for (int i = 0; i < Rank; ++i) c *= static_cast<std::size_t>(n_);
    return c;
  }

  template <typename... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[offset({static_cast<int>(idx)...})];
  }
  template <typename... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[offset({static_cast<int>(idx)...})];
  }

  double max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::abs(data_[i]));
    return m;
  }

 private:
  std::size_t offset(std::array<int, Rank> idx) const {
    std::size_t o = 0;
    for (int i = 0; i < Rank; ++i) o = o * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[i]);
    return o;
  }

  int n_;
  std::array<double, kCapacity> data_;
};

// Γ^a_bc stored as (a, b, c).
using Christoffel = Tensor<3>;
// ∂_k Γ^a_bc stored as (a, b, c, k).
using ChristoffelDerivative = Tensor<4>;
// R^a_bcd with R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z, so
// (R(X,Y)Z)^a = R^a_bcd Z^b X^c Y^d and Ric_bd = R^a_bad.
using Riemann = Tensor<4>;
// ∂_k g_ij stored as (i, j, k).
using MetricDerivative = Tensor<3>;
// ∂_k ∂_l g_ij stored as (i, j, k, l).
using MetricSecondDerivative = Tensor<4>;

enum class MetricKind { Minkowski, SchwarzschildLemaitre, ProductSurfaceM2, Warped, Perturbed };

const char* to_string(MetricKind kind);

struct ChartDescription {
  std::vector<std::string> coordinate_names;
  std::vector<double> lower;
  std::vector<double> upper;
  // Characteristic length used to size finite-difference steps.
  double scale = 1.0;
};

class MetricModel {
 public:
  MetricModel(MetricKind kind, ChartDescription chart);
  virtual ~MetricModel() = default;

  int dimension() const { return static_cast<int>(chart_.coordinate_names.size()); }
  MetricKind kind() const { return kind_; }
  const ChartDescription& chart() const { return chart_; }
  virtual std::string name() const = 0;

  // Box check plus any model-specific exclusions (r > r_min, poles...).
  virtual bool in_chart(const Vec& x) const;

  virtual Mat metric(const Vec& x) const = 0;

  // Default: 4th-order central differences of metric().
  virtual void metric_derivatives(const Vec& x, MetricDerivative& dg) const;

  // Exact second derivatives are optional; without them the curvature
  // evaluators difference the analytic Christoffel symbols instead.
  virtual bool has_second_derivatives() const { return false; }
  virtual void metric_second_derivatives(const Vec& x, MetricSecondDerivative& ddg) const;

  // g, ∂g and (when available) ∂∂g in one evaluation.
  virtual void metric_jet(const Vec& x, Mat& g, MetricDerivative& dg, MetricSecondDerivative* ddg) const;

  // A future-directed timelike vector at x.
  virtual Vec time_orientation(const Vec& x) const;

  // Step for finite differences of metric/Christoffel evaluators.
  double fd_step() const { return chart_.scale * 1e-3; }

  void require_in_chart(const Vec& x) const;

 private:
  MetricKind kind_;
  ChartDescription chart_;
};

// Metric whose components are written once as a template over the scalar
// type; derivatives come from second-order jets.
template <int D, typename Derived>
class JetMetric : public MetricModel {
 public:
  using MetricModel::MetricModel;

  Mat metric(const Vec& x) const override {
    std::array<double, D> p{};
    for (int i = 0; i < D; ++i) p[i] = x(i);
    const auto comps = static_cast<const Derived&>(*this).components(p);
    Mat g(D, D);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) g(i, j) = comps[i * D + j];
    return g;
  }

  void metric_derivatives(const Vec& x, MetricDerivative& dg) const override {
    const auto comps = jets(x);
    dg = MetricDerivative(D);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k) dg(i, j, k) = comps[i * D + j].d[k];
  }

  bool has_second_derivatives() const override { return true; }

  void metric_second_derivatives(const Vec& x, MetricSecondDerivative& ddg) const override {
    const auto comps = jets(x);
    ddg = MetricSecondDerivative(D);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k)
          for (int l = 0; l < D; ++l) ddg(i, j, k, l) = comps[i * D + j].hess(k, l);
  }

  void metric_jet(const Vec& x, Mat& g, MetricDerivative& dg, MetricSecondDerivative* ddg) const override {
    const auto comps = jets(x);
    g.resize(D, D);
    dg = MetricDerivative(D);
    if (ddg) *ddg = MetricSecondDerivative(D);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        const auto& c = comps[i * D + j];
        g(i, j) = c.v;
        for (int k = 0; k < D; ++k) {
          dg(i, j, k) = c.d[k];
          if (ddg)
            for (int l = 0; l < D; ++l) (*ddg)(i, j, k, l) = c.hess(k, l);
        }
      }
  }

 private:
  std::array<Jet<D>, D * D> jets(const Vec& x) const {
    std::array<Jet<D>, D> p{};
    for (int i = 0; i < D; ++i) p[i] = Jet<D>::variable(x(i), i);
    return static_cast<const Derived&>(*this).components(p);
  }
};

class Minkowski final : public MetricModel {
 public:
  explicit Minkowski(int n, double extent = 1e6);
  std::string name() const override { return "minkowski"; }
  Mat metric(const Vec& x) const override;
  void metric_derivatives(const Vec& x, MetricDerivative& dg) const override;
  bool has_second_derivatives() const override { return true; }
  void metric_second_derivatives(const Vec& x, MetricSecondDerivative& ddg) const override;
};

// ds² = −dτ² + (r_S/r) dρ² + r²(dθ² + sin²θ dφ²), r = [3(ρ−τ)/2]^{2/3} r_S^{1/3}.
class SchwarzschildLemaitre final : public JetMetric<4, SchwarzschildLemaitre> {
 public:
  explicit SchwarzschildLemaitre(double r_s, double r_min_fraction = 0.05, double pole_margin = 1e-4);
  std::string name() const override { return "schwarzschild-lemaitre"; }
  bool in_chart(const Vec& x) const override;

  double schwarzschild_radius() const { return r_s_; }
  double areal_radius(const Vec& x) const;
  // ρ − τ on the sphere of areal radius r.
  double rho_minus_tau(double r) const;

  template <typename T>
  std::array<T, 16> components(const std::array<T, 4>& x) const {
    using std::cos;
    using std::pow;
    using std::sin;
    const T u = x[1] - x[0];
    const T r = pow(1.5 * u, 2.0 / 3.0) * std::cbrt(r_s_);
    const T st = sin(x[2]);
    std::array<T, 16> g{};
    g[0] = T(-1.0);
    g[5] = r_s_ / r;
    g[10] = r * r;
    g[15] = r * r * st * st;
    return g;
  }

 private:
  double r_s_;
  double r_min_;
  double pole_margin_;
};

// g_Σ ⊕ (−dt² + dx²) with coordinates (t, x, u, v); Σ is a flat square
// torus or a round sphere of radius R (u = θ, v = φ).
class ProductSurfaceM2 final : public JetMetric<4, ProductSurfaceM2> {
 public:
  enum class Surface { Flat, Sphere };
  ProductSurfaceM2(Surface surface, double radius, double pole_margin = 1e-4);
  std::string name() const override { return "product-surface-M2"; }
  bool in_chart(const Vec& x) const override;
  Surface surface() const { return surface_; }
  double radius() const { return radius_; }

  template <typename T>
  std::array<T, 16> components(const std::array<T, 4>& x) const {
    using std::sin;
    std::array<T, 16> g{};
    g[0] = T(-1.0);
    g[5] = T(1.0);
    if (surface_ == Surface::Flat) {
      g[10] = T(1.0);
      g[15] = T(1.0);
    } else {
      const T st = sin(x[2]);
      g[10] = T(radius_ * radius_);
      g[15] = radius_ * radius_ * st * st;
    }
    return g;
  }

 private:
  Surface surface_;
  double radius_;
  double pole_margin_;
};

// Spatially flat FLRW: −dt² + (t/t0)^{2p} (dx² + dy² + dz²), t > t_min.
class Warped final : public JetMetric<4, Warped> {
 public:
  Warped(double exponent, double t0, double t_min);
  std::string name() const override { return "warped"; }

  template <typename T>
  std::array<T, 16> components(const std::array<T, 4>& x) const {
    using std::pow;
    const T a2 = pow(x[0] / t0_, 2.0 * p_);
    std::array<T, 16> g{};
    g[0] = T(-1.0);
    g[5] = a2;
    g[10] = a2;
    g[15] = a2;
    return g;
  }

 private:
  double p_;
  double t0_;
};

// Smooth symmetric field h added to a base metric.
class PerturbationField {
 public:
  virtual ~PerturbationField() = default;
  virtual std::string name() const = 0;
  virtual Mat value(const Vec& x) const = 0;
  virtual void derivatives(const Vec& x, MetricDerivative& dh) const = 0;
  virtual void second_derivatives(const Vec& x, MetricSecondDerivative& ddh) const = 0;
  // True where g + eps*h is expected to stay Lorentzian.
  virtual bool admissible(const Vec& x, const Mat& g_base, double eps) const;
};

// h = −|x − c|²_E · η: g + εh = (1 − ε|x−c|²) η on a Minkowski base. Null
// Ricci curvature has the sign of ε near c.
class ConformalWell final : public PerturbationField {
 public:
  ConformalWell(Vec center, double sign = 1.0);
  std::string name() const override { return "conformal-well"; }
  Mat value(const Vec& x) const override;
  void derivatives(const Vec& x, MetricDerivative& dh) const override;
  void second_derivatives(const Vec& x, MetricSecondDerivative& ddh) const override;
  bool admissible(const Vec& x, const Mat& g_base, double eps) const override;

  // Exact Ric(k,k) of (1 − β|x−c|²) η for η-null k (4-d).
  static double null_ricci(const Vec& x, const Vec& center, double beta, const Vec& k);

 private:
  Vec center_;
  double sign_;
};

class Perturbed final : public MetricModel {
 public:
  Perturbed(std::shared_ptr<const MetricModel> base, std::shared_ptr<const PerturbationField> h, double eps);
  std::string name() const override { return "perturbed"; }
  bool in_chart(const Vec& x) const override;
  Mat metric(const Vec& x) const override;
  void metric_derivatives(const Vec& x, MetricDerivative& dg) const override;
  bool has_second_derivatives() const override { return base_->has_second_derivatives(); }
  void metric_second_derivatives(const Vec& x, MetricSecondDerivative& ddg) const override;
  void metric_jet(const Vec& x, Mat& g, MetricDerivative& dg, MetricSecondDerivative* ddg) const override;
  Vec time_orientation(const Vec& x) const override { return base_->time_orientation(x); }

  double epsilon() const { return eps_; }
  const MetricModel& base() const { return *base_; }
  std::shared_ptr<const MetricModel> base_ptr() const { return base_; }
  std::shared_ptr<const PerturbationField> field() const { return h_; }

 private:
  std::shared_ptr<const MetricModel> base_;
  std::shared_ptr<const PerturbationField> h_;
  double eps_;
};

// --- evaluators -------------------------------------------------------------

// Levi-Civita connection from the model's metric derivatives.
Christoffel christoffel(const MetricModel& model, const Vec& x);
// Same formula with ∂g from 4th-order central differences of g only.
Christoffel christoffel_fd(const MetricModel& model, const Vec& x);
// ∂_k Γ^a_bc: exact when the model supplies second metric derivatives,
// otherwise 4th-order differences of the analytic Christoffel symbols.
ChristoffelDerivative christoffel_derivative(const MetricModel& model, const Vec& x);
Riemann riemann(const MetricModel& model, const Vec& x);
Mat ricci_tensor(const MetricModel& model, const Vec& x);
double ricci(const MetricModel& model, const Vec& x, const Vec& v, const Vec& w);

// Connection data for the geodesic/Jacobi right-hand side.
struct LocalGeometry {
  Mat g;
  Christoffel gamma;
  ChristoffelDerivative dgamma;
};
LocalGeometry local_geometry(const MetricModel& model, const Vec& x);

// Number of negative eigenvalues of g at x, and whether the rest are positive.
bool is_lorentzian(const Mat& g, double tol = 1e-12);

// --- weights ----------------------------------------------------------------

enum class Smoothness { C0, C2 };

// Scalar weight Φ on the hypersurface. Arguments are the chart point and the
// affine parameter of the generator through it (distance from the cone tip
// for light-cones, parameter from the base section otherwise).
class WeightField {
 public:
  using Fn = std::function<double(const Vec& x, double affine)>;

  WeightField();  // Φ ≡ 0
  WeightField(Fn fn, Smoothness smoothness, std::string description, bool constant = false);

  static WeightField zero() { return WeightField(); }
  static WeightField constant(double c);

  double operator()(const Vec& x, double affine) const { return fn_(x, affine); }
  Smoothness smoothness() const { return smoothness_; }
  bool is_zero() const { return zero_; }
  bool is_constant() const { return constant_; }
  const std::string& description() const { return description_; }

  struct AlongDerivatives {
    double first = 0.0;   // ⟨∇Φ, v⟩
    double second = 0.0;  // Hess Φ(v, v)
  };
  // Derivatives along the geodesic through x with velocity v, when the affine
  // parameter advances at `affine_rate` per unit of the curve parameter.
  AlongDerivatives along(const MetricModel& model, const Vec& x, const Vec& v, double affine,
                         double affine_rate) const;
  // First derivative only; needs no connection data.
  double rate(const MetricModel& model, const Vec& x, const Vec& v, double affine, double affine_rate) const;

 private:
  Fn fn_;
  Smoothness smoothness_ = Smoothness::C2;
  std::string description_ = "zero";
  bool zero_ = true;
  bool constant_ = true;
};

struct BakryEmeryQuery {
  double N = 0.0;
  Vec v;
  Vec x;
  double affine = 0.0;
  double affine_rate = 0.0;
};

// Ric − Hess Φ − dΦ⊗dΦ/(N−n) evaluated on (v, v).
double bakry_emery_ricci(const MetricModel& model, const WeightField& weight, const BakryEmeryQuery& q);

// --- catalog ----------------------------------------------------------------

using ParamMap = std::map<std::string, double>;

// Build a catalog entry from its name and numeric parameters.
std::shared_ptr<const MetricModel> make_metric(const std::string& name, const ParamMap& params);
std::vector<std::string> catalog_names();

}  // namespace nullot
