#pragma once

#include <limits>
#include <span>
#include <vector>

#include "nullot/spacetime.hpp"

namespace nullot {

struct GeodesicSample {
  double t = 0.0;
  Vec x;
  Vec v;
};

struct GeodesicOptions {
  double max_step = 1.0 / 512.0;
  double null_tol = 1e-9;
  int projection_interval = 100;
};

// Integrates x'' + Γ(x', x') = 0 from grid[0] = 0 through the monotone grid
// (increasing or decreasing).
std::vector<GeodesicSample> integrate_null_geodesic(const MetricModel& model, const Vec& x0, const Vec& v0,
                                                    std::span<const double> grid, const GeodesicOptions& opt = {});

// e[0..n-3] orthonormal spacelike block, e[n-2] = L, e[n-1] = L̄ˢ.
struct AdaptedFrame {
  Vec x;
  std::vector<Vec> e;
  Mat eta;
  // e_i = Σ_k gs(i,k) T_k for the input tangents T_k.
  Mat gs;
  // sqrt(det g(T_i, T_k)): Hausdorff density of the section in its parameters.
  double area_element = 0.0;
};

AdaptedFrame build_adapted_frame(const MetricModel& model, const Vec& x, const std::vector<Vec>& tangents, const Vec& L);

// Largest violation of the rigged metric identities g̃(v,w) = g(v,w) on ker α,
// g̃(v,L) = 0, g̃(L,L) = 1, where g̃ = g + α⊗α and α = −g(L̄ˢ, ·).
double rigged_metric_check(const MetricModel& model, const AdaptedFrame& frame);

// Initial data for one generator: base point, L, section tangents T_k and
// ∇_{T_k} L. The weight sees the affine parameter offset + rate·t, so rays
// re-based along a cone or generated by a rescaled field evaluate Φ at the
// same points as the original ones.
struct RayInit {
  Vec x;
  Vec L;
  std::vector<Vec> tangents;
  std::vector<Vec> dL;
  double affine_offset = 0.0;
  double affine_rate = 1.0;
};

struct PropagationOptions {
  double samples_per_unit = 512.0;
  int substeps = 1;
  double null_tol = 1e-9;
  double det_floor = 1e-12;
  int projection_interval = 100;
  // Cut the window one grid step before the first focal point instead of
  // throwing FocalPointError.
  bool truncate_at_focal = false;
};

struct RayDiagnostics {
  double structure = 0.0;      // |row n−1 − f_{n−1}|, |col n − f_n|
  double gauss = 0.0;          // |g(J_i(t), L) − g(J_i(0), L)|
  double null_defect = 0.0;    // |g(x', x')|
  double ubar_symmetry = 0.0;  // |Ū(0) − Ū(0)ᵀ|
};

// Positions, velocities and Jacobi data of the spacelike block at a
// parameter, re-integrated from the nearest stored sample.
struct JacobiPoint {
  double t = 0.0;
  Vec x;
  Vec v;
  std::vector<Vec> J;   // J_{e_i}(t) as chart vectors
  std::vector<Vec> DJ;  // covariant derivatives along the generator
};

class GeneratorRay {
 public:
  GeneratorRay() = default;
  GeneratorRay(const MetricModel* model, int node, const RayInit& init, const AdaptedFrame& frame, Mat b0);

  int dimension() const { return n_; }
  int node() const { return node_; }
  double affine_offset() const { return offset_; }
  double affine_rate() const { return init_.affine_rate; }
  const AdaptedFrame& frame() const { return frame_; }
  const RayInit& init() const { return init_; }
  const Mat& initial_derivative() const { return b0_; }  // J'(0)
  const RayDiagnostics& diagnostics() const { return diag_; }

  std::size_t size() const { return t_.size(); }
  double t(std::size_t i) const { return t_[i]; }
  const std::vector<double>& times() const { return t_; }
  double t_lo() const { return t_.front(); }
  double t_hi() const { return t_.back(); }
  // Focal parameters found past either end of the window (NaN if none).
  double focal_lo() const { return focal_lo_; }
  double focal_hi() const { return focal_hi_; }

  Vec x(std::size_t i) const;
  Vec v(std::size_t i) const;
  Mat jbar(std::size_t i) const;
  Mat djbar(std::size_t i) const;
  double det(std::size_t i) const { return det_[i]; }
  double W(std::size_t i) const { return W_[i]; }
  double dW(std::size_t i) const { return dW_[i]; }
  double a(std::size_t i) const { return a_[i]; }
  double da(std::size_t i) const { return da_[i]; }
  const std::vector<double>& a_values() const { return a_; }

  // Index i with t(i) <= t <= t(i+1); throws OutOfWindow.
  std::size_t locate(double t) const;
  Vec position(double t) const;  // cubic Hermite with stored velocities
  Mat jbar_at(double t) const;   // cubic Hermite with J̄'
  double det_at(double t) const;
  double a_at(double t) const;
  // Exact cell integral of the Hermite interpolant of a on [t(i), t(i+1)]
  // and the interpolant's antiderivative from t(i) to t(i) + s.
  double a_integral(std::size_t i, double s) const;

  JacobiPoint exact_state(double t) const;

  // Generator through Ψ_L(z, t) seen from the section Ψ_L(S, t).
  RayInit rebased(double t) const;

  // --- builder interface ---
  void reserve(std::size_t m);
  void push_back(double t, const Vec& x, const Vec& v, const Mat& J, const Mat& dJ, const std::vector<Vec>& Jc,
                 const std::vector<Vec>& Pc, double a_phi, double da_phi);
  void reverse_prefix(std::size_t count);
  void copy_sample(const GeneratorRay& other, std::size_t i);
  void set_focal(double lo, double hi) {
    focal_lo_ = lo;
    focal_hi_ = hi;
  }
  RayDiagnostics& mutable_diagnostics() { return diag_; }
  // Replaces Φ' by centered differences of the stored Φ samples (C0 weights).
  void difference_weight_rates();
  std::size_t origin() const { return origin_; }
  void set_origin(std::size_t i) { origin_ = i; }

 private:
  const MetricModel* model_ = nullptr;
  int n_ = 0;
  int k_ = 0;
  int node_ = 0;
  double offset_ = 0.0;
  RayInit init_;
  AdaptedFrame frame_;
  Mat b0_;
  RayDiagnostics diag_;
  double focal_lo_ = std::numeric_limits<double>::quiet_NaN();
  double focal_hi_ = std::numeric_limits<double>::quiet_NaN();
  std::size_t origin_ = 0;

  std::vector<double> t_, x_, v_, jb_, djb_, jc_, pc_, det_, W_, dW_, a_, da_;
};

// Builds the adapted frame from `init` and propagates the geodesic, the
// parallel frame and the Jacobi matrix over [t_min, t_max] (t_min <= 0 <= t_max).
GeneratorRay propagate_jacobi(const MetricModel& model, const RayInit& init, double t_min, double t_max,
                              const PropagationOptions& opt, const WeightField& weight = WeightField(), int node = 0);

// Jacobi fields vanishing at a cone tip p with J_k'(0) = dl[k], carried to
// parameter s; returns the generator data at s as a section point.
RayInit integrate_from_tip(const MetricModel& model, const Vec& p, const Vec& l, const std::vector<Vec>& dl, double s,
                           int steps);

// Orthonormal frame at p: e[0] future timelike, e[1..n-1] spacelike.
std::vector<Vec> orthonormal_tetrad(const MetricModel& model, const Vec& p);

struct TaylorProbeResult {
  double ricci = 0.0;     // estimate of Ric_p(v, v)
  double cubic = 0.0;     // coefficient of h³ in (det J̄(h))^{1/(n−2)}
  double residual = 0.0;  // max abs residual of the fit
  double h_max = 0.0;
};

// Fits (det J̄_tip(h))^{1/(n−2)} = h − h³ Ric(v,v)/(6(n−2)) + … on the local
// cone of p in direction v.
TaylorProbeResult taylor_ricci_probe(const MetricModel& model, const Vec& p, const Vec& v, double h_max = 0.0);

}  // namespace nullot
