#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "nullot/hypersurface.hpp"

namespace nullot {

// Measure on one generator with piecewise-constant Lebesgue density in the
// affine parameter; its CDF is piecewise linear and exact. The density with
// respect to the reference e^{a_z(t)} dt is f(t) e^{−a_z(t)}.
class DensityProfile {
 public:
  DensityProfile() = default;
  // f[j] is the density on [edges[j], edges[j+1]].
  DensityProfile(std::vector<double> edges, std::vector<double> density);
  static DensityProfile from_masses(std::vector<double> edges, const std::vector<double>& masses);
  static DensityProfile uniform(double lo, double hi, double mass);

  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& density() const { return f_; }
  std::size_t cells() const { return f_.size(); }
  double cell_mass(std::size_t j) const { return cdf_[j + 1] - cdf_[j]; }
  double mass() const { return cdf_.empty() ? 0.0 : cdf_.back(); }
  bool empty() const { return !(mass() > 0.0); }

  double cdf(double t) const;
  // Smallest t with cdf(t) = m, for 0 <= m <= mass.
  double quantile(double m) const;
  // Hull of the cells carrying positive mass.
  std::pair<double, double> support() const;

  DensityProfile scaled(double c) const;
  DensityProfile shifted(double s) const;

 private:
  std::vector<double> edges_;
  std::vector<double> f_;
  std::vector<double> cdf_;
};

// sup_t |F_a(t) − F_b(t)|.
double cdf_distance(const DensityProfile& a, const DensityProfile& b);

// μ = Σ_z w(z) √det ḡ(z) μ^z over the section quadrature.
struct FiberedMeasure {
  std::vector<DensityProfile> fibers;
  std::vector<double> section_weights;

  std::size_t size() const { return fibers.size(); }
  double total_mass() const;
  void normalize();
  // ∫ φ(z) dμ for a function of the generator label.
  double integrate_label(const std::vector<double>& phi) const;
};

// Uniform with respect to e^{a_z} dt on each window, with the given fiber
// masses; cells are the ray cells split `refine` times.
FiberedMeasure fiber_uniform(const NullHypersurfacePatch& patch, const std::vector<std::pair<double, double>>& windows,
                             const std::vector<double>& fiber_mass, int refine = 1);

// Density ρ(x, node, t) with respect to e^{a_z} dt, averaged on cells.
FiberedMeasure from_reference_density(const NullHypersurfacePatch& patch,
                                      const std::vector<std::pair<double, double>>& windows, const Integrand& rho,
                                      int refine = 1);

// Translate every fiber by s(z) along its generator (flow pushforward).
FiberedMeasure flow_pushforward(const FiberedMeasure& mu, const std::vector<double>& s);

struct NullConnection {
  bool connected = false;
  double mismatch = 0.0;  // max_z |m0(z) − m1(z)|
};

// Fiber masses agree within tol·max(1, largest fiber mass).
NullConnection check_null_connected(const FiberedMeasure& mu0, const FiberedMeasure& mu1, double tol = 1e-9);

// T is affine on [x0, x1] ↦ [y0, y1], where μ0 has density f0.
struct PlanSegment {
  double x0, x1, y0, y1, f0;
};

struct FiberPlan {
  std::vector<PlanSegment> segments;
  double mass_scale = 1.0;  // factor applied to ρ1 to match masses

  bool empty() const { return segments.empty(); }
  double map(double x) const;
  double min_displacement() const;  // min over knots of T(x) − x
  bool nondecreasing() const;
};

// T = F1⁻¹ ∘ F0. Masses must agree within rel_tol; ρ1 is then rescaled.
FiberPlan monotone_rearrangement(const DensityProfile& rho0, const DensityProfile& rho1, double rel_tol = 1e-9);

// μ_t = (T_t)_# ρ0 with T_t = (1−t) id + t T.
DensityProfile pushforward(const FiberPlan& plan, double t);

struct MonotonePlan {
  std::vector<FiberPlan> fibers;
  std::vector<double> section_weights;
  double max_mass_correction = 0.0;  // max |scale − 1| over fibers
  double min_displacement() const;
};

// Throws NotNullConnected when fiber masses disagree beyond rel_tol.
MonotonePlan monotone_plan(const FiberedMeasure& mu0, const FiberedMeasure& mu1, double rel_tol = 1e-9);

FiberedMeasure interpolate(const MonotonePlan& plan, double t);

// Ent(μ | e^{a} dt dH). Throws NotAbsolutelyContinuous for mass outside a
// ray window; returns +inf when a cell of zero length carries mass.
double entropy(const FiberedMeasure& mu, const NullHypersurfacePatch& patch);

// exp(−Ent/divisor); 0 when Ent = +inf.
double entropy_power(double ent, double divisor);
double entropy_power(const FiberedMeasure& mu, const NullHypersurfacePatch& patch, double divisor);

struct EntropyCurve {
  std::vector<double> t;
  std::vector<double> ent;
  std::vector<double> u;
};

EntropyCurve entropy_curve(const MonotonePlan& plan, const NullHypersurfacePatch& patch, double divisor, int points = 33);
void write_entropy_csv(const EntropyCurve& curve, std::ostream& out);

}  // namespace nullot
