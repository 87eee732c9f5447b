#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "nullot/nullgeo.hpp"

namespace nullot {

// Quadrature on a parameter domain U ⊂ R^{n−2}.
struct QuadratureRule {
  int dim = 0;
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
};

// Gauss–Legendre nodes and weights on [a, b].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m, double a, double b);

// Tensor-product Gauss–Legendre on a box.
QuadratureRule box_rule(const std::vector<double>& lower, const std::vector<double>& upper, const std::vector<int>& counts);

// Hyperspherical angles on S^k: polar angles by Gauss–Legendre on
// [eps, π − eps], the last angle uniform on [0, 2π).
QuadratureRule sphere_rule(int k, int n_polar, int n_azimuth, double eps = 1e-4);

struct SectionNode {
  std::vector<double> u;
  double weight = 0.0;        // parameter quadrature weight
  double area_element = 0.0;  // sqrt det of the induced metric in u
  RayInit init;
};

struct CrossSectionGrid {
  int dimension = 0;  // spacetime dimension n
  std::vector<SectionNode> nodes;

  std::size_t size() const { return nodes.size(); }
  // Σ w(z) √det ḡ(z) f(z) in node order.
  double integrate(const std::function<double(std::size_t)>& f) const;
  double area() const;
};

// Section point, L and tangents/derivatives of L at parameter u.
using SectionMap = std::function<RayInit(std::span<const double> u)>;

CrossSectionGrid make_section(const MetricModel& model, const QuadratureRule& rule, const SectionMap& map);

// Slice at affine distance s_ref of the future light-cone of p, built from
// the orthonormal frame at p; generator directions e0 + ω, ω ∈ S^{n−2}.
CrossSectionGrid light_cone_section(const MetricModel& model, const Vec& p, double s_ref, const QuadratureRule& rule,
                                    int tip_steps = 16);

// Round sphere τ = const on the event horizon r = r_S, L = ∂τ + ∂ρ.
CrossSectionGrid horizon_section(const SchwarzschildLemaitre& model, double tau, const QuadratureRule& rule);

// Σ × {t = x = t0} on the null hypersurface x = t, L = ∂t + ∂x. Parameters
// are (u, v) of Σ.
CrossSectionGrid product_section(const ProductSurfaceM2& model, double t0, const QuadratureRule& rule);

struct PatchOptions {
  double t_min = 0.0;
  double t_max = 1.0;
  // Per-node windows; overrides [t_min, t_max] when nonempty.
  std::vector<std::pair<double, double>> windows;
  PropagationOptions propagation = [] {
    PropagationOptions p;
    p.truncate_at_focal = true;
    return p;
  }();
};

class NullHypersurfacePatch {
 public:
  NullHypersurfacePatch() = default;
  NullHypersurfacePatch(std::shared_ptr<const MetricModel> model, CrossSectionGrid section, WeightField weight,
                        std::vector<GeneratorRay> rays, PatchOptions options);

  const MetricModel& model() const { return *model_; }
  std::shared_ptr<const MetricModel> model_ptr() const { return model_; }
  const CrossSectionGrid& section() const { return section_; }
  const WeightField& weight() const { return weight_; }
  const PatchOptions& options() const { return options_; }
  std::size_t size() const { return rays_.size(); }
  const GeneratorRay& ray(std::size_t node) const { return rays_[node]; }
  const std::vector<GeneratorRay>& rays() const { return rays_; }

  // Reference mass ∫ e^{a_z(t)} dt of [lo, hi] on one generator.
  double fiber_mass(std::size_t node, double lo, double hi) const;
  // ∫_lo^hi f(t) e^{a_z(t)} dt by composite Simpson on the ray cells.
  double fiber_integral(std::size_t node, double lo, double hi, const std::function<double(double)>& f,
                        double det_power = 1.0) const;

 private:
  std::shared_ptr<const MetricModel> model_;
  CrossSectionGrid section_;
  WeightField weight_;
  std::vector<GeneratorRay> rays_;
  PatchOptions options_;
};

// Propagates one generator per section node (in parallel).
NullHypersurfacePatch build_patch(std::shared_ptr<const MetricModel> model, CrossSectionGrid section,
                                  const WeightField& weight, const PatchOptions& options);

// Ψ_L(z, t).
Vec flow(const NullHypersurfacePatch& patch, std::size_t node, double t);

// Integrand φ(x, node, t) on the hypersurface.
using Integrand = std::function<double(const Vec& x, std::size_t node, double t)>;

struct MeasureOptions {
  // Per-node sub-windows, clipped to each ray; empty means the full window.
  std::vector<std::pair<double, double>> windows;
  // Exponent on det J̄ in the density; 1 is the rigged measure.
  double det_power = 1.0;
};

// ∬ φ(Ψ_L(z,t)) e^{a_z(t)} dt dH^{n−2}(z).
double integrate_measure(const NullHypersurfacePatch& patch, const Integrand& phi, const MeasureOptions& opt = {});

// Transverse function on the section, as a function of the parameters.
using TransverseFunction = std::function<double(std::span<const double> u)>;

struct RescaleResult {
  NullHypersurfacePatch patch;
  double flow_deviation = 0.0;     // max |Ψ_{φL}(z,t) − Ψ_L(z,φt)|
  double log_det_deviation = 0.0;  // max |W_{φL}(z,t) − W_L(z,φt)|
  double density_deviation = 0.0;  // max |φ·vol_{φL} − vol_L| on matched points, relative
};

// Patch generated by φL over the windows [t_lo/φ, t_hi/φ]; deviations are
// measured on every stored sample of the new rays.
RescaleResult rescale_transverse(const NullHypersurfacePatch& patch, const TransverseFunction& phi);

// Section {Ψ_L(z, t_L(z))}, with tangents J_{T_k} + ∂_k t_L · L and
// ∇_{T'_k} L from the Jacobi data.
CrossSectionGrid graph_section_transfer(const NullHypersurfacePatch& patch, const TransverseFunction& t_L);

struct IndependenceReport {
  std::vector<double> via_first;
  std::vector<double> via_second;
  double max_discrepancy = 0.0;  // relative to max(|I1|, |I2|, 1e-300)
};

// Integrals of the same region computed from two sections of one
// hypersurface. The node z of `second` lies on the generator of node z of
// `first` at parameter shift[z]; the region is [lo, hi] in the parameter of
// `first`.
IndependenceReport cross_section_independence_check(const NullHypersurfacePatch& first,
                                                    const NullHypersurfacePatch& second,
                                                    const std::vector<double>& shift, double lo, double hi,
                                                    const std::vector<Integrand>& integrands,
                                                    double second_det_power = 1.0);

// Number of generators whose transverse coordinate α(x(t) − x(0)),
// α = −g(L̄ˢ, ·) at the base point, vanishes away from t = 0.
std::size_t extra_section_crossings(const NullHypersurfacePatch& patch);

// node,t,x0..,W_L,a_z,det_Jbar with 17 significant digits; every
// `stride`-th sample.
void write_patch_csv(const NullHypersurfacePatch& patch, std::ostream& out, std::size_t stride = 1);

}  // namespace nullot
