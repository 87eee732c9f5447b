#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "nullot/nec.hpp"

namespace nullot {

struct ConeScenario {
  std::shared_ptr<const MetricModel> model;
  Vec tip;
  QuadratureRule rule;
  double s_max = 2.0;
  double s_min = 0.0;  // 0 means 1e−3 · s_max
  WeightField weight;
  double N = 4.0;
  int grid_points = 33;
  double samples_per_unit = 256.0;
  double monotonicity_tol = 1e-7;
  double tip_tol = 1e-6;
  VerdictPolicy policy = VerdictPolicy::Strict;
};

struct ConeCurve {
  std::vector<double> s;
  std::vector<double> A;
  double monotonicity_margin = 0.0;  // min_k A(s_k) − A(s_{k+1})
  bool monotone = true;
  double tip_value = 0.0;  // e^{Φ(p)}, NaN when Φ is singular at p
  double tip_deviation = 0.0;
  bool tip_ok = true;
  double max_deviation_from_one = 0.0;
  NullHypersurfacePatch patch;  // rays start on the slice s = s_min
};

// A(s) = ∫_{S_s} e^Φ dvol / (ω_{N−2} s^{N−2}) on a log-spaced grid.
// Throws FocalPointError, and MonotonicityViolation under the strict policy.
ConeCurve lightcone_comparison(const ConeScenario& scenario);

void write_cone_csv(const ConeCurve& curve, std::ostream& out);

struct HorizonScenario {
  std::shared_ptr<const MetricModel> model;
  CrossSectionGrid base;
  WeightField weight;
  TransverseFunction t1;  // S1 = {Ψ(z, t1(z))}
  TransverseFunction t2;  // S2, with t1 ≤ t2
  double T_future = 0.0;  // 0 means 10 × the largest separation
  double samples_per_unit = 128.0;
  double certificate_samples_per_unit = 16.0;
  double tol = 1e-8;           // relative, for area1 ≤ area2
  double equality_tol = 1e-6;  // relative, triggers rigidity
};

struct HawkingResult {
  double area1 = 0.0;
  double area2 = 0.0;
  double relative_gap = 0.0;  // (area2 − area1)/area2
  bool pass = false;
  bool equality = false;
  double separation = 0.0;
  double certified_to = 0.0;  // generators focal-free up to this parameter
  NullHypersurfacePatch patch;
};

// Weighted areas of S1, S2 via graph transfer. Throws NotComplete when a
// generator leaves the chart or focuses before t_max + T_future.
HawkingResult hawking_area(const HorizonScenario& scenario);

// ∫_S e^Φ dH^{n−2} over a section carrying affine offsets.
double weighted_area(const CrossSectionGrid& section, const WeightField& weight);

enum class RigidityMode { Horizon, Cone };

struct RigidityReport {
  double det_deviation = 0.0;       // |det J̄ − target| / target
  double shape_deviation = 0.0;     // ‖J̄/λ − Id‖_F, λ = det^{1/(n−2)}
  double offdiagonal = 0.0;         // off-diagonal part of J̄/λ
  double identity_deviation = 0.0;  // ‖J̄ − Id‖_F
  double ricci = 0.0;               // |Ric^{g,Φ,N}(L, L)|
};

// Max deviations over every `stride`-th sample of every generator. The
// target determinant is 1 (horizon) or (s/s0)^{n−2} (cone).
RigidityReport rigidity_diagnostic(const NullHypersurfacePatch& patch, RigidityMode mode, double N,
                                   std::size_t stride = 1);

struct StabilityScenario {
  std::shared_ptr<const MetricModel> base;
  std::shared_ptr<const PerturbationField> h;
  std::vector<double> eps;
  // Coefficient on h for each ε; identity when empty.
  std::function<double(double)> amplitude;
  // Φ_ε; zero when empty.
  std::function<WeightField(double)> weight;
  Vec tip;
  double s_ref = 0.1;
  double t_max = 0.8;
  QuadratureRule rule;
  std::vector<double> densities{64.0, 128.0, 256.0};
  CheckConfig config;
};

struct StabilityRow {
  double eps = 0.0;
  double amplitude = 0.0;
  std::vector<double> margins;  // worst NC¹ margin per density
  bool pass = false;            // at the finest density
  bool resolution_monotone = true;
};

struct StabilityReport {
  std::vector<double> densities;
  std::vector<double> base_margins;
  std::vector<StabilityRow> rows;
  bool all_pass = false;
  bool limit_pass = false;  // base margin ≥ −tol
  double limit_gap = 0.0;   // |m(ε_min) − m(base)| at the finest density
  bool resolution_monotone = true;
  double rate = 0.0;  // slope of log |m(ε) − m(base)| against log ε
};

// Throws SignatureLoss when some g_ε is not Lorentzian along the patch.
StabilityReport stability_experiment(const StabilityScenario& scenario);

void write_stability_csv(const StabilityReport& report, std::ostream& out);

}  // namespace nullot
