#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nullot/transport.hpp"

namespace nullot {

enum class VerdictPolicy { Strict, MarginReport };

struct CheckConfig {
  double N = 4.0;
  double tol_c = 1e-7;  // on b normalized by its max
  // Multiplier on the ray sample density used by scenario builders.
  int refinement = 1;
  VerdictPolicy policy = VerdictPolicy::Strict;
  int nce_points = 33;
  double nce_tol = 1e-6;  // chord margin, relative to max(u(0), u(1))
  double riccati_tol = 1e-6;
};

void validate(const CheckConfig& config);

struct GeneratorMargin {
  std::size_t id = 0;  // generator (nc1) or pair index (nce)
  double margin = 0.0;
  double t = 0.0;
  // nce only: worst midpoint-concavity margin of u on the t-grid.
  double midpoint = 0.0;
};

// Signed margins: negative means violation. pass iff worst_margin >= −tol.
struct CheckReport {
  std::string check;
  bool pass = true;
  double tolerance = 0.0;
  double worst_margin = 0.0;
  std::size_t worst_id = 0;
  double worst_t = 0.0;
  std::vector<GeneratorMargin> per_generator;
  // Generators whose window was cut before a focal point.
  std::vector<std::size_t> focal_truncated;
};

// Three-point concavity of b = exp(a_z/(N−2)) on the stored ray samples.
CheckReport nc1_check(const NullHypersurfacePatch& patch, const CheckConfig& config);

// Discrete margins (b_i − chord)/max b along one generator, index-aligned
// with the interior samples 1..m−2.
std::vector<double> concavity_margins(const GeneratorRay& ray, double N);

using MeasurePair = std::pair<FiberedMeasure, FiberedMeasure>;

// Endpoint chord inequality of u_{N−1} along the monotone plan of each pair.
CheckReport nce_check(const NullHypersurfacePatch& patch, const CheckConfig& config,
                      const std::vector<MeasurePair>& pairs);

struct RiccatiCurve {
  std::size_t node = 0;
  std::vector<double> t;
  std::vector<double> d;  // a″ + a′²/(N−2) + Ric^{g,Φ,N}(L,L)
  double max_d = 0.0;     // over interior samples
};

// Throws WeightNotSmooth for C0 weights.
std::vector<RiccatiCurve> riccati_diagnostic(const NullHypersurfacePatch& patch, const CheckConfig& config);

struct RescalingCase {
  CheckReport original;
  CheckReport rescaled;
  bool same_verdict = false;
  // max |t_new · φ(z) − t_old| over generators violating in both runs.
  double location_shift = 0.0;
  bool same_violators = true;
  // |worst_new − min_z φ(z)² m_z(t_z)| / max(|worst_new|, tol).
  double reweighted_discrepancy = 0.0;
};

struct RescalingReport {
  bool pass = true;
  std::vector<RescalingCase> cases;
};

// nc1_check before and after rescale_transverse for each φ; locations must
// agree to `location_tol` in the original parameter.
RescalingReport rescaling_invariance_check(const NullHypersurfacePatch& patch, const CheckConfig& config,
                                           const std::vector<TransverseFunction>& phis, double location_tol);

// Random null-connected pairs: both measures share random fiber masses;
// each fiber has density 1 + A sin(kt + c) w.r.t. e^{a} dt on a random
// sub-window of its ray. Total mass 1.
std::vector<MeasurePair> random_pairs(const NullHypersurfacePatch& patch, std::size_t count, unsigned long long seed,
                                      int refine = 2);

// Pair concentrated on one generator: Lebesgue-uniform windows around
// t_c ∓ delta whose Lebesgue widths are proportional to b at their centres.
MeasurePair thin_window_pair(const NullHypersurfacePatch& patch, std::size_t node, double t_c, double delta,
                             double width, double N);

struct ConverseProbe {
  CheckReport nce;
  double b_margin = 0.0;  // discrete b-concavity margin at the probed point
};

// Thin-window family around (node, t_c) for each delta; the b-margin uses
// the three points t_c − delta, t_c, t_c + delta.
ConverseProbe converse_probe(const NullHypersurfacePatch& patch, const CheckConfig& config, std::size_t node,
                             double t_c, const std::vector<double>& deltas, double width);

}  // namespace nullot
