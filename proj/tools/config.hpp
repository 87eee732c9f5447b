#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "nullot/nec.hpp"
#include "nullot/spacetime.hpp"

namespace nullot::cli {

inline constexpr const char* kSchemaVersion = "1.0.0";

// ParseError carries one "line L, column C: ..." entry; ValidationError
// carries every violation found.
class ConfigError : public Error {
 public:
  ConfigError(ErrorKind kind, std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct HypersurfaceConfig {
  std::string kind = "cone";  // cone | horizon | custom-section
  std::vector<int> grid;      // polar/azimuth counts, or box counts
  // cone
  std::vector<double> tip;
  double s_ref = 0.1;  // analysis slice, distance from the tip
  double t_max = 0.9;  // analysis window length past s_ref
  double s_max = 2.0;  // end of the light-cone curve
  // horizon: τ of the Schwarzschild slice, or t0 of the product slice
  double slice = 0.0;
  // horizon and custom-section
  std::vector<double> window{0.0, 1.0};
  std::vector<double> box_lower, box_upper;  // flat product, custom-section
  std::vector<std::string> x, L;             // custom-section, in u0..
};

struct Tolerances {
  double nc1 = 1e-7;
  double nce = 1e-6;
  double riccati = 1e-6;
  double lightcone = 1e-7;
  double tip = 1e-6;
  double hawking = 1e-8;
  double equality = 1e-6;
  double rigidity = 1e-7;
  double stability = 1e-6;
};

struct StabilityConfig {
  std::vector<double> center;  // conformal well centre, defaults to the tip
  double sign = 1.0;
  std::vector<double> eps{0.1, 0.025, 0.00625, 0.0015625, 0.0};
  std::string amplitude = "eps";
  std::vector<double> densities{64.0, 128.0, 256.0};
};

struct ScenarioConfig {
  std::string metric = "minkowski";
  ParamMap params;
  int dimension = 4;  // of the resolved metric
  HypersurfaceConfig hypersurface;
  std::string weight = "zero";
  double N = 4.0;
  std::vector<std::string> checks;
  Tolerances tolerances;
  double samples_per_unit = 128.0;
  int refinement = 1;
  VerdictPolicy policy = VerdictPolicy::Strict;
  std::uint64_t seed = 1;
  std::string report = "report.json";
  std::string csv_prefix;
  int nce_pairs = 20;
  int nce_points = 33;
  std::string t1 = "0";
  std::string t2 = "1";
  double T_future = 0.0;
  int lightcone_points = 33;
  StabilityConfig stability;
};

ScenarioConfig parse_config(const std::string& text);

// Normalized config with every default filled in.
nlohmann::json to_json(const ScenarioConfig& config);

const std::vector<std::string>& check_names();

// Variables of the weight DSL: chart coordinates x0.. and the affine s.
std::vector<std::string> weight_variables(int dimension);
// u0..u{k−1}.
std::vector<std::string> section_variables(int k);

}  // namespace nullot::cli
