#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"

namespace nullot::cli {

enum ExitCode { kPass = 0, kCheckFailed = 1, kNumericalAbort = 2, kConfigError = 3 };

int exit_code_for(ErrorKind kind);

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  double tolerance_scale = 1.0;
};

struct RunResult {
  int exit_code = kPass;
  nlohmann::json report;
  // CSV name (relative to out_dir) and contents
  std::vector<std::pair<std::string, std::string>> artifacts;
};

// Executes the checks in declared order; the caller writes the results.
RunResult run(const ScenarioConfig& config, const RunOptions& options);

// Report for a config that never made it to run().
nlohmann::json config_error_report(const ConfigError& error);

// Report JSON and CSV artifacts under out_dir; creates the directory.
void write_outputs(const RunResult& result, const std::string& report_name, const std::filesystem::path& out_dir);

}  // namespace nullot::cli
