// nullot check <config.json> [--out DIR] [--seed U64] [--threads K] [--tolerance-scale F]
//
// Exit codes: 0 all strict checks pass, 1 a check failed, 2 numerical abort,
// 3 config error. Wall time goes to stderr so reports stay byte-stable.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nullot/parallel.hpp"
#include "run.hpp"

namespace cli = nullot::cli;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic null energy condition checks on null hypersurfaces"};
  app.require_subcommand(1);
  auto* check = app.add_subcommand("check", "run the checks of one scenario config");
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  double tolerance_scale = 1.0;
  check->add_option("config", config_path, "scenario config (JSON)")->required();
  check->add_option("--out", out_dir, "output directory for the report and CSV curves");
  auto* seed_opt = check->add_option("--seed", seed, "rng seed, overrides the config");
  check->add_option("--threads", threads, "worker threads (default: NULLOT_THREADS, else all cores)")
      ->check(CLI::NonNegativeNumber);
  check->add_option("--tolerance-scale", tolerance_scale, "multiplies every tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kConfigError;
  }

  if (threads > 0) nullot::set_thread_count(threads);
  const auto start = std::chrono::steady_clock::now();

  cli::RunResult result;
  std::string report_name = "report.json";
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw cli::ConfigError(nullot::ErrorKind::ParseError, {"cannot read " + config_path});
    std::stringstream text;
    text << in.rdbuf();
    const cli::ScenarioConfig config = cli::parse_config(text.str());
    report_name = config.report;
    cli::RunOptions opt;
    if (seed_opt->count() > 0) opt.seed = seed;
    opt.tolerance_scale = tolerance_scale;
    result = cli::run(config, opt);
  } catch (const cli::ConfigError& e) {
    result.exit_code = cli::kConfigError;
    result.report = cli::config_error_report(e);
    for (const auto& v : e.violations()) std::cerr << "config: " << v << '\n';
  } catch (const nullot::Error& e) {
    result.exit_code = cli::exit_code_for(e.kind());
    result.report = cli::config_error_report(cli::ConfigError(e.kind(), {e.what()}));
    result.report["status"] = result.exit_code == cli::kConfigError ? "config-error" : "numerical-abort";
    result.report["exit_status"] = result.exit_code;
    std::cerr << e.what() << '\n';
  }

  try {
    cli::write_outputs(result, report_name, out_dir);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return cli::kNumericalAbort;
  }

  for (const auto& c : result.report["checks"])
    std::cerr << c["check"].get<std::string>() << ": " << c["verdict"].get<std::string>() << '\n';
  if (!result.report["error"].is_null()) std::cerr << "error: " << result.report["error"]["message"].get<std::string>() << '\n';
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "wall time %.3f s, exit %d\n", secs, result.exit_code);
  return result.exit_code;
}
