#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fracobs/config.hpp"
#include "fracobs/solver.hpp"

namespace fracobs {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNonConvergence = 3, kExitCheckFailure = 4 };

/// Name of the environment variable that overrides the configured output directory.
inline constexpr const char* kOutputDirEnv = "FRACOBS_OUTPUT_DIR";

/// Grid, obstacle samples (with analytic Laplacian for expressions) and Dirichlet data.
ObstacleProblem<double> build_problem(const RunConfig& cfg);

/// Directory a run writes to: the environment override if set, else the config value.
std::filesystem::path resolve_output_dir(const RunConfig& cfg);

/// solve -> complementarity -> contact set -> per-point analysis; writes
/// solution.csv, frequency_<k>.csv and report.json into `out_dir`.
int run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// `run <config>`: loads the file and maps errors to exit codes.
int run_command(const std::filesystem::path& config_path, std::ostream& log);

/// `sweep --a <list> <config>`: one run per a in <out>/a_<value>, merged into <out>/sweep.json.
int sweep_command(const std::filesystem::path& config_path, const std::vector<double>& a_values, std::ostream& log);

struct VerifyRow {
  std::string check;
  double a{0};
  double value{0};
  std::string threshold;
  bool pass{false};
  std::string detail;
};

struct VerifyOptions {
  int quad_points{4096};
  std::vector<double> a_values{-0.5, 0.0, 0.5};
};

std::vector<VerifyRow> verify_battery(const VerifyOptions& opts);

/// `verify`: prints the battery as a table; 0 iff every row passes.
int verify_command(const VerifyOptions& opts, std::ostream& out);

}  // namespace fracobs
