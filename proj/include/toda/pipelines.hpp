#pragma once

#include <filesystem>
#include <string>

#include "toda/bvp.hpp"
#include "toda/config.hpp"
#include "toda/cross_section.hpp"
#include "toda/error.hpp"
#include "toda/solver.hpp"

namespace toda {

enum class ExitCode : int {
  Ok = 0,
  Config = 2,
  NonConvergence = 3,
  InvariantViolation = 4,
  InvalidInput = 5,
  Internal = 6,
};

ExitCode exit_code_for(ErrorCode c);

struct RunOptions {
  std::filesystem::path out = "out";
  /// failed soft checks (max principle, mass, energy, ...) become exit 4
  bool strict = false;
};

/// Runs a subcommand and writes its artifacts plus report.json under
/// opts.out. report.json is written on failure too. Returns the exit code.
int run(const std::string& command, const RunConfig& cfg, const RunOptions& opts);

/// report.json for failures before a configuration exists.
int write_failure_report(const std::string& command, const std::filesystem::path& out, ErrorCode code,
                         const std::string& message);

CrossSection build_cross_section(const RunConfig& cfg);
/// phi_const plus the cos modes on a torus, or plus phi_modes on a surrogate.
std::vector<double> build_boundary(const RunConfig& cfg, const CrossSection& cs);
BvpSpec build_bvp(const RunConfig& cfg, const CrossSection& cs);
SolverOptions build_solver(const RunConfig& cfg);

}  // namespace toda
