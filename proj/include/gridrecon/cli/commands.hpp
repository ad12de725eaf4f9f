#pragma once

#include <ostream>
#include <string>

#include "gridrecon/cli/config.hpp"

namespace gridrecon::cli {

enum ExitCode : int { kOptimal = 0, kError = 1, kInfeasible = 2, kNotConverged = 3 };

/// Centralized pipeline: sample, assemble, solve, validate, report.
int cmd_solve(const RunConfig& config, std::ostream& log);
/// One centralized solve per lambda, reported as a current-magnitude matrix.
int cmd_sweep(const RunConfig& config, std::ostream& log);
/// Consensus ADMM over the configured partition, one run per kappa.
int cmd_distributed(const RunConfig& config, std::ostream& log);

/// Dispatches by name and maps every exception to kError with a message on
/// `log`. Output files are only written once the whole run succeeded.
int run_command(const std::string& command, const RunConfig& config, std::ostream& log);

}  // namespace gridrecon::cli
