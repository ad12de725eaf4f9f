#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridrecon/reconfig/problem.hpp"
#include "gridrecon/socp/solver.hpp"

namespace gridrecon::cli {

/// alpha * sum_phi |I| on one line, named by its endpoints.
struct LineTermSpec {
  grid::NodeId from = 0;
  grid::NodeId to = 0;
  double alpha = 0.0;
};

/// Everything a run depends on. Paths are absolute once loaded.
struct RunConfig {
  std::string feeder;
  std::string scenario;   // empty: default forecast-error settings
  std::string partition;  // distributed runs only

  reconfig::CostSpec cost;  // line_terms are filled from `line_terms` against the model
  std::vector<LineTermSpec> line_terms;

  std::vector<double> lambdas{0.0};
  double rho = 0.01;
  double beta = 0.05;
  std::optional<std::int64_t> samples;  // empty: the sample-size bound
  std::uint64_t seed = 1;

  std::vector<double> kappas{1.0};
  int admm_max_iters = 20000;
  double admm_tol = 1e-6;
  bool check_central = false;
  std::string baseline;  // "" or "subgradient"
  double baseline_step = 0.1;
  int baseline_max_iters = 5000;

  int solver_max_iters = 50000;
  double solver_tol = 1e-7;
  double solver_penalty = 1.0;

  std::int64_t validation_scenarios = 10000;
  std::optional<std::uint64_t> validation_seed;  // empty: seed + 1
  bool parallel = true;

  std::string out;
  /// Digests recorded by a manifest; a mismatch with the current inputs is an error.
  std::map<std::string, std::string> expected_digests;

  socp::SolverSettings solver_settings() const;
  std::uint64_t effective_validation_seed() const { return validation_seed.value_or(seed + 1); }
  void validate() const;
  /// Throws ValidationError when an input differs from the recorded digest.
  void check_digests() const;
};

/// Reads a run configuration (or a manifest written by a previous run);
/// relative paths resolve against `base_dir`. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& text, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);

/// The manifest: every resolved parameter, absolute input paths and input
/// digests. Feeding it back through load_run_config repeats the run.
std::string manifest_json(const RunConfig& config, const std::string& command);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

}  // namespace gridrecon::cli
