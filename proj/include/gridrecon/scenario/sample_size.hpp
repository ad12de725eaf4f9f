#pragma once

#include <cstdint>

namespace gridrecon::scenario {

/// Scenario count K such that the sampled convex program's optimum violates
/// the chance constraint Pr{.} >= 1 - rho with probability at most beta:
///   ceil(2/rho ln(1/beta) + 2m + (2m/rho) ln(2/rho)),
/// with m the number of decision variables. Throws std::domain_error when rho
/// or beta lie outside (0, 1) or m < 1.
std::int64_t min_sample_size(double rho, double beta, std::int64_t m);

/// Same bound specialised to the reconfiguration program, whose decision
/// vector has real dimension m = 2 (n_dg + line_phase_count).
std::int64_t min_sample_size_reconfig(double rho, double beta, std::int64_t n_dg, std::int64_t line_phase_count);

}  // namespace gridrecon::scenario
