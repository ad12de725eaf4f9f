#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "gridrecon/reconfig/centralized.hpp"

namespace gridrecon::reconfig {

/// "from-to" label of a model line.
std::string line_label(const FeederModel& model, std::size_t line);

/// JSON document describing one solution. Timing is left out so repeated runs
/// produce identical bytes.
std::string solution_json(const FeederModel& model, const ReconfigSolution& solution);

/// Matrix of per-line current magnitudes: one row per switchable line, one
/// column per solution. Infeasible or non-converged solutions print INF.
void write_current_matrix_csv(const FeederModel& model, const std::vector<ReconfigSolution>& solutions,
                              std::ostream& out);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

}  // namespace gridrecon::reconfig
