#pragma once

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gridrecon/admm/partition.hpp"
#include "gridrecon/reconfig/centralized.hpp"

namespace gridrecon::admm {

using reconfig::CostSpec;
using reconfig::InjectionBounds;
using socp::Index;
using socp::VectorXd;

/// One area's slice of the reconfiguration program: its KCL rows and
/// generators, its internal lines (cost and sparsity groups) and a copy of
/// every incident tie line. Tie copies carry an extra ridge and a linear
/// term that the caller sets before each solve.
class AreaSubproblem {
 public:
  AreaSubproblem(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost, double lambda,
                 const AreaPartition& part, std::size_t area, double ridge, const socp::SolverSettings& settings);

  std::size_t area() const { return area_; }
  const reconfig::ReconfigProblem& problem() const { return problem_; }
  /// Tie indices of this area, in the order used by `solve`.
  const std::vector<std::size_t>& ties() const { return ties_; }
  /// Offset of a tie's block inside the area vector.
  Index tie_offset(std::size_t k) const { return offsets_[k]; }
  Index tie_width(std::size_t k) const { return widths_[k]; }

  /// Minimizes area cost + sum_k [ linear_k^T xi_k + (ridge/2) ||xi_k||^2 ] over the
  /// area's feasible set. Iterates are kept between calls. Throws
  /// ValidationError naming the area when the slice is infeasible.
  socp::SolverResult solve(const std::vector<VectorXd>& linear);

 private:
  std::size_t area_;
  std::string name_;
  reconfig::ReconfigProblem problem_;
  std::vector<std::size_t> ties_;
  std::vector<Index> offsets_, widths_;
  VectorXd base_c_;
  std::optional<socp::Solver> solver_;
};

/// Tie-line copy update: argmin C(chi) + lambda_w ||chi|| + (ridge/2) ||chi||^2 - v^T chi
/// subject to the per-phase ampacity disks, with C the scaled line loss.
class TieUpdate {
 public:
  TieUpdate(const FeederModel& model, const CostSpec& cost, double lambda, std::size_t line, double ridge);
  VectorXd operator()(const VectorXd& v, const VectorXd& warm) const;
  Index width() const { return h_.rows(); }

 private:
  Eigen::MatrixXd h_;
  double lambda_w_;
  std::vector<socp::Ball> balls_;
};

struct AdmmSettings {
  double kappa = 1.0;
  int max_iters = 20000;
  double tol = 1e-6;  // A, on consensus gaps and on the change of the consensus average
  Execution exec = Execution::parallel;
  socp::SolverSettings local;
  /// Centralized currents for the dist_to_central column; empty leaves it blank.
  std::optional<VectorXd> reference;
  /// Simulated one-way channel delay, paid once on the uplink and once on the
  /// downlink of every iteration. Affects timing only.
  std::chrono::microseconds latency{0};
};

struct TraceRow {
  int iter = 0;
  std::string tie;  // area pair, "A|B"
  double gap = 0.0;
  double objective = 0.0;
  std::optional<double> dist_to_central;
};

struct Message {
  int iter = 0;
  std::string sender;
  std::string receiver;
  std::size_t bytes = 0;
};

struct AdmmResult {
  bool converged = false;
  int iterations = 0;
  reconfig::ReconfigSolution solution;
  std::vector<TraceRow> trace;
  std::vector<Message> messages;
  std::vector<double> max_gap;       // per iteration, over area pairs
  std::vector<double> dual_sum;      // per iteration, max |gamma_l + gamma_j - mu|
  double seconds = 0.0;
};

/// Consensus ADMM over the partition. Every tie line has one copy per
/// adjacent area and a manager copy chi; area updates run concurrently,
/// followed by the tie updates and the dual updates.
AdmmResult run_admm(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost, double lambda,
                    const AreaPartition& part, const AdmmSettings& settings = {});

/// First iteration after which the max pair gap stays at or below `threshold`,
/// or -1 when the run never settles there.
int iterations_to_gap(const std::vector<double>& max_gap, double threshold);

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);
void write_messages_csv(const std::vector<Message>& messages, std::ostream& out);

namespace detail {

using DualVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

/// Multiplier step for one tie line with area copies a, b and manager copy c:
///   gamma_a += (kappa/3)(2a - b - c),  gamma_b += (kappa/3)(2b - a - c),  mu += (kappa/3)(a + b - 2c).
/// Accumulates in extended precision so gamma_a + gamma_b - mu stays at round-off.
void dual_update(double kappa, const VectorXd& a, const VectorXd& b, const VectorXd& c, DualVector& gamma_a,
                 DualVector& gamma_b, DualVector& mu);

/// Stacks the area solutions into whole-feeder program coordinates; tie lines
/// take the manager copy.
VectorXd merge(const FeederModel& model, const reconfig::ReconfigProblem& whole,
               const std::vector<AreaSubproblem>& areas, const std::vector<VectorXd>& area_x,
               const AreaPartition& part, const std::vector<VectorXd>& chi);

std::vector<AreaSubproblem> build_areas(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost,
                                        double lambda, const AreaPartition& part, double ridge,
                                        const socp::SolverSettings& settings);

/// Appends one iteration of the manager/controller exchange to `log`.
void log_exchange(const FeederModel& model, const AreaPartition& part, int iter, std::vector<Message>& log);

}  // namespace detail

}  // namespace gridrecon::admm
