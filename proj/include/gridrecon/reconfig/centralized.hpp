#pragma once

#include <string>
#include <vector>

#include "gridrecon/parallel.hpp"
#include "gridrecon/reconfig/problem.hpp"
#include "gridrecon/socp/solver.hpp"

namespace gridrecon::reconfig {

struct DgSetpoint {
  std::size_t node = 0;
  Phase phase = Phase::a;
  double p_w = 0.0;
  double q_var = 0.0;
};

/// Net power leaving each demand site: phi^T A xi - P_G (W) and phibar^T A xi - Q_G (var).
struct SiteFlows {
  std::vector<Site> sites;
  VectorXd p;
  VectorXd q;
};

struct ReconfigSolution {
  socp::Status status = socp::Status::max_iterations;
  double lambda = 0.0;
  grid::CurrentIndexing indexing;
  VectorXd xi;  // A, coordinates per `indexing`
  std::vector<DgSetpoint> dg;
  std::vector<bool> line_open;       // per model line; only switchable lines can open
  std::vector<double> current_mag;   // per model line, sum over phases of |I| (A)
  double objective = 0.0;            // program objective, regularizer included
  double cost = 0.0;                 // objective without the group terms
  double loss_w = 0.0;
  double op_cost = 0.0;
  /// Slack of every KCL bound: bound - (phi^T A xi - P_G), per site (P) and (Q).
  std::vector<Site> margin_sites;
  VectorXd margin_p;
  VectorXd margin_q;
  double max_violation = 0.0;  // independent audit, normalized
  bool radial = false;
  int iterations = 0;
  double seconds = 0.0;

  std::size_t open_count() const;
};

/// Runs the conic solver on an assembled problem and maps the result back to
/// feeder quantities. Switchable lines whose group is exactly zero are open.
/// An optimal point failing the audit raises NumericalError.
ReconfigSolution solve_centralized(const FeederModel& model, const InjectionBounds& bounds,
                                   const ReconfigProblem& problem, const socp::SolverSettings& settings = {});

/// Maps a raw program vector to a solution (no solve). Used by the distributed solver.
ReconfigSolution interpret(const FeederModel& model, const InjectionBounds& bounds, const ReconfigProblem& problem,
                           const VectorXd& x, const std::vector<bool>& group_zero);

/// Unregularized program with the given switchable lines forced open.
ReconfigSolution solve_fixed_topology(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost,
                                      const std::vector<std::size_t>& open_lines,
                                      const socp::SolverSettings& settings = {});

/// One solution per lambda, solved in order with the factorization and
/// iterates carried over (warm) or from scratch (cold).
std::vector<ReconfigSolution> sweep_lambda(const FeederModel& model, const InjectionBounds& bounds,
                                           const CostSpec& cost, const std::vector<double>& lambdas,
                                           const socp::SolverSettings& settings = {}, bool warm = true);

/// Max normalized constraint violation of (xi, dg), recomputed from the model:
/// KCL bounds and zero-injection rows over ||row|| + |rhs|, disks over 1 + I_max,
/// generator boxes over 1 + |limit|, forced-open lines over 1 + I_max.
double audit(const FeederModel& model, const InjectionBounds& bounds, const ReconfigProblem& problem,
             const ReconfigSolution& solution);

/// Closed lines form a spanning tree of the nodes.
bool is_radial(const FeederModel& model, const std::vector<bool>& line_open);

/// The switchable lines a solution leaves open, as model line indices.
std::vector<std::size_t> open_lines(const FeederModel& model, const ReconfigSolution& solution);

struct LolReport {
  std::int64_t scenarios = 0;
  double joint_rate = 0.0;            // all KCL rows hold together
  std::vector<Site> sites;
  std::vector<double> marginal_rate;  // per site, both P and Q rows hold
  std::vector<Site> flagged;          // sites failing in at least one scenario
};

/// Draws k_out fresh scenarios and counts how often the fixed solution serves
/// every load. A row holds when its flow is at most the scenario injection
/// plus `tol_w`.
LolReport validate_lol(const FeederModel& model, const ReconfigSolution& solution,
                       const scenario::ScenarioSampler& sampler, std::int64_t k_out, std::uint64_t seed,
                       Execution exec = Execution::parallel, double tol_w = 1e-3);

SiteFlows site_flows(const FeederModel& model, const ReconfigSolution& solution);

}  // namespace gridrecon::reconfig
