#pragma once

#include <chrono>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "gridrecon/parallel.hpp"
#include "gridrecon/socp/program.hpp"
#include "gridrecon/socp/prox.hpp"

namespace gridrecon::socp {

enum class Status { optimal, infeasible, max_iterations };

const char* to_string(Status s);

struct SolverSettings {
  /// Augmented-Lagrangian penalty; adapted during the solve when adaptive_penalty is set.
  double kappa = 1.0;
  double sigma = 1e-6;
  double alpha = 1.6;
  /// Residual tolerances: tol * sqrt(dimension) + tol * scale.
  double tol_primal = 1e-7;
  double tol_dual = 1e-7;
  /// Optimal also requires max_relative_violation below this.
  double tol_feasibility = 1e-7;
  double eps_infeasible = 1e-5;
  int max_iters = 50000;
  int check_every = 25;
  bool adaptive_penalty = true;
  /// Zero every group whose splitting copy is exactly zero at termination.
  bool snap_groups = true;
  Execution exec = Execution::parallel;
  /// When set, one line `iter,r_primal,r_dual,objective` per residual check.
  std::ostream* trace = nullptr;
};

struct ResidualSample {
  int iter = 0;
  double r_primal = 0.0;
  double r_dual = 0.0;
};

struct SolverResult {
  Status status = Status::max_iterations;
  VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  double r_primal = 0.0;
  double r_dual = 0.0;
  std::vector<ResidualSample> residuals;
  /// Per group: the block was thresholded to exactly zero.
  std::vector<bool> group_zero;
  VectorXd dual_eq;
  VectorXd dual_in;
  int refactorizations = 0;
  double seconds = 0.0;
};

/// Operator-splitting solver for GroupSparseProgram.
///
/// Every constraint and penalty acts on a copy z = M x of the variables; the
/// x-step solves one sparse quasi-definite system whose LDL^T factor is kept
/// between calls, so repeated solves with a changed linear cost or lambda
/// reuse it and start from the previous iterates.
class Solver {
 public:
  explicit Solver(GroupSparseProgram program, SolverSettings settings = {});
  ~Solver();
  Solver(Solver&&) noexcept;
  Solver& operator=(Solver&&) noexcept;

  SolverResult solve();

  /// Replaces c; keeps the factorization and the iterates.
  void set_linear_cost(const VectorXd& c);
  /// Replaces lambda; keeps the factorization and the iterates.
  void set_lambda(double lambda);
  /// Starts the next solve from x (copies and duals are recomputed from it).
  void warm_start(const VectorXd& x);
  void reset();

  const GroupSparseProgram& program() const { return program_; }
  SolverSettings& settings() { return settings_; }

 private:
  struct Impl;
  GroupSparseProgram program_;
  SolverSettings settings_;
  std::unique_ptr<Impl> impl_;
};

SolverResult solve(const GroupSparseProgram& program, const SolverSettings& settings = {});

}  // namespace gridrecon::socp
