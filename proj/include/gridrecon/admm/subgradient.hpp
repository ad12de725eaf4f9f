#pragma once

#include "gridrecon/admm/distributed.hpp"

namespace gridrecon::admm {

struct SubgradientSettings {
  double step = 0.1;
  int max_iters = 5000;
  double tol = 1e-6;
  Execution exec = Execution::parallel;
  socp::SolverSettings local;
  std::optional<VectorXd> reference;
};

/// Dual decomposition on the same partition: areas and the manager minimize
/// their Lagrangian terms without a proximal penalty, the multipliers of
/// xi_area = chi take a constant step along the constraint residual, and the
/// trace reports running averages of the primal iterates.
AdmmResult subgradient_baseline(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost,
                                double lambda, const AreaPartition& part, const SubgradientSettings& settings = {});

}  // namespace gridrecon::admm
