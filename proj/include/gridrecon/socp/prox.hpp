#pragma once

#include <vector>

#include <Eigen/Core>

#include "gridrecon/parallel.hpp"
#include "gridrecon/socp/program.hpp"

namespace gridrecon::socp {

/// Block soft threshold: max(0, 1 - t / ||v||) v. Exactly zero when ||v|| <= t.
VectorXd block_soft_threshold(const VectorXd& v, double t);
void block_soft_threshold_inplace(Eigen::Ref<VectorXd> v, double t);

/// Euclidean projection of (x, y) onto the disk of radius r.
Eigen::Vector2d project_disk(const Eigen::Vector2d& v, double r);

/// Multi-disk-constrained soft threshold:
///
///   argmin_x  a/2 ||x||^2 - v^T x + lambda ||x||   s.t.  ||(x_re, x_im)|| <= r per ball
///
/// with a > 0. Coordinates outside every ball are free. The solution is zero
/// when the norm of v over unpinned coordinates is at most lambda; otherwise
/// t = ||x|| is the root of a monotone scalar equation found by bisection.
VectorXd msto(const VectorXd& v, double a, double lambda, const std::vector<Ball>& balls);

struct QuadraticMstoResult {
  VectorXd x;
  int iterations = 0;
};

/// Same constraint set with a PSD quadratic term 1/2 x^T H x in place of
/// a/2 ||x||^2. Accelerated proximal gradient, using msto as the prox step.
QuadraticMstoResult msto_quadratic(const Eigen::MatrixXd& h, const VectorXd& v, double lambda,
                                   const std::vector<Ball>& balls, const VectorXd* warm = nullptr,
                                   double tol = 1e-13, int max_iters = 200000);

/// Row layout of the splitting copy z = M x used by the solver: equality rows,
/// inequality rows, penalty blocks and ball pairs, in this order.
struct ProxLayout {
  Index n_eq = 0;
  Index n_in = 0;
  VectorXd rhs;  // b_eq then b_in, in scaled units
  std::vector<Index> block_start;
  std::vector<Index> block_size;
  std::vector<double> block_weight;
  Index ball_start = 0;
  VectorXd ball_radius;

  Index rows() const { return ball_start + 2 * ball_radius.size(); }
};

/// In place: z <- argmin h(z) + sum_i rho_i / 2 (z_i - v_i)^2, one independent
/// piece per row range. `rho` must be constant inside every penalty block.
void apply_prox(const ProxLayout& layout, const VectorXd& rho, Eigen::Ref<VectorXd> z,
                Execution exec = Execution::parallel);

}  // namespace gridrecon::socp
