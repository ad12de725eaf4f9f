#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gridrecon::socp {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Eigen::VectorXd;

/// Two coordinates constrained to a disk: (x_re, x_im) with norm <= radius.
struct Ball {
  Index re = 0;
  Index im = 0;
  double radius = 0.0;
};

/// A block of coordinates penalized by weight * ||x_block||_2.
struct NormBlock {
  std::vector<Index> coords;
  double weight = 1.0;
};

/// Convex program
///
///   minimize   1/2 x^T Q x + c^T x + lambda * sum_g w_g ||x_g|| + sum_t w_t ||x_t||
///   subject to A_eq x = b_eq,  A_in x <= b_in,  ||(x_re, x_im)|| <= r  per ball.
///
/// `groups` are the sparsity-inducing blocks scaled by lambda and must be
/// disjoint; `norms` are fixed extra penalties and may overlap anything.
struct GroupSparseProgram {
  Index n = 0;
  SparseMatrix q;
  VectorXd c;
  SparseMatrix a_eq;
  VectorXd b_eq;
  SparseMatrix a_in;
  VectorXd b_in;
  std::vector<Ball> balls;
  std::vector<NormBlock> groups;
  double lambda = 0.0;
  std::vector<NormBlock> norms;

  /// Empty program of dimension n with correctly shaped zero blocks.
  static GroupSparseProgram zeros(Index n);

  /// Checks shapes, symmetry of Q, index ranges, non-negative weights and
  /// radii and disjoint groups. Throws ValidationError.
  void validate() const;

  double smooth_objective(const VectorXd& x) const;
  double penalty(const VectorXd& x) const;
  double objective(const VectorXd& x) const { return smooth_objective(x) + penalty(x); }

  /// Largest violation over equalities, inequalities and balls (absolute).
  double max_violation(const VectorXd& x) const;
  /// Largest violation with each linear row divided by ||row|| + |rhs| and each
  /// ball by 1 + radius.
  double max_relative_violation(const VectorXd& x) const;
};

/// Appends rows to a sparse matrix with a fixed column count.
SparseMatrix stack_rows(const SparseMatrix& top, const SparseMatrix& bottom);

}  // namespace gridrecon::socp
