#include "gridrecon/socp/program.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridrecon/error.hpp"

namespace gridrecon::socp {

GroupSparseProgram GroupSparseProgram::zeros(Index n) {
  GroupSparseProgram p;
  p.n = n;
  p.q.resize(n, n);
  p.c = VectorXd::Zero(n);
  p.a_eq.resize(0, n);
  p.b_eq.resize(0);
  p.a_in.resize(0, n);
  p.b_in.resize(0);
  return p;
}

void GroupSparseProgram::validate() const {
  if (n < 1) throw ValidationError("program dimension must be positive");
  if (q.rows() != n || q.cols() != n) throw ValidationError("Q must be n x n");
  if (c.size() != n) throw ValidationError("c must have length n");
  if (a_eq.cols() != n || a_eq.rows() != b_eq.size()) throw ValidationError("equality block shape mismatch");
  if (a_in.cols() != n || a_in.rows() != b_in.size()) throw ValidationError("inequality block shape mismatch");
  if (!c.allFinite() || !b_eq.allFinite() || !b_in.allFinite()) throw ValidationError("non-finite program data");
  const SparseMatrix asym = q - SparseMatrix(q.transpose());
  if (asym.norm() > 1e-9 * (1.0 + q.norm())) throw ValidationError("Q is not symmetric");
  auto in_range = [this](Index i) { return i >= 0 && i < n; };
  for (std::size_t b = 0; b < balls.size(); ++b) {
    if (!in_range(balls[b].re) || !in_range(balls[b].im) || balls[b].re == balls[b].im)
      throw ValidationError("ball " + std::to_string(b) + " has invalid coordinates");
    if (!(balls[b].radius >= 0.0) || !std::isfinite(balls[b].radius))
      throw ValidationError("ball " + std::to_string(b) + " has an invalid radius");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be finite and non-negative");
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].coords.empty()) throw ValidationError("group " + std::to_string(g) + " is empty");
    if (!(groups[g].weight >= 0.0)) throw ValidationError("group " + std::to_string(g) + " has a negative weight");
    for (Index i : groups[g].coords) {
      if (!in_range(i)) throw ValidationError("group " + std::to_string(g) + " index out of range");
      if (used[static_cast<std::size_t>(i)]) throw ValidationError("groups overlap at coordinate " + std::to_string(i));
      used[static_cast<std::size_t>(i)] = 1;
    }
  }
  for (std::size_t t = 0; t < norms.size(); ++t) {
    if (norms[t].coords.empty()) throw ValidationError("norm block " + std::to_string(t) + " is empty");
    if (!(norms[t].weight >= 0.0)) throw ValidationError("norm block " + std::to_string(t) + " has a negative weight");
    for (Index i : norms[t].coords)
      if (!in_range(i)) throw ValidationError("norm block " + std::to_string(t) + " index out of range");
  }
}

namespace {
double block_norm(const VectorXd& x, const std::vector<Index>& coords) {
  double s = 0.0;
  for (Index i : coords) s += x(i) * x(i);
  return std::sqrt(s);
}
}  // namespace

double GroupSparseProgram::smooth_objective(const VectorXd& x) const { return 0.5 * x.dot(q * x) + c.dot(x); }

double GroupSparseProgram::penalty(const VectorXd& x) const {
  double s = 0.0;
  for (const auto& g : groups) s += lambda * g.weight * block_norm(x, g.coords);
  for (const auto& t : norms) s += t.weight * block_norm(x, t.coords);
  return s;
}

double GroupSparseProgram::max_violation(const VectorXd& x) const {
  double v = 0.0;
  if (a_eq.rows() > 0) v = std::max(v, (a_eq * x - b_eq).cwiseAbs().maxCoeff());
  if (a_in.rows() > 0) v = std::max(v, (a_in * x - b_in).maxCoeff());
  for (const auto& b : balls) v = std::max(v, std::hypot(x(b.re), x(b.im)) - b.radius);
  return v;
}

double GroupSparseProgram::max_relative_violation(const VectorXd& x) const {
  double v = 0.0;
  auto scan = [&](const SparseMatrix& a, const VectorXd& b, bool equality) {
    if (a.rows() == 0) return;
    VectorXd row_norm = VectorXd::Zero(a.rows());
    for (Index k = 0; k < a.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(a, k); it; ++it) row_norm(it.row()) += it.value() * it.value();
    const VectorXd r = a * x - b;
    for (Index i = 0; i < a.rows(); ++i) {
      const double excess = equality ? std::abs(r(i)) : r(i);
      double denom = std::sqrt(row_norm(i)) + std::abs(b(i));
      if (denom == 0.0) denom = 1.0;
      v = std::max(v, excess / denom);
    }
  };
  scan(a_eq, b_eq, true);
  scan(a_in, b_in, false);
  for (const auto& b : balls) v = std::max(v, (std::hypot(x(b.re), x(b.im)) - b.radius) / (1.0 + b.radius));
  return v;
}

SparseMatrix stack_rows(const SparseMatrix& top, const SparseMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw ValidationError("stack_rows: column mismatch");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(top.nonZeros() + bottom.nonZeros()));
  for (Index k = 0; k < top.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(top, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (Index k = 0; k < bottom.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(bottom, k); it; ++it) t.emplace_back(top.rows() + it.row(), it.col(), it.value());
  SparseMatrix out(top.rows() + bottom.rows(), top.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace gridrecon::socp
