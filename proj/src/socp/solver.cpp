#include "gridrecon/socp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>

#include "gridrecon/error.hpp"

namespace gridrecon::socp {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::max_iterations: return "max_iterations";
  }
  return "unknown";
}

namespace {

constexpr double kEqualityRhoFactor = 1e3;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

struct Solver::Impl {
  Index n = 0;
  Index m = 0;
  SparseMatrix mat;   // M, rows scaled
  SparseMatrix mat_t;
  SparseMatrix q;     // cost-scaled
  VectorXd c;         // cost-scaled
  VectorXd row_scale; // scale of each linear row (eq then in)
  double cost_scale = 1.0;
  ProxLayout layout;
  std::size_t n_groups = 0;
  std::vector<double> group_weight, norm_weight;
  VectorXd rho_vec;
  double rho = 0.1;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  VectorXd x, z, y;
  bool have_iterates = false;

  void set_weights(double lambda) {
    for (std::size_t g = 0; g < n_groups; ++g) layout.block_weight[g] = cost_scale * lambda * group_weight[g];
    for (std::size_t t = 0; t < norm_weight.size(); ++t) layout.block_weight[n_groups + t] = cost_scale * norm_weight[t];
  }

  void set_rho(double r, double sigma) {
    rho = std::clamp(r, kRhoMin, kRhoMax);
    rho_vec = VectorXd::Constant(m, rho);
    rho_vec.head(layout.n_eq).setConstant(rho * kEqualityRhoFactor);
    SparseMatrix k = q + SparseMatrix(mat_t * rho_vec.asDiagonal() * mat);
    for (Index i = 0; i < n; ++i) k.coeffRef(i, i) += sigma;
    ldlt.compute(k);
    if (ldlt.info() != Eigen::Success) throw ValidationError("solver: KKT factorization failed");
  }
};

Solver::Solver(GroupSparseProgram program, SolverSettings settings)
    : program_(std::move(program)), settings_(settings), impl_(std::make_unique<Impl>()) {
  program_.validate();
  auto& s = *impl_;
  const auto& p = program_;
  s.n = p.n;

  std::size_t block_rows = 0;
  for (const auto& g : p.groups) block_rows += g.coords.size();
  for (const auto& t : p.norms) block_rows += t.coords.size();
  const Index n_lin = p.a_eq.rows() + p.a_in.rows();
  s.m = n_lin + static_cast<Index>(block_rows) + 2 * static_cast<Index>(p.balls.size());

  // linear rows normalized to unit Euclidean norm
  const SparseMatrix lin = stack_rows(p.a_eq, p.a_in);
  VectorXd row_norm = VectorXd::Zero(n_lin);
  for (Index k = 0; k < lin.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(lin, k); it; ++it) row_norm(it.row()) += it.value() * it.value();
  s.row_scale.resize(n_lin);
  for (Index i = 0; i < n_lin; ++i) s.row_scale(i) = row_norm(i) > 0.0 ? 1.0 / std::sqrt(row_norm(i)) : 1.0;

  std::vector<Eigen::Triplet<double>> trips;
  for (Index k = 0; k < lin.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(lin, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value() * s.row_scale(it.row()));
  Index row = n_lin;
  s.layout.n_eq = p.a_eq.rows();
  s.layout.n_in = p.a_in.rows();
  s.layout.rhs.resize(n_lin);
  s.layout.rhs << p.b_eq, p.b_in;
  s.layout.rhs.array() *= s.row_scale.array();
  auto add_block = [&](const NormBlock& b) {
    s.layout.block_start.push_back(row);
    s.layout.block_size.push_back(static_cast<Index>(b.coords.size()));
    s.layout.block_weight.push_back(0.0);
    for (Index i : b.coords) trips.emplace_back(row++, i, 1.0);
  };
  for (const auto& g : p.groups) {
    add_block(g);
    s.group_weight.push_back(g.weight);
  }
  s.n_groups = p.groups.size();
  for (const auto& t : p.norms) {
    add_block(t);
    s.norm_weight.push_back(t.weight);
  }
  s.layout.ball_start = row;
  s.layout.ball_radius.resize(static_cast<Index>(p.balls.size()));
  for (std::size_t b = 0; b < p.balls.size(); ++b) {
    trips.emplace_back(row++, p.balls[b].re, 1.0);
    trips.emplace_back(row++, p.balls[b].im, 1.0);
    s.layout.ball_radius(static_cast<Index>(b)) = p.balls[b].radius;
  }
  s.mat.resize(s.m, s.n);
  s.mat.setFromTriplets(trips.begin(), trips.end());
  s.mat_t = s.mat.transpose();

  double mag = 0.0;
  for (Index k = 0; k < p.q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(p.q, k); it; ++it) mag = std::max(mag, std::abs(it.value()));
  mag = std::max(mag, inf_norm(p.c));
  s.cost_scale = mag > 0.0 ? 1.0 / mag : 1.0;
  s.q = s.cost_scale * p.q;
  s.c = s.cost_scale * p.c;
  s.set_weights(p.lambda);
  s.set_rho(settings_.kappa, settings_.sigma);
  reset();
}

Solver::~Solver() = default;
Solver::Solver(Solver&&) noexcept = default;
Solver& Solver::operator=(Solver&&) noexcept = default;

void Solver::reset() {
  impl_->x = VectorXd::Zero(impl_->n);
  impl_->z = VectorXd::Zero(impl_->m);
  impl_->y = VectorXd::Zero(impl_->m);
}

void Solver::set_linear_cost(const VectorXd& c) {
  if (c.size() != program_.n) throw ValidationError("set_linear_cost: length mismatch");
  program_.c = c;
  impl_->c = impl_->cost_scale * c;
}

void Solver::set_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be finite and non-negative");
  program_.lambda = lambda;
  impl_->set_weights(lambda);
}

void Solver::warm_start(const VectorXd& x) {
  if (x.size() != program_.n) throw ValidationError("warm_start: length mismatch");
  impl_->x = x;
  impl_->z = impl_->mat * x;
  apply_prox(impl_->layout, impl_->rho_vec, impl_->z, settings_.exec);
  impl_->y.setZero();
}

SolverResult Solver::solve() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& s = *impl_;
  const auto& st = settings_;
  SolverResult res;
  VectorXd x_tilde(s.n), z_tilde(s.m), z_hat(s.m), z_prev(s.m), y_prev(s.m), rhs(s.n);
  VectorXd mx(s.m), qx(s.n), mty(s.n);

  if (st.trace) *st.trace << std::setprecision(10);
  bool done = false;
  int it = 0;
  for (it = 1; it <= st.max_iters && !done; ++it) {
    y_prev = s.y;
    rhs = st.sigma * s.x - s.c + s.mat_t * (s.rho_vec.cwiseProduct(s.z) - s.y);
    x_tilde = s.ldlt.solve(rhs);
    z_tilde = s.mat * x_tilde;
    s.x = st.alpha * x_tilde + (1.0 - st.alpha) * s.x;
    z_hat = st.alpha * z_tilde + (1.0 - st.alpha) * s.z;
    z_prev = z_hat + s.y.cwiseQuotient(s.rho_vec);
    apply_prox(s.layout, s.rho_vec, z_prev, st.exec);
    s.y += s.rho_vec.cwiseProduct(z_hat - z_prev);
    s.z = z_prev;

    if (it % st.check_every != 0 && it != st.max_iters) continue;

    mx = s.mat * s.x;
    qx = s.q * s.x;
    mty = s.mat_t * s.y;
    const double r_p = (mx - s.z).norm();
    const double r_d = (qx + s.c + mty).norm();
    const double scale_p = std::max(mx.norm(), s.z.norm());
    const double scale_d = std::max({qx.norm(), mty.norm(), s.c.norm()});
    res.r_primal = r_p;
    res.r_dual = r_d;
    res.residuals.push_back({it, r_p, r_d});
    if (st.trace) *st.trace << it << ',' << r_p << ',' << r_d << ',' << program_.objective(s.x) << '\n';

    const double tol_p = st.tol_primal * (std::sqrt(static_cast<double>(s.m)) + scale_p);
    const double tol_d = st.tol_dual * (std::sqrt(static_cast<double>(s.n)) + scale_d);
    if (r_p <= tol_p && r_d <= tol_d && program_.max_relative_violation(s.x) <= st.tol_feasibility) {
      res.status = Status::optimal;
      done = true;
      break;
    }

    // primal infeasibility certificate from the dual increment
    const VectorXd dy = s.y - y_prev;
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 1e-12) {
      const double eps = st.eps_infeasible * dy_norm;
      bool cert = inf_norm(s.mat_t * dy) <= eps;
      double support = 0.0;
      const Index n_eq = s.layout.n_eq, n_lin = s.layout.n_eq + s.layout.n_in;
      for (Index i = 0; cert && i < n_eq; ++i) support += s.layout.rhs(i) * dy(i);
      for (Index i = n_eq; cert && i < n_lin; ++i) {
        if (dy(i) < -eps) cert = false;
        support += s.layout.rhs(i) * std::max(dy(i), 0.0);
      }
      if (cert && s.layout.ball_start > n_lin && inf_norm(dy.segment(n_lin, s.layout.ball_start - n_lin)) > eps)
        cert = false;
      for (Index b = 0; cert && b < s.layout.ball_radius.size(); ++b)
        support += s.layout.ball_radius(b) * dy.segment(s.layout.ball_start + 2 * b, 2).norm();
      if (cert && support < -eps) {
        res.status = Status::infeasible;
        done = true;
        break;
      }
    }

    if (st.adaptive_penalty && r_p > 0.0 && r_d > 0.0 && scale_p > 0.0 && scale_d > 0.0) {
      const double ratio = std::sqrt((r_p / scale_p) / (r_d / scale_d));
      const double proposed = std::clamp(s.rho * ratio, kRhoMin, kRhoMax);
      if (proposed > 5.0 * s.rho || proposed < 0.2 * s.rho) {
        s.set_rho(proposed, st.sigma);
        ++res.refactorizations;
      }
    }
  }
  res.iterations = std::min(it, st.max_iters);

  res.x = s.x;
  res.group_zero.assign(program_.groups.size(), false);
  for (std::size_t g = 0; g < program_.groups.size(); ++g) {
    const Index start = s.layout.block_start[g];
    const Index size = s.layout.block_size[g];
    double xg = 0.0;
    for (Index i : program_.groups[g].coords) xg += s.x(i) * s.x(i);
    if (s.z.segment(start, size).cwiseAbs().maxCoeff() == 0.0 && std::sqrt(xg) <= 1e-6 * (1.0 + s.x.norm())) {
      res.group_zero[g] = true;
      if (st.snap_groups)
        for (Index i : program_.groups[g].coords) res.x(i) = 0.0;
    }
  }
  const Index n_eq = s.layout.n_eq;
  const Index n_in = s.layout.n_in;
  res.dual_eq = s.y.head(n_eq).cwiseProduct(s.row_scale.head(n_eq)) / s.cost_scale;
  res.dual_in = s.y.segment(n_eq, n_in).cwiseProduct(s.row_scale.segment(n_eq, n_in)) / s.cost_scale;
  res.objective = program_.objective(res.x);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

SolverResult solve(const GroupSparseProgram& program, const SolverSettings& settings) {
  Solver solver(program, settings);
  return solver.solve();
}

}  // namespace gridrecon::socp
