#include "gridrecon/socp/prox.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "gridrecon/error.hpp"

namespace gridrecon::socp {

VectorXd block_soft_threshold(const VectorXd& v, double t) {
  VectorXd out = v;
  block_soft_threshold_inplace(out, t);
  return out;
}

void block_soft_threshold_inplace(Eigen::Ref<VectorXd> v, double t) {
  const double nv = v.norm();
  if (nv <= t) {
    v.setZero();
    return;
  }
  v *= 1.0 - t / nv;
}

Eigen::Vector2d project_disk(const Eigen::Vector2d& v, double r) {
  const double nv = v.norm();
  return nv <= r ? v : Eigen::Vector2d(v * (r / nv));
}

VectorXd msto(const VectorXd& v, double a, double lambda, const std::vector<Ball>& balls) {
  if (!(a > 0.0)) throw ValidationError("msto: a must be positive");
  const Index n = v.size();
  std::vector<char> in_ball(static_cast<std::size_t>(n), 0);
  std::vector<double> ball_norm(balls.size());
  double free_sq = 0.0;
  double active_sq = 0.0;
  for (std::size_t b = 0; b < balls.size(); ++b) {
    in_ball[static_cast<std::size_t>(balls[b].re)] = 1;
    in_ball[static_cast<std::size_t>(balls[b].im)] = 1;
    ball_norm[b] = std::hypot(v(balls[b].re), v(balls[b].im));
    if (balls[b].radius > 0.0) active_sq += ball_norm[b] * ball_norm[b];
  }
  for (Index i = 0; i < n; ++i)
    if (!in_ball[static_cast<std::size_t>(i)]) free_sq += v(i) * v(i);

  VectorXd x = VectorXd::Zero(n);
  const double vn = std::sqrt(free_sq + active_sq);
  if (vn <= lambda) return x;

  // ||x(t)|| / t is strictly decreasing in t; the root of ||x(t)|| = t lies in (0, (||v|| - lambda) / a].
  auto ratio = [&](double t) {
    const double coef = 1.0 / (a * t + lambda);  // (1 / (a + lambda / t)) / t
    double s = free_sq * coef * coef;
    for (std::size_t b = 0; b < balls.size(); ++b) {
      if (balls[b].radius <= 0.0 || ball_norm[b] == 0.0) continue;
      const double m = std::min(ball_norm[b] * coef, balls[b].radius / t);
      s += m * m;
    }
    return std::sqrt(s);
  };
  double lo = 0.0;
  double hi = (vn - lambda) / a;
  if (ratio(hi) < 1.0) {
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ratio(mid) >= 1.0 ? lo : hi) = mid;
    }
  }
  const double t = hi;
  const double coef = t / (a * t + lambda);
  for (Index i = 0; i < n; ++i)
    if (!in_ball[static_cast<std::size_t>(i)]) x(i) = coef * v(i);
  for (std::size_t b = 0; b < balls.size(); ++b) {
    if (balls[b].radius <= 0.0 || ball_norm[b] == 0.0) continue;
    const double f = std::min(coef, balls[b].radius / ball_norm[b]);
    x(balls[b].re) = f * v(balls[b].re);
    x(balls[b].im) = f * v(balls[b].im);
  }
  return x;
}

QuadraticMstoResult msto_quadratic(const Eigen::MatrixXd& h, const VectorXd& v, double lambda,
                                   const std::vector<Ball>& balls, const VectorXd* warm, double tol, int max_iters) {
  const Index n = v.size();
  if (h.rows() != n || h.cols() != n) throw ValidationError("msto_quadratic: H shape mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double l = eig.eigenvalues().maxCoeff();
  QuadraticMstoResult r;
  if (!(l > 0.0)) throw ValidationError("msto_quadratic: H must have a positive eigenvalue");
  VectorXd x = warm ? *warm : VectorXd(VectorXd::Zero(n));
  VectorXd y = x, x_prev = x;
  double t = 1.0;
  for (r.iterations = 1; r.iterations <= max_iters; ++r.iterations) {
    const VectorXd grad = h * y - v;
    x = msto(l * y - grad, l, lambda, balls);
    const double step = (x - x_prev).norm();
    if (step <= tol * (1.0 + x.norm())) break;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // restart momentum when the iterate moves against it
    if ((y - x).dot(x - x_prev) > 0.0) {
      t = 1.0;
      y = x;
    } else {
      y = x + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
    }
    x_prev = x;
  }
  r.x = x;
  return r;
}

void apply_prox(const ProxLayout& layout, const VectorXd& rho, Eigen::Ref<VectorXd> z, Execution exec) {
  const Index n_eq = layout.n_eq;
  const Index n_lin = layout.n_eq + layout.n_in;
  for (Index i = 0; i < n_eq; ++i) z(i) = layout.rhs(i);
  for (Index i = n_eq; i < n_lin; ++i) z(i) = std::min(z(i), layout.rhs(i));

  const auto n_blocks = static_cast<Index>(layout.block_start.size());
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (Index b = 0; b < n_blocks; ++b) {
    const Index s = layout.block_start[static_cast<std::size_t>(b)];
    block_soft_threshold_inplace(z.segment(s, layout.block_size[static_cast<std::size_t>(b)]),
                                 layout.block_weight[static_cast<std::size_t>(b)] / rho(s));
  }

  const Index n_balls = layout.ball_radius.size();
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (Index b = 0; b < n_balls; ++b) {
    const Index s = layout.ball_start + 2 * b;
    const double r = layout.ball_radius(b);
    const double nv = std::hypot(z(s), z(s + 1));
    if (nv > r) {
      const double f = nv > 0.0 ? r / nv : 0.0;
      z(s) *= f;
      z(s + 1) *= f;
    }
  }
}

}  // namespace gridrecon::socp
