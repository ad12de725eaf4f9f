#include "gridrecon/scenario/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>

#include "gridrecon/error.hpp"

namespace gridrecon::scenario {

namespace {

std::mt19937_64 batch_engine(std::uint64_t seed, std::int64_t batch) {
  const auto b = static_cast<std::uint64_t>(batch);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

double truncated(std::mt19937_64& rng, std::normal_distribution<double>& n01, double lo, double hi) {
  for (;;) {
    const double z = n01(rng);
    if (z >= lo && z <= hi) return z;
  }
}

}  // namespace

ScenarioSampler::ScenarioSampler(const FeederModel& model, ForecastErrorSpec errors, CorrelationModel correlation)
    : errors_(std::move(errors)) {
  errors_.validate();
  const auto d = static_cast<Eigen::Index>(errors_.sites.size());
  nominal_p_ = Eigen::VectorXd::Zero(d);
  nominal_q_ = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& s = errors_.sites[i];
    const auto load = model.nodes[s.node].load[grid::index_of(s.phase)];
    nominal_p_(i) = -load.real();
    nominal_q_(i) = -load.imag();
  }
  for (const auto& r : errors_.res) {
    const auto it = std::find(errors_.sites.begin(), errors_.sites.end(), Site{r.node, r.phase});
    if (it == errors_.sites.end()) throw ValidationError("renewable unit outside the demand set");
    const auto col = static_cast<Eigen::Index>(it - errors_.sites.begin());
    res_site_.push_back(col);
    nominal_p_(col) += r.forecast_w;
  }

  const Eigen::MatrixXd c = correlation.correlation(errors_.res);
  if (c.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw ValidationError("correlation eigen-decomposition failed");
    if (eig.eigenvalues().minCoeff() < -1e-8) throw ValidationError("correlation matrix is not positive semidefinite");
    factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  const boost::math::normal_distribution<double> n01;
  z_lo_ = boost::math::quantile(n01, errors_.lower_pct / 100.0);
  z_hi_ = boost::math::quantile(n01, errors_.upper_pct / 100.0);
}

template <class Sink>
void ScenarioSampler::draw_batch(std::int64_t batch, std::int64_t first, std::int64_t last, std::uint64_t seed,
                                 Sink&& sink) const {
  auto rng = batch_engine(seed, batch);
  std::normal_distribution<double> n01;
  const auto d = static_cast<Eigen::Index>(errors_.sites.size());
  const auto nr = static_cast<Eigen::Index>(errors_.res.size());
  const auto n_eps = errors_.epsilon.rows();
  std::uniform_int_distribution<Eigen::Index> pick(0, std::max<Eigen::Index>(n_eps - 1, 0));
  Eigen::VectorXd w(nr), z(nr), p(d), q(d);
  for (std::int64_t k = first; k < last; ++k) {
    p = nominal_p_;
    q = nominal_q_;
    if (nr > 0) {
      for (;;) {
        for (Eigen::Index i = 0; i < nr; ++i) w(i) = n01(rng);
        z.noalias() = factor_ * w;
        if ((z.array() >= z_lo_).all() && (z.array() <= z_hi_).all()) break;
      }
      for (Eigen::Index i = 0; i < nr; ++i) p(res_site_[i]) += errors_.res[i].sigma_w * z(i);
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      p(i) -= errors_.load_sigma_p[i] * truncated(rng, n01, z_lo_, z_hi_);
      q(i) -= errors_.load_sigma_q[i] * truncated(rng, n01, z_lo_, z_hi_);
    }
    if (n_eps > 0) {
      const auto r = pick(rng);
      p += errors_.epsilon.row(r).head(d).transpose();
      q += errors_.epsilon.row(r).tail(d).transpose();
    }
    sink(k, p, q);
  }
}

ScenarioSet ScenarioSampler::sample(std::int64_t k, std::uint64_t seed, Execution exec) const {
  if (k < 1) throw std::domain_error("scenario count must be positive");
  const auto d = static_cast<Eigen::Index>(errors_.sites.size());
  ScenarioSet set;
  set.sites = errors_.sites;
  set.p.resize(k, d);
  set.q.resize(k, d);
  const std::int64_t batches = (k + kBatch - 1) / kBatch;
  auto store = [&set](std::int64_t row, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    set.p.row(row) = p.transpose();
    set.q.row(row) = q.transpose();
  };
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (std::int64_t b = 0; b < batches; ++b) draw_batch(b, b * kBatch, std::min(k, (b + 1) * kBatch), seed, store);
  return set;
}

InjectionBounds ScenarioSampler::sample_bounds(std::int64_t k, std::uint64_t seed, Execution exec) const {
  if (k < 1) throw std::domain_error("scenario count must be positive");
  const auto d = static_cast<Eigen::Index>(errors_.sites.size());
  const std::int64_t batches = (k + kBatch - 1) / kBatch;
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd min_p = Eigen::MatrixXd::Constant(d, batches, inf);
  Eigen::MatrixXd min_q = Eigen::MatrixXd::Constant(d, batches, inf);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (std::int64_t b = 0; b < batches; ++b) {
    auto keep = [&, b](std::int64_t, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
      min_p.col(b) = min_p.col(b).cwiseMin(p);
      min_q.col(b) = min_q.col(b).cwiseMin(q);
    };
    draw_batch(b, b * kBatch, std::min(k, (b + 1) * kBatch), seed, keep);
  }
  InjectionBounds out;
  out.sites = errors_.sites;
  out.p = min_p.rowwise().minCoeff();
  out.q = min_q.rowwise().minCoeff();
  return out;
}

InjectionBounds reduce_scenarios(const ScenarioSet& set, Execution exec) {
  if (set.count() < 1) throw std::domain_error("cannot reduce an empty scenario set");
  const auto d = set.p.cols();
  InjectionBounds out;
  out.sites = set.sites;
  out.p.resize(d);
  out.q.resize(d);
#pragma omp parallel for if (exec == Execution::parallel)
  for (Eigen::Index i = 0; i < d; ++i) {
    out.p(i) = set.p.col(i).minCoeff();
    out.q(i) = set.q.col(i).minCoeff();
  }
  return out;
}

void write_scenarios_csv(const ScenarioSet& set, const FeederModel& model, std::ostream& out) {
  out << "k,node,phase,p_w,q_var\n";
  out << std::setprecision(17);
  for (Eigen::Index k = 0; k < set.p.rows(); ++k)
    for (std::size_t i = 0; i < set.sites.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      out << k << ',' << model.nodes[set.sites[i].node].id << ',' << grid::label_of(set.sites[i].phase) << ','
          << set.p(k, c) << ',' << set.q(k, c) << '\n';
    }
}

}  // namespace gridrecon::scenario
