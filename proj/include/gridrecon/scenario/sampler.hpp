#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "gridrecon/parallel.hpp"
#include "gridrecon/scenario/forecast.hpp"

namespace gridrecon::scenario {

/// K realizations of the net injection (generation minus load, DG excluded)
/// at every demand site. Row k is one scenario.
struct ScenarioSet {
  std::vector<Site> sites;
  Eigen::MatrixXd p;  // K x |D|, W
  Eigen::MatrixXd q;  // K x |D|, var
  std::int64_t count() const { return p.rows(); }
};

/// Worst case over the scenario set: the smallest net injection per site.
/// The KCL rows of the reconfiguration program are bounded by these values.
struct InjectionBounds {
  std::vector<Site> sites;
  Eigen::VectorXd p;
  Eigen::VectorXd q;
};

/// Draws truncated-Gaussian forecast errors around the nominal injections.
///
/// Renewable errors are jointly Gaussian with the model's correlation; the
/// whole correlated vector is redrawn until every component lies inside the
/// truncation percentiles. Load errors are independent truncated normals.
/// When epsilon samples are present, each scenario adds one row picked
/// uniformly at random.
///
/// Scenarios are generated in fixed batches, each with its own engine seeded
/// from (seed, batch), so the output does not depend on the thread count.
class ScenarioSampler {
 public:
  static constexpr std::int64_t kBatch = 256;

  ScenarioSampler(const FeederModel& model, ForecastErrorSpec errors, CorrelationModel correlation);

  ScenarioSet sample(std::int64_t k, std::uint64_t seed, Execution exec = Execution::parallel) const;
  /// Same values as reduce_scenarios(sample(k, seed)) without storing K rows.
  InjectionBounds sample_bounds(std::int64_t k, std::uint64_t seed, Execution exec = Execution::parallel) const;

  const std::vector<Site>& sites() const { return errors_.sites; }
  /// Net injection with every error at zero.
  const Eigen::VectorXd& nominal_p() const { return nominal_p_; }
  const Eigen::VectorXd& nominal_q() const { return nominal_q_; }
  /// Factor F with F F^T = correlation, from the eigen-decomposition.
  const Eigen::MatrixXd& correlation_factor() const { return factor_; }
  double z_lower() const { return z_lo_; }
  double z_upper() const { return z_hi_; }

 private:
  template <class Sink>
  void draw_batch(std::int64_t batch, std::int64_t first, std::int64_t last, std::uint64_t seed, Sink&& sink) const;

  ForecastErrorSpec errors_;
  Eigen::VectorXd nominal_p_, nominal_q_;
  Eigen::MatrixXd factor_;
  std::vector<Eigen::Index> res_site_;  // demand-site column of each RES unit
  double z_lo_ = 0.0, z_hi_ = 0.0;
};

InjectionBounds reduce_scenarios(const ScenarioSet& set, Execution exec = Execution::parallel);

/// Long-format export: header `k,node,phase,p_w,q_var`, one line per
/// (scenario, site).
void write_scenarios_csv(const ScenarioSet& set, const FeederModel& model, std::ostream& out);

}  // namespace gridrecon::scenario
