#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gridrecon/grid/feeder.hpp"

namespace gridrecon::scenario {

using grid::FeederModel;
using grid::NodeId;
using grid::Phase;

/// A (node, phase) pair. `node` indexes FeederModel::nodes.
struct Site {
  std::size_t node = 0;
  Phase phase = Phase::a;
  friend bool operator==(const Site&, const Site&) = default;
};

/// The set D: phases hosting load, renewables or a dispatchable generator.
/// The PCC is excluded, its injection is free.
std::vector<Site> demand_sites(const FeederModel& model);
/// The complement of D among node phases (PCC excluded): zero-injection sites.
std::vector<Site> zero_injection_sites(const FeederModel& model);

struct ResError {
  std::size_t node = 0;
  Phase phase = Phase::a;
  grid::ResKind kind = grid::ResKind::pv;
  double forecast_w = 0.0;
  double sigma_w = 0.0;
};

/// Resolved forecast-error statistics, absolute units.
struct ForecastErrorSpec {
  std::vector<Site> sites;            // D, in model order
  std::vector<double> load_sigma_p;   // W, per site
  std::vector<double> load_sigma_q;   // var, per site
  std::vector<ResError> res;          // one entry per RES unit
  double lower_pct = 0.13;
  double upper_pct = 99.87;
  /// Optional empirical samples of the linearization error, rows = samples,
  /// columns = [P of every site, then Q of every site]. Empty means zero.
  Eigen::MatrixXd epsilon;

  void validate() const;
};

struct CorrelationModel {
  enum class Kind { independent, exponential_distance };
  Kind kind = Kind::independent;
  double decay_length = 1.0;
  /// Symmetric distances between RES units (same order as ForecastErrorSpec::res).
  Eigen::MatrixXd distance;

  /// Unit-diagonal correlation among RES errors. Units of different kinds are
  /// uncorrelated; same-kind units decay as exp(-d / decay_length).
  Eigen::MatrixXd correlation(const std::vector<ResError>& res) const;
};

/// Human-authored scenario document: sigma fractions, truncation and
/// correlation settings.
struct ScenarioSpecDocument {
  double pv_sigma_frac = 0.05;
  double wind_sigma_frac = 0.20;
  double load_sigma_p_frac = 0.05;
  double load_sigma_q_frac = 0.05;
  std::map<NodeId, std::pair<double, double>> load_overrides;  // node -> (p frac, q frac)
  double lower_pct = 0.13;
  double upper_pct = 99.87;
  CorrelationModel::Kind correlation = CorrelationModel::Kind::independent;
  double decay_length = 1.0;
  enum class Distance { automatic, euclidean, hop } distance = Distance::automatic;
  std::string epsilon_csv;  // resolved path, empty when absent
};

ScenarioSpecDocument parse_scenario_spec(const std::string& text, const std::string& base_dir = "");
ScenarioSpecDocument load_scenario_spec(const std::string& path);
std::string serialize_scenario_spec(const ScenarioSpecDocument& doc);

/// Hop distance between nodes over all lines (index by FeederModel::nodes).
Eigen::MatrixXd hop_distances(const FeederModel& model);

struct ResolvedSpec {
  ForecastErrorSpec errors;
  CorrelationModel correlation;
};

ResolvedSpec resolve(const FeederModel& model, const ScenarioSpecDocument& doc);

/// Reads an epsilon CSV whose header names columns `node:phase:p|q`.
/// Columns for sites outside D are an error; sites without a column get zeros.
Eigen::MatrixXd load_epsilon_csv(const std::string& path, const FeederModel& model, const std::vector<Site>& sites);

}  // namespace gridrecon::scenario
