#pragma once

#include <array>
#include <complex>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gridrecon/grid/phase.hpp"

namespace gridrecon::grid {

using NodeId = int;
using cd = std::complex<double>;

/// Dispatchable generator limits, per phase of the hosting node. SI units.
struct DgSpec {
  double p_min_w = 0.0;
  double p_max_w = 0.0;
  double q_min_var = 0.0;
  double q_max_var = 0.0;
  double cost_coeff = 0.0;  // currency per W

  /// Reactive output is pinned at zero.
  bool unity_power_factor() const { return q_min_var == 0.0 && q_max_var == 0.0; }
  friend bool operator==(const DgSpec&, const DgSpec&) = default;
};

enum class ResKind { pv, wind };

/// A renewable unit on one phase. Operates at unity power factor, so it only
/// contributes active power.
struct ResUnit {
  Phase phase = Phase::a;
  ResKind kind = ResKind::pv;
  double capacity_w = 0.0;
  double forecast_w = 0.0;
  friend bool operator==(const ResUnit&, const ResUnit&) = default;
};

struct NodeSpec {
  NodeId id = 0;
  PhaseSet phases;
  std::array<cd, 3> load{};  // forecast load per phase, W + j var
  std::optional<DgSpec> dg;
  std::vector<ResUnit> res;
  std::optional<std::array<double, 2>> xy_ft;  // planar coordinates, used for RES correlation

  bool hosts_load(Phase p) const { return load[index_of(p)] != cd{}; }
  bool hosts_res(Phase p) const;
  double res_forecast_w(Phase p) const;
  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct LineSpec {
  NodeId from = 0;
  NodeId to = 0;
  PhaseSet phases;
  Eigen::MatrixXcd z;  // ohms, |phases| x |phases|
  std::optional<Eigen::VectorXcd> y_shunt;  // siemens, diagonal of Y
  double i_max_a = 0.0;
  bool switchable = false;
  double weight = 1.0;

  friend bool operator==(const LineSpec& l, const LineSpec& r);
};

/// Multi-phase feeder. Immutable once validated; all quantities SI.
struct FeederModel {
  std::vector<NodeSpec> nodes;
  std::vector<LineSpec> lines;
  double nominal_voltage_v = 0.0;
  NodeId pcc = 1;
  double price_pcc = 0.0;  // currency per W
  std::array<double, 3> phase_angles = kBalancedAngles;

  /// Index into `nodes`; throws ValidationError for an unknown id.
  std::size_t node_index(NodeId id) const;
  const NodeSpec& node(NodeId id) const { return nodes[node_index(id)]; }
  std::size_t switchable_count() const;
  /// Sum over lines of |P_mn|.
  std::size_t line_phase_count() const;
  std::size_t dg_count() const;

  /// Checks every model invariant; throws ValidationError with a message naming
  /// the offending element.
  void validate() const;

  friend bool operator==(const FeederModel&, const FeederModel&) = default;
};

/// Reads the feeder document (JSON). Unknown keys are rejected; kW/kvar and
/// per-mile configurations are converted to SI absolute values. The result is
/// validated.
FeederModel parse_feeder(std::istream& source);
FeederModel parse_feeder_string(const std::string& text);
FeederModel load_feeder(const std::string& path);

/// Writes a document that parse_feeder accepts. Impedances are emitted as
/// explicit `r_ohm` / `x_ohm` matrices.
std::string serialize_feeder(const FeederModel& model);

}  // namespace gridrecon::grid
