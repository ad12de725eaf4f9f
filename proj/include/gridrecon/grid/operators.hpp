#pragma once

#include <vector>

#include <Eigen/Core>

#include "gridrecon/grid/incidence.hpp"

namespace gridrecon::grid {

/// Symmetric PSD matrix L with xi^T L xi = sum over lines of a^T R a + b^T R b,
/// where a / b are the real / imaginary phase-current blocks and R = Re{Z}.
/// This is the physical I^2 R loss in watts. Lines not in `idx` contribute
/// nothing.
SparseMatrix loss_matrix(const FeederModel& model, const CurrentIndexing& idx);

/// Loss of a single line block [a; b] (length 2|P_mn|).
double line_loss(const LineSpec& line, const Eigen::Ref<const Eigen::VectorXd>& block);

/// Folds each line's shunt admittance into constant loads: half of every
/// diagonal element lands at each endpoint as S = |M_N|^2 conj(y / 2).
/// Returns a copy without shunts; the input is untouched.
FeederModel shunt_to_loads(const FeederModel& model);

/// Linearized current-power relation at one phase's nominal voltage
/// M_N e^{j angle}:
///   Phi maps [P; Q] to the (Re, Im) injected current;
///   phi^T iota and phibar^T iota recover P and Q.
struct InjectionMap {
  Eigen::Matrix2d big_phi;
  Eigen::Vector2d phi;
  Eigen::Vector2d phi_bar;
};

InjectionMap injection_map(double magnitude, double angle);

struct SiteInjectionMap {
  std::size_t node = 0;
  Phase phase = Phase::a;
  InjectionMap map;
};

/// One entry per (node, phase) of the model, in IncidenceOperator site order.
std::vector<SiteInjectionMap> nominal_injection_map(const FeederModel& model);

}  // namespace gridrecon::grid
