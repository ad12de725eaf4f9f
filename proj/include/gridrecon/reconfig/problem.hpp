#pragma once

#include <map>
#include <optional>
#include <vector>

#include "gridrecon/grid/incidence.hpp"
#include "gridrecon/scenario/forecast.hpp"
#include "gridrecon/scenario/sampler.hpp"
#include "gridrecon/socp/program.hpp"

namespace gridrecon::reconfig {

using grid::FeederModel;
using grid::Phase;
using scenario::InjectionBounds;
using scenario::Site;
using socp::Index;
using socp::VectorXd;

/// Objective of the reconfiguration program:
///   scale * (loss_weight * loss_W + op_weight * (c1 * P_pcc + sum_n c_n P_Gn)) + sum_l scale * alpha_l ||xi_l||
/// `kind` switches one of the two terms off. Coefficients default to the model's
/// price_pcc and DgSpec::cost_coeff.
struct CostSpec {
  enum class Kind { loss, operation, weighted };
  Kind kind = Kind::weighted;
  double loss_weight = 1.0;
  double op_weight = 1.0;
  double scale = 1.0;
  std::optional<double> pcc_coeff;
  std::map<grid::NodeId, double> dg_coeffs;
  std::map<std::size_t, double> line_terms;  // model line index -> alpha

  double effective_loss_weight() const { return kind == Kind::operation ? 0.0 : loss_weight; }
  double effective_op_weight() const { return kind == Kind::loss ? 0.0 : op_weight; }
  void validate() const;
};

/// Which part of the feeder a program covers. The whole feeder for the
/// centralized solve; one area (plus its tie lines) in the distributed solve.
struct Scope {
  std::vector<std::size_t> nodes;            // KCL rows and generator variables
  std::vector<std::size_t> lines;            // current variables, in coordinate order
  std::vector<std::size_t> costed_lines;     // loss and line terms
  std::vector<std::size_t> penalized_lines;  // group-sparsity terms (switchable lines only)
  bool pcc_cost = true;                      // include c1 * P_pcc when the PCC is in `nodes`

  static Scope whole(const FeederModel& model);
};

struct DgVariable {
  std::size_t node = 0;
  Phase phase = Phase::a;
  Index p = -1;  // coordinate, in kW
  Index q = -1;  // coordinate in kvar, -1 at unity power factor
};

/// Inequality rows 2i and 2i+1 of the program belong to kcl_sites[i] (P then Q).
struct ReconfigProblem {
  socp::GroupSparseProgram program;
  grid::CurrentIndexing indexing;
  std::vector<DgVariable> dg;
  std::vector<std::size_t> group_lines;
  std::vector<Site> kcl_sites;
  std::vector<std::size_t> forced_open;
  Scope scope;
  CostSpec cost;
  double lambda = 0.0;
  Index xi_dim = 0;
};

constexpr double kKiloUnit = 1000.0;

struct AssembleOptions {
  std::optional<Scope> scope;
  std::vector<std::size_t> forced_open;  // lines pinned to zero current
};

/// Builds the scenario-approximated group-sparse program from the feeder and
/// the per-site minima of the sampled net injections.
ReconfigProblem assemble(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost, double lambda,
                         const AssembleOptions& options = {});

}  // namespace gridrecon::reconfig
