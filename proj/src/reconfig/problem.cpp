#include "gridrecon/reconfig/problem.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gridrecon/error.hpp"
#include "gridrecon/grid/operators.hpp"

namespace gridrecon::reconfig {

using Triplet = Eigen::Triplet<double>;

void CostSpec::validate() const {
  for (double w : {loss_weight, op_weight, scale})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("cost weights must be finite and non-negative");
  if (!(scale > 0.0)) throw ValidationError("cost scale must be positive");
  if (effective_loss_weight() == 0.0 && effective_op_weight() == 0.0)
    throw ValidationError("cost weights cannot all be zero");
  if (pcc_coeff && !std::isfinite(*pcc_coeff)) throw ValidationError("pcc coefficient must be finite");
  for (const auto& [node, c] : dg_coeffs)
    if (!std::isfinite(c)) throw ValidationError("DG coefficient for node " + std::to_string(node) + " must be finite");
  for (const auto& [line, a] : line_terms)
    if (!(a >= 0.0)) throw ValidationError("line term for line " + std::to_string(line) + " must be non-negative");
}

Scope Scope::whole(const FeederModel& model) {
  Scope s;
  for (std::size_t n = 0; n < model.nodes.size(); ++n) s.nodes.push_back(n);
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    s.lines.push_back(l);
    s.costed_lines.push_back(l);
    if (model.lines[l].switchable) s.penalized_lines.push_back(l);
  }
  return s;
}

namespace {

/// Appends coefficient * (row pair combination w^T A_site) to `trips` on `row`.
void add_site_row(const grid::SparseMatrix& a, int site, const Eigen::Vector2d& w, Index row,
                  std::vector<Triplet>& trips) {
  const grid::SparseMatrix rows = a.middleRows(2 * site, 2);
  for (Index k = 0; k < rows.outerSize(); ++k)
    for (grid::SparseMatrix::InnerIterator it(rows, k); it; ++it) {
      const double v = w(it.row()) * it.value();
      if (v != 0.0) trips.emplace_back(row, it.col(), v);
    }
}

}  // namespace

ReconfigProblem assemble(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost, double lambda,
                         const AssembleOptions& options) {
  cost.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be finite and non-negative");
  const auto d_sites = scenario::demand_sites(model);
  if (d_sites.empty()) throw ValidationError("the feeder has no demand sites");
  if (bounds.sites != d_sites || bounds.p.size() != static_cast<Index>(d_sites.size()) ||
      bounds.q.size() != static_cast<Index>(d_sites.size()))
    throw ValidationError("injection bounds do not cover exactly the demand sites of the feeder");

  const Scope scope = options.scope ? *options.scope : Scope::whole(model);
  std::vector<char> node_in(model.nodes.size(), 0);
  for (auto n : scope.nodes) node_in.at(n) = 1;
  std::set<std::size_t> line_set(scope.lines.begin(), scope.lines.end());
  for (auto l : scope.costed_lines)
    if (!line_set.count(l)) throw ValidationError("costed line outside the scope");
  for (auto l : scope.penalized_lines) {
    if (!line_set.count(l)) throw ValidationError("penalized line outside the scope");
    if (!model.lines[l].switchable) throw ValidationError("only switchable lines carry a sparsity group");
  }
  for (auto l : options.forced_open) {
    if (l >= model.lines.size()) throw ValidationError("forced-open line index out of range");
    if (!model.lines[l].switchable) throw ValidationError("line " + std::to_string(model.lines[l].from) + "-" +
                                                          std::to_string(model.lines[l].to) + " is not switchable");
  }

  ReconfigProblem pr;
  pr.cost = cost;
  pr.lambda = lambda;
  pr.forced_open = options.forced_open;
  pr.scope = scope;
  pr.indexing = grid::CurrentIndexing(model, scope.lines);
  pr.xi_dim = pr.indexing.dimension();
  const grid::IncidenceOperator inc(model, pr.indexing);

  // generator variables follow the currents
  Index next = pr.xi_dim;
  for (auto n : scope.nodes) {
    const auto& node = model.nodes[n];
    if (!node.dg || node.id == model.pcc) continue;
    for (Phase ph : node.phases.members()) {
      DgVariable v{n, ph, next++, -1};
      if (!node.dg->unity_power_factor()) v.q = next++;
      pr.dg.push_back(v);
    }
  }
  const Index dim = next;
  auto& prog = pr.program;
  prog = socp::GroupSparseProgram::zeros(dim);

  const double lw = cost.scale * cost.effective_loss_weight();
  const double ow = cost.scale * cost.effective_op_weight();

  // loss: xi^T L xi restricted to costed lines, as 1/2 x^T (2 lw L) x
  if (lw > 0.0 && !scope.costed_lines.empty()) {
    std::set<std::size_t> costed(scope.costed_lines.begin(), scope.costed_lines.end());
    std::vector<Triplet> qt;
    for (auto l : scope.lines) {
      if (!costed.count(l)) continue;
      const auto& line = model.lines[l];
      const Index k = static_cast<Index>(line.phases.size());
      const Index off = pr.indexing.line_offset(l);
      const Eigen::MatrixXd r = 0.5 * (line.z.real() + line.z.real().transpose());
      for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) {
          if (r(i, j) == 0.0) continue;
          qt.emplace_back(off + i, off + j, 2.0 * lw * r(i, j));
          qt.emplace_back(off + k + i, off + k + j, 2.0 * lw * r(i, j));
        }
    }
    prog.q.setFromTriplets(qt.begin(), qt.end());
  }

  // operation cost: c1 * (power leaving the PCC) + sum c_n P_G
  if (ow > 0.0) {
    const double c1 = cost.pcc_coeff.value_or(model.price_pcc);
    const auto pcc = model.node_index(model.pcc);
    if (scope.pcc_cost && node_in[pcc] && c1 != 0.0) {
      for (Phase ph : model.nodes[pcc].phases.members()) {
        const int site = inc.site(pcc, ph);
        const auto map = grid::injection_map(model.nominal_voltage_v, model.phase_angles[grid::index_of(ph)]);
        const grid::SparseMatrix rows = inc.matrix().middleRows(2 * site, 2);
        for (Index k = 0; k < rows.outerSize(); ++k)
          for (grid::SparseMatrix::InnerIterator it(rows, k); it; ++it)
            prog.c(it.col()) += ow * c1 * map.phi(it.row()) * it.value();
      }
    }
    for (const auto& v : pr.dg) {
      const auto& node = model.nodes[v.node];
      const auto it = cost.dg_coeffs.find(node.id);
      const double cn = it != cost.dg_coeffs.end() ? it->second : node.dg->cost_coeff;
      prog.c(v.p) += ow * cn * kKiloUnit;
    }
  }

  for (const auto& [l, alpha] : cost.line_terms) {
    if (!line_set.count(l) || alpha == 0.0) continue;
    if (std::find(scope.costed_lines.begin(), scope.costed_lines.end(), l) == scope.costed_lines.end()) continue;
    socp::NormBlock b;
    for (Index i = 0; i < pr.indexing.line_width(l); ++i) b.coords.push_back(pr.indexing.line_offset(l) + i);
    b.weight = cost.scale * alpha;
    prog.norms.push_back(std::move(b));
  }

  // inequality rows: KCL bounds per demand site, then generator boxes
  std::vector<Triplet> in_t;
  std::vector<double> in_b;
  auto dg_of = [&pr](std::size_t node, Phase ph) -> const DgVariable* {
    for (const auto& v : pr.dg)
      if (v.node == node && v.phase == ph) return &v;
    return nullptr;
  };
  for (std::size_t i = 0; i < d_sites.size(); ++i) {
    const auto& s = d_sites[i];
    if (!node_in[s.node]) continue;
    const int site = inc.site(s.node, s.phase);
    const auto map = grid::injection_map(model.nominal_voltage_v, model.phase_angles[grid::index_of(s.phase)]);
    const DgVariable* g = dg_of(s.node, s.phase);
    const auto row_p = static_cast<Index>(in_b.size());
    add_site_row(inc.matrix(), site, map.phi, row_p, in_t);
    if (g) in_t.emplace_back(row_p, g->p, -kKiloUnit);
    in_b.push_back(bounds.p(static_cast<Index>(i)));
    const auto row_q = static_cast<Index>(in_b.size());
    add_site_row(inc.matrix(), site, map.phi_bar, row_q, in_t);
    if (g && g->q >= 0) in_t.emplace_back(row_q, g->q, -kKiloUnit);
    in_b.push_back(bounds.q(static_cast<Index>(i)));
    pr.kcl_sites.push_back(s);
  }
  for (const auto& v : pr.dg) {
    const auto& dg = *model.nodes[v.node].dg;
    auto box = [&](Index coord, double lo, double hi) {
      in_t.emplace_back(static_cast<Index>(in_b.size()), coord, 1.0);
      in_b.push_back(hi / kKiloUnit);
      in_t.emplace_back(static_cast<Index>(in_b.size()), coord, -1.0);
      in_b.push_back(-lo / kKiloUnit);
    };
    box(v.p, dg.p_min_w, dg.p_max_w);
    if (v.q >= 0) box(v.q, dg.q_min_var, dg.q_max_var);
  }
  prog.a_in.resize(static_cast<Index>(in_b.size()), dim);
  prog.a_in.setFromTriplets(in_t.begin(), in_t.end());
  prog.b_in = Eigen::Map<const VectorXd>(in_b.data(), static_cast<Index>(in_b.size()));

  // equality rows: zero injection off the demand set, then forced-open lines
  std::vector<Triplet> eq_t;
  Index eq_rows = 0;
  for (const auto& s : scenario::zero_injection_sites(model)) {
    if (!node_in[s.node]) continue;
    const int site = inc.site(s.node, s.phase);
    add_site_row(inc.matrix(), site, Eigen::Vector2d(1.0, 0.0), eq_rows++, eq_t);
    add_site_row(inc.matrix(), site, Eigen::Vector2d(0.0, 1.0), eq_rows++, eq_t);
  }
  for (auto l : options.forced_open) {
    if (!line_set.count(l)) continue;
    for (Index i = 0; i < pr.indexing.line_width(l); ++i) eq_t.emplace_back(eq_rows++, pr.indexing.line_offset(l) + i, 1.0);
  }
  prog.a_eq.resize(eq_rows, dim);
  prog.a_eq.setFromTriplets(eq_t.begin(), eq_t.end());
  prog.b_eq = VectorXd::Zero(eq_rows);

  for (const auto& slot : pr.indexing.slots()) prog.balls.push_back({slot.re, slot.im, model.lines[slot.line].i_max_a});

  for (auto l : scope.penalized_lines) {
    socp::NormBlock g;
    for (Index i = 0; i < pr.indexing.line_width(l); ++i) g.coords.push_back(pr.indexing.line_offset(l) + i);
    g.weight = model.lines[l].weight;
    prog.groups.push_back(std::move(g));
    pr.group_lines.push_back(l);
  }
  prog.lambda = lambda;
  prog.validate();
  return pr;
}

}  // namespace gridrecon::reconfig
