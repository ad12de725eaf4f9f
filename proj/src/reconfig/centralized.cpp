#include "gridrecon/reconfig/centralized.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridrecon/error.hpp"
#include "gridrecon/grid/operators.hpp"

namespace gridrecon::reconfig {

namespace {

constexpr double kAuditTolerance = 1e-5;

/// Injected current (Re, Im) at every node phase and the number of line slots touching it.
struct Injections {
  std::vector<std::array<Eigen::Vector2d, 3>> current;
  std::vector<std::array<int, 3>> degree;
};

Injections injections(const FeederModel& model, const grid::CurrentIndexing& idx, const VectorXd& xi) {
  Injections inj;
  inj.current.assign(model.nodes.size(), {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()});
  inj.degree.assign(model.nodes.size(), {0, 0, 0});
  for (const auto& slot : idx.slots()) {
    const auto& line = model.lines[slot.line];
    const int p = grid::index_of(slot.phase);
    const Eigen::Vector2d i(xi(slot.re), xi(slot.im));
    const auto from = model.node_index(line.from), to = model.node_index(line.to);
    inj.current[from][p] += i;
    inj.current[to][p] -= i;
    ++inj.degree[from][p];
    ++inj.degree[to][p];
  }
  return inj;
}

double sum_mag(const FeederModel& model, const grid::CurrentIndexing& idx, const VectorXd& xi, std::size_t line) {
  double s = 0.0;
  for (Phase ph : model.lines[line].phases.members()) {
    const auto& slot = idx.slot(line, ph);
    s += std::hypot(xi(slot.re), xi(slot.im));
  }
  return s;
}

}  // namespace

std::size_t ReconfigSolution::open_count() const {
  return static_cast<std::size_t>(std::count(line_open.begin(), line_open.end(), true));
}

SiteFlows site_flows(const FeederModel& model, const ReconfigSolution& solution) {
  const auto inj = injections(model, solution.indexing, solution.xi);
  SiteFlows f;
  f.sites = scenario::demand_sites(model);
  f.p.resize(static_cast<Index>(f.sites.size()));
  f.q.resize(static_cast<Index>(f.sites.size()));
  for (std::size_t i = 0; i < f.sites.size(); ++i) {
    const auto& s = f.sites[i];
    const auto map = grid::injection_map(model.nominal_voltage_v, model.phase_angles[grid::index_of(s.phase)]);
    const auto& cur = inj.current[s.node][grid::index_of(s.phase)];
    double pg = 0.0, qg = 0.0;
    for (const auto& g : solution.dg)
      if (g.node == s.node && g.phase == s.phase) {
        pg = g.p_w;
        qg = g.q_var;
      }
    f.p(static_cast<Index>(i)) = map.phi.dot(cur) - pg;
    f.q(static_cast<Index>(i)) = map.phi_bar.dot(cur) - qg;
  }
  return f;
}

double audit(const FeederModel& model, const InjectionBounds& bounds, const ReconfigProblem& problem,
             const ReconfigSolution& sol) {
  const auto inj = injections(model, sol.indexing, sol.xi);
  std::vector<char> node_in(model.nodes.size(), 0);
  for (auto n : problem.scope.nodes) node_in[n] = 1;
  double worst = 0.0;
  const double m = model.nominal_voltage_v;

  for (std::size_t i = 0; i < bounds.sites.size(); ++i) {
    const auto& s = bounds.sites[i];
    if (!node_in[s.node]) continue;
    const int p = grid::index_of(s.phase);
    const auto map = grid::injection_map(m, model.phase_angles[p]);
    double pg = 0.0, qg = 0.0;
    bool has_dg = false;
    for (const auto& g : sol.dg)
      if (g.node == s.node && g.phase == s.phase) {
        pg = g.p_w;
        qg = g.q_var;
        has_dg = true;
      }
    const double row = std::sqrt(m * m * inj.degree[s.node][p] + (has_dg ? kKiloUnit * kKiloUnit : 0.0));
    const auto k = static_cast<Index>(i);
    const double vp = map.phi.dot(inj.current[s.node][p]) - pg - bounds.p(k);
    const double vq = map.phi_bar.dot(inj.current[s.node][p]) - qg - bounds.q(k);
    worst = std::max(worst, vp / (row + std::abs(bounds.p(k))));
    worst = std::max(worst, vq / (row + std::abs(bounds.q(k))));
  }
  for (const auto& s : scenario::zero_injection_sites(model)) {
    if (!node_in[s.node]) continue;
    const int p = grid::index_of(s.phase);
    const double row = std::max(1.0, std::sqrt(static_cast<double>(inj.degree[s.node][p])));
    worst = std::max(worst, inj.current[s.node][p].cwiseAbs().maxCoeff() / row);
  }
  for (const auto& slot : sol.indexing.slots()) {
    const double imax = model.lines[slot.line].i_max_a;
    worst = std::max(worst, (std::hypot(sol.xi(slot.re), sol.xi(slot.im)) - imax) / (1.0 + imax));
  }
  for (auto l : problem.forced_open) {
    if (!sol.indexing.has_line(l)) continue;
    const double imax = model.lines[l].i_max_a;
    for (Phase ph : model.lines[l].phases.members()) {
      const auto& slot = sol.indexing.slot(l, ph);
      worst = std::max(worst, std::hypot(sol.xi(slot.re), sol.xi(slot.im)) / (1.0 + imax));
    }
  }
  for (const auto& g : sol.dg) {
    const auto& dg = *model.nodes[g.node].dg;
    auto box = [&](double v, double lo, double hi) {
      worst = std::max(worst, (v - hi) / kKiloUnit / (1.0 + std::abs(hi) / kKiloUnit));
      worst = std::max(worst, (lo - v) / kKiloUnit / (1.0 + std::abs(lo) / kKiloUnit));
    };
    box(g.p_w, dg.p_min_w, dg.p_max_w);
    box(g.q_var, dg.q_min_var, dg.q_max_var);
  }
  return worst;
}

bool is_radial(const FeederModel& model, const std::vector<bool>& line_open) {
  const auto n = model.nodes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t closed = 0;
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    if (line_open[l]) continue;
    ++closed;
    const auto a = find(model.node_index(model.lines[l].from));
    const auto b = find(model.node_index(model.lines[l].to));
    if (a == b) return false;
    parent[a] = b;
  }
  return closed + 1 == n;
}

std::vector<std::size_t> open_lines(const FeederModel& model, const ReconfigSolution& solution) {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < model.lines.size(); ++l)
    if (solution.line_open[l]) out.push_back(l);
  return out;
}

ReconfigSolution interpret(const FeederModel& model, const InjectionBounds& bounds, const ReconfigProblem& problem,
                           const VectorXd& x, const std::vector<bool>& group_zero) {
  ReconfigSolution sol;
  sol.lambda = problem.lambda;
  sol.indexing = problem.indexing;
  sol.xi = x.head(problem.xi_dim);
  for (const auto& v : problem.dg)
    sol.dg.push_back({v.node, v.phase, x(v.p) * kKiloUnit, v.q >= 0 ? x(v.q) * kKiloUnit : 0.0});

  sol.line_open.assign(model.lines.size(), false);
  for (std::size_t g = 0; g < problem.group_lines.size(); ++g)
    if (group_zero.at(g)) sol.line_open[problem.group_lines[g]] = true;
  for (auto l : problem.forced_open) sol.line_open[l] = true;
  sol.current_mag.assign(model.lines.size(), 0.0);
  for (auto l : problem.indexing.lines()) sol.current_mag[l] = sum_mag(model, problem.indexing, sol.xi, l);

  const auto& prog = problem.program;
  sol.objective = prog.objective(x);
  double group_term = 0.0;
  for (const auto& g : prog.groups) {
    double s = 0.0;
    for (Index i : g.coords) s += x(i) * x(i);
    group_term += prog.lambda * g.weight * std::sqrt(s);
  }
  sol.cost = sol.objective - group_term;
  for (auto l : problem.indexing.lines())
    sol.loss_w += grid::line_loss(model.lines[l], sol.xi.segment(problem.indexing.line_offset(l),
                                                                    problem.indexing.line_width(l)));

  const auto flows = site_flows(model, sol);
  const auto pcc = model.node_index(model.pcc);
  const auto inj = injections(model, sol.indexing, sol.xi);
  double p_pcc = 0.0;
  for (Phase ph : model.nodes[pcc].phases.members()) {
    const auto map = grid::injection_map(model.nominal_voltage_v, model.phase_angles[grid::index_of(ph)]);
    p_pcc += map.phi.dot(inj.current[pcc][grid::index_of(ph)]);
  }
  sol.op_cost = problem.cost.pcc_coeff.value_or(model.price_pcc) * p_pcc;
  for (const auto& g : sol.dg) {
    const auto& node = model.nodes[g.node];
    const auto it = problem.cost.dg_coeffs.find(node.id);
    sol.op_cost += (it != problem.cost.dg_coeffs.end() ? it->second : node.dg->cost_coeff) * g.p_w;
  }

  sol.margin_sites = flows.sites;
  sol.margin_p = bounds.p - flows.p;
  sol.margin_q = bounds.q - flows.q;
  sol.radial = is_radial(model, sol.line_open);
  sol.max_violation = audit(model, bounds, problem, sol);
  return sol;
}

ReconfigSolution solve_centralized(const FeederModel& model, const InjectionBounds& bounds,
                                   const ReconfigProblem& problem, const socp::SolverSettings& settings) {
  const auto r = socp::solve(problem.program, settings);
  auto sol = interpret(model, bounds, problem, r.x, r.group_zero);
  sol.status = r.status;
  sol.iterations = r.iterations;
  sol.seconds = r.seconds;
  if (sol.status == socp::Status::optimal && sol.max_violation > kAuditTolerance)
    throw NumericalError("solution fails the feasibility audit (normalized violation " +
                         std::to_string(sol.max_violation) + ")");
  return sol;
}

ReconfigSolution solve_fixed_topology(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost,
                                      const std::vector<std::size_t>& open, const socp::SolverSettings& settings) {
  AssembleOptions opt;
  opt.forced_open = open;
  const auto problem = assemble(model, bounds, cost, 0.0, opt);
  return solve_centralized(model, bounds, problem, settings);
}

std::vector<ReconfigSolution> sweep_lambda(const FeederModel& model, const InjectionBounds& bounds,
                                           const CostSpec& cost, const std::vector<double>& lambdas,
                                           const socp::SolverSettings& settings, bool warm) {
  if (lambdas.empty()) throw ValidationError("lambda list is empty");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (lambdas[i] < lambdas[i - 1]) throw ValidationError("lambda list must be ascending");
  auto problem = assemble(model, bounds, cost, lambdas.front());
  socp::Solver solver(problem.program, settings);
  std::vector<ReconfigSolution> out;
  for (double lambda : lambdas) {
    if (!warm) solver.reset();
    solver.set_lambda(lambda);
    problem.lambda = lambda;
    problem.program.lambda = lambda;
    const auto r = solver.solve();
    auto sol = interpret(model, bounds, problem, r.x, r.group_zero);
    sol.status = r.status;
    sol.iterations = r.iterations;
    sol.seconds = r.seconds;
    if (sol.status == socp::Status::optimal && sol.max_violation > kAuditTolerance)
      throw NumericalError("solution at lambda " + std::to_string(lambda) + " fails the feasibility audit");
    out.push_back(std::move(sol));
  }
  return out;
}

LolReport validate_lol(const FeederModel& model, const ReconfigSolution& solution,
                       const scenario::ScenarioSampler& sampler, std::int64_t k_out, std::uint64_t seed,
                       Execution exec, double tol_w) {
  const auto flows = site_flows(model, solution);
  if (flows.sites != sampler.sites()) throw ValidationError("sampler and solution cover different demand sites");
  const auto set = sampler.sample(k_out, seed, exec);
  const auto d = static_cast<Index>(flows.sites.size());
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> ok(k_out, d);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (std::int64_t k = 0; k < k_out; ++k)
    for (Index i = 0; i < d; ++i)
      ok(k, i) = flows.p(i) <= set.p(k, i) + tol_w && flows.q(i) <= set.q(k, i) + tol_w;

  LolReport rep;
  rep.scenarios = k_out;
  rep.sites = flows.sites;
  std::int64_t joint = 0;
  for (std::int64_t k = 0; k < k_out; ++k) joint += (ok.row(k).array() != 0).all() ? 1 : 0;
  rep.joint_rate = static_cast<double>(joint) / static_cast<double>(k_out);
  for (Index i = 0; i < d; ++i) {
    const auto hits = (ok.col(i).array() != 0).count();
    rep.marginal_rate.push_back(static_cast<double>(hits) / static_cast<double>(k_out));
    if (hits < k_out) rep.flagged.push_back(flows.sites[static_cast<std::size_t>(i)]);
  }
  return rep;
}

}  // namespace gridrecon::reconfig
