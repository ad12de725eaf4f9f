#include "gridrecon/admm/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "gridrecon/error.hpp"
#include "gridrecon/reconfig/report.hpp"

namespace gridrecon::admm {

using reconfig::ReconfigProblem;

using detail::DualVector;

AreaSubproblem::AreaSubproblem(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost,
                               double lambda, const AreaPartition& part, std::size_t area, double ridge,
                               const socp::SolverSettings& settings)
    : area_(area), name_(part.names.at(area)) {
  reconfig::Scope scope;
  scope.nodes = part.nodes.at(area);
  scope.lines = part.area_lines(model, area);
  scope.costed_lines = part.internal_lines(model, area);
  for (auto l : scope.costed_lines)
    if (model.lines[l].switchable) scope.penalized_lines.push_back(l);
  reconfig::AssembleOptions opt;
  opt.scope = scope;
  problem_ = reconfig::assemble(model, bounds, cost, lambda, opt);

  ties_ = part.area_ties(area);
  for (auto t : ties_) {
    offsets_.push_back(problem_.indexing.line_offset(part.ties[t].line));
    widths_.push_back(problem_.indexing.line_width(part.ties[t].line));
  }
  auto program = problem_.program;
  if (ridge > 0.0 && !ties_.empty()) {
    socp::SparseMatrix d(program.n, program.n);
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t k = 0; k < ties_.size(); ++k)
      for (Index i = 0; i < widths_[k]; ++i) trips.emplace_back(offsets_[k] + i, offsets_[k] + i, ridge);
    d.setFromTriplets(trips.begin(), trips.end());
    program.q = program.q + d;
  }
  base_c_ = program.c;
  solver_.emplace(std::move(program), settings);
}

socp::SolverResult AreaSubproblem::solve(const std::vector<VectorXd>& linear) {
  if (linear.size() != ties_.size()) throw ValidationError("one linear term per tie line is required");
  VectorXd c = base_c_;
  for (std::size_t k = 0; k < ties_.size(); ++k) c.segment(offsets_[k], widths_[k]) += linear[k];
  solver_->set_linear_cost(c);
  auto r = solver_->solve();
  if (r.status == socp::Status::infeasible) throw ValidationError("subproblem of area '" + name_ + "' is infeasible");
  return r;
}

TieUpdate::TieUpdate(const FeederModel& model, const CostSpec& cost, double lambda, std::size_t line, double ridge) {
  const auto& l = model.lines.at(line);
  const Index k = l.phases.size();
  const Eigen::MatrixXd r = 0.5 * (l.z.real() + l.z.real().transpose());
  const double lw = cost.scale * cost.effective_loss_weight();
  h_ = ridge * Eigen::MatrixXd::Identity(2 * k, 2 * k);
  h_.topLeftCorner(k, k) += 2.0 * lw * r;
  h_.bottomRightCorner(k, k) += 2.0 * lw * r;
  lambda_w_ = l.switchable ? lambda * l.weight : 0.0;
  for (Index i = 0; i < k; ++i) balls_.push_back({i, k + i, l.i_max_a});
}

VectorXd TieUpdate::operator()(const VectorXd& v, const VectorXd& warm) const {
  return socp::msto_quadratic(h_, v, lambda_w_, balls_, &warm).x;
}

namespace detail {

void dual_update(double kappa, const VectorXd& a, const VectorXd& b, const VectorXd& c, DualVector& gamma_a,
                 DualVector& gamma_b, DualVector& mu) {
  const long double third = static_cast<long double>(kappa) / 3.0L;
  const DualVector al = a.cast<long double>(), bl = b.cast<long double>(), cl = c.cast<long double>();
  gamma_a += third * (2.0L * al - bl - cl);
  gamma_b += third * (2.0L * bl - al - cl);
  mu += third * (al + bl - 2.0L * cl);
}

std::vector<AreaSubproblem> build_areas(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost,
                                        double lambda, const AreaPartition& part, double ridge,
                                        const socp::SolverSettings& settings) {
  for (const auto& t : part.ties)
    if (cost.line_terms.count(t.line))
      throw ValidationError("per-line cost terms on tie line " + reconfig::line_label(model, t.line) +
                            " are not supported by the distributed solver");
  std::vector<AreaSubproblem> areas;
  for (std::size_t a = 0; a < part.area_count(); ++a)
    if (!part.nodes[a].empty()) areas.emplace_back(model, bounds, cost, lambda, part, a, ridge, settings);
  return areas;
}

VectorXd merge(const FeederModel& model, const ReconfigProblem& whole, const std::vector<AreaSubproblem>& areas,
               const std::vector<VectorXd>& area_x, const AreaPartition& part, const std::vector<VectorXd>& chi) {
  VectorXd x = VectorXd::Zero(whole.program.n);
  for (std::size_t s = 0; s < areas.size(); ++s) {
    const auto& pr = areas[s].problem();
    for (auto l : part.internal_lines(model, areas[s].area()))
      x.segment(whole.indexing.line_offset(l), whole.indexing.line_width(l)) =
          area_x[s].segment(pr.indexing.line_offset(l), pr.indexing.line_width(l));
    for (const auto& v : pr.dg)
      for (const auto& w : whole.dg)
        if (w.node == v.node && w.phase == v.phase) {
          x(w.p) = area_x[s](v.p);
          if (v.q >= 0 && w.q >= 0) x(w.q) = area_x[s](v.q);
        }
  }
  for (std::size_t t = 0; t < part.ties.size(); ++t) {
    const auto l = part.ties[t].line;
    x.segment(whole.indexing.line_offset(l), whole.indexing.line_width(l)) = chi[t];
  }
  return x;
}

void log_exchange(const FeederModel& model, const AreaPartition& part, int iter, std::vector<Message>& log) {
  // uplink: each local controller reports its tie copies per neighbour; downlink: chi plus the neighbour copy
  for (int dir = 0; dir < 2; ++dir)
    for (std::size_t a = 0; a + 1 < part.area_count(); ++a)
      for (auto p : part.area_pairs(a)) {
        std::size_t width = 0;
        for (auto t : part.pairs[p].ties) width += 2 * model.lines[part.ties[t].line].phases.size();
        if (dir == 0)
          log.push_back({iter, part.names[a], AreaPartition::kManager, sizeof(double) * width});
        else
          log.push_back({iter, AreaPartition::kManager, part.names[a], 2 * sizeof(double) * width});
      }
}

}  // namespace detail

namespace {

/// Solves every area; serial or one OpenMP task per area. Results land in
/// per-area slots, so the outcome does not depend on scheduling.
std::vector<socp::SolverResult> solve_areas(std::vector<AreaSubproblem>& areas,
                                            const std::vector<std::vector<VectorXd>>& linear, Execution exec) {
  std::vector<socp::SolverResult> out(areas.size());
  std::vector<std::exception_ptr> errors(areas.size());
  const auto n = static_cast<std::int64_t>(areas.size());
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (std::int64_t s = 0; s < n; ++s) {
    try {
      out[static_cast<std::size_t>(s)] = areas[static_cast<std::size_t>(s)].solve(linear[static_cast<std::size_t>(s)]);
    } catch (...) {
      errors[static_cast<std::size_t>(s)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace

AdmmResult run_admm(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost, double lambda,
                    const AreaPartition& part, const AdmmSettings& settings) {
  if (!(settings.kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (settings.max_iters < 1) throw ValidationError("max_iters must be positive");
  const auto start = std::chrono::steady_clock::now();
  const double kappa = settings.kappa;
  const double third = kappa / 3.0;

  const auto whole = reconfig::assemble(model, bounds, cost, lambda);
  auto areas = detail::build_areas(model, bounds, cost, lambda, part, kappa, settings.local);
  const std::size_t nt = part.ties.size();

  std::vector<TieUpdate> tie_update;
  std::vector<VectorXd> xa(nt), xb(nt), chi(nt), z_prev(nt);
  // duals accumulate in extended precision so gamma_l + gamma_j - mu stays at round-off of the current scale
  std::vector<DualVector> ga(nt), gb(nt), mu(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    tie_update.emplace_back(model, cost, lambda, part.ties[t].line, kappa);
    const Index w = tie_update.back().width();
    for (auto* v : {&xa[t], &xb[t], &chi[t], &z_prev[t]}) *v = VectorXd::Zero(w);
    for (auto* v : {&ga[t], &gb[t], &mu[t]}) *v = DualVector::Zero(w);
  }
  // for every (area, local tie k): the tie index and whether the area holds the first copy
  auto is_first = [&](std::size_t s, std::size_t k) { return part.ties[areas[s].ties()[k]].first == areas[s].area(); };

  std::vector<VectorXd> area_x(areas.size());
  std::vector<socp::SolverResult> results;
  AdmmResult res;
  double ref_norm = 0.0;
  if (settings.reference) ref_norm = settings.reference->norm();

  for (int it = 1; it <= settings.max_iters; ++it) {
    // [local] each area sees its dual and the previous consensus sum
    std::vector<std::vector<VectorXd>> linear(areas.size());
    for (std::size_t s = 0; s < areas.size(); ++s)
      for (std::size_t k = 0; k < areas[s].ties().size(); ++k) {
        const auto t = areas[s].ties()[k];
        const VectorXd sum = xa[t] + xb[t] + chi[t];
        linear[s].push_back((is_first(s, k) ? ga[t] : gb[t]).cast<double>() - third * sum);
      }
    // [line] manager copies use the same iteration-i snapshot
    std::vector<VectorXd> chi_new(nt);
    for (std::size_t t = 0; t < nt; ++t)
      chi_new[t] = tie_update[t](mu[t].cast<double>() + third * (xa[t] + xb[t] + chi[t]), chi[t]);
    results = solve_areas(areas, linear, settings.exec);

    for (std::size_t s = 0; s < areas.size(); ++s) {
      area_x[s] = results[s].x;
      for (std::size_t k = 0; k < areas[s].ties().size(); ++k) {
        const auto t = areas[s].ties()[k];
        (is_first(s, k) ? xa[t] : xb[t]) = area_x[s].segment(areas[s].tie_offset(k), areas[s].tie_width(k));
      }
    }
    chi = std::move(chi_new);

    // [dual]
    double dual_sum = 0.0, copy_gap = 0.0, dz = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      detail::dual_update(kappa, xa[t], xb[t], chi[t], ga[t], gb[t], mu[t]);
      dual_sum = std::max(dual_sum, static_cast<double>((ga[t] + gb[t] - mu[t]).cwiseAbs().maxCoeff()));
      copy_gap = std::max({copy_gap, (xa[t] - chi[t]).norm(), (xb[t] - chi[t]).norm()});
      const VectorXd z = (xa[t] + xb[t] + chi[t]) / 3.0;
      dz = std::max(dz, (z - z_prev[t]).norm());
      z_prev[t] = z;
    }

    const VectorXd x = detail::merge(model, whole, areas, area_x, part, chi);
    const double objective = whole.program.objective(x);
    std::optional<double> dist;
    if (settings.reference)
      dist = (x.head(whole.xi_dim) - *settings.reference).norm() / std::max(ref_norm, 1e-300);

    double max_gap = 0.0;
    for (std::size_t p = 0; p < part.pairs.size(); ++p) {
      double g2 = 0.0;
      for (auto t : part.pairs[p].ties) g2 += (xa[t] - xb[t]).squaredNorm();
      const double gap = std::sqrt(g2);
      max_gap = std::max(max_gap, gap);
      res.trace.push_back({it, part.pair_name(p), gap, objective, dist});
    }
    res.max_gap.push_back(max_gap);
    res.dual_sum.push_back(dual_sum);

    detail::log_exchange(model, part, it, res.messages);
    if (settings.latency.count() > 0) std::this_thread::sleep_for(2 * settings.latency);

    res.iterations = it;
    if (max_gap <= settings.tol && copy_gap <= settings.tol && dz <= settings.tol) {
      res.converged = true;
      break;
    }
  }

  // zero groups: internal lines from their area's solver, tie lines from chi
  std::vector<bool> group_zero(whole.group_lines.size(), false);
  for (std::size_t g = 0; g < whole.group_lines.size(); ++g) {
    const auto l = whole.group_lines[g];
    const auto tie = std::find_if(part.ties.begin(), part.ties.end(), [l](const TieLine& t) { return t.line == l; });
    if (tie != part.ties.end()) {
      group_zero[g] = chi[static_cast<std::size_t>(tie - part.ties.begin())].isZero(0.0);
      continue;
    }
    for (std::size_t s = 0; s < areas.size(); ++s) {
      const auto& gl = areas[s].problem().group_lines;
      const auto pos = std::find(gl.begin(), gl.end(), l);
      if (pos != gl.end()) group_zero[g] = results[s].group_zero[static_cast<std::size_t>(pos - gl.begin())];
    }
  }
  const VectorXd x = detail::merge(model, whole, areas, area_x, part, chi);
  res.solution = reconfig::interpret(model, bounds, whole, x, group_zero);
  res.solution.status = res.converged ? socp::Status::optimal : socp::Status::max_iterations;
  res.solution.iterations = res.iterations;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.solution.seconds = res.seconds;
  return res;
}

int iterations_to_gap(const std::vector<double>& max_gap, double threshold) {
  int settled = -1;
  for (std::size_t i = 0; i < max_gap.size(); ++i) {
    if (max_gap[i] <= threshold) {
      if (settled < 0) settled = static_cast<int>(i) + 1;
    } else {
      settled = -1;
    }
  }
  return settled;
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "iter,tie_id,gap,objective,dist_to_central\n";
  for (const auto& r : trace) {
    out << r.iter << ',' << r.tie << ',' << reconfig::format_number(r.gap) << ','
        << reconfig::format_number(r.objective) << ',';
    if (r.dist_to_central) out << reconfig::format_number(*r.dist_to_central);
    out << '\n';
  }
}

void write_messages_csv(const std::vector<Message>& messages, std::ostream& out) {
  out << "iter,sender,receiver,bytes\n";
  for (const auto& m : messages) out << m.iter << ',' << m.sender << ',' << m.receiver << ',' << m.bytes << '\n';
}

}  // namespace gridrecon::admm
