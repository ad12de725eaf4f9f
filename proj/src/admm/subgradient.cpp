#include "gridrecon/admm/subgradient.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gridrecon/error.hpp"

namespace gridrecon::admm {

AdmmResult subgradient_baseline(const FeederModel& model, const InjectionBounds& bounds, const CostSpec& cost,
                                double lambda, const AreaPartition& part, const SubgradientSettings& settings) {
  if (!(settings.step >= 0.0)) throw ValidationError("subgradient step must be non-negative");
  if (settings.max_iters < 1) throw ValidationError("max_iters must be positive");
  if (!part.ties.empty() && !(cost.effective_loss_weight() > 0.0))
    throw ValidationError("the subgradient baseline needs a positive loss weight on tie lines");
  const auto start = std::chrono::steady_clock::now();

  const auto whole = reconfig::assemble(model, bounds, cost, lambda);
  auto areas = detail::build_areas(model, bounds, cost, lambda, part, 0.0, settings.local);
  const std::size_t nt = part.ties.size();
  std::vector<TieUpdate> tie_update;
  std::vector<VectorXd> xa(nt), xb(nt), chi(nt), ga(nt), gb(nt);
  std::vector<VectorXd> avg_a(nt), avg_b(nt), avg_chi(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    tie_update.emplace_back(model, cost, lambda, part.ties[t].line, 0.0);
    const Index w = tie_update.back().width();
    for (auto* v : {&xa[t], &xb[t], &chi[t], &ga[t], &gb[t], &avg_a[t], &avg_b[t], &avg_chi[t]})
      *v = VectorXd::Zero(w);
  }
  std::vector<VectorXd> area_x(areas.size()), avg_x(areas.size());
  std::vector<socp::SolverResult> results(areas.size());
  AdmmResult res;

  for (int it = 1; it <= settings.max_iters; ++it) {
    std::vector<std::vector<VectorXd>> linear(areas.size());
    for (std::size_t s = 0; s < areas.size(); ++s)
      for (auto t : areas[s].ties()) linear[s].push_back(part.ties[t].first == areas[s].area() ? ga[t] : gb[t]);

    const auto n = static_cast<std::int64_t>(areas.size());
    std::vector<std::string> failure(areas.size());
#pragma omp parallel for schedule(dynamic) if (settings.exec == Execution::parallel)
    for (std::int64_t s = 0; s < n; ++s) {
      const auto i = static_cast<std::size_t>(s);
      try {
        results[i] = areas[i].solve(linear[i]);
      } catch (const std::exception& e) {
        failure[i] = e.what();
      }
    }
    for (const auto& f : failure)
      if (!f.empty()) throw ValidationError(f);
    for (std::size_t t = 0; t < nt; ++t) chi[t] = tie_update[t](ga[t] + gb[t], chi[t]);

    const double w_new = 1.0 / it;
    for (std::size_t s = 0; s < areas.size(); ++s) {
      area_x[s] = results[s].x;
      avg_x[s] = it == 1 ? area_x[s] : VectorXd((1.0 - w_new) * avg_x[s] + w_new * area_x[s]);
      for (std::size_t k = 0; k < areas[s].ties().size(); ++k) {
        const auto t = areas[s].ties()[k];
        (part.ties[t].first == areas[s].area() ? xa[t] : xb[t]) =
            area_x[s].segment(areas[s].tie_offset(k), areas[s].tie_width(k));
      }
    }
    for (std::size_t t = 0; t < nt; ++t) {
      ga[t] += settings.step * (xa[t] - chi[t]);
      gb[t] += settings.step * (xb[t] - chi[t]);
      avg_a[t] = (1.0 - w_new) * avg_a[t] + w_new * xa[t];
      avg_b[t] = (1.0 - w_new) * avg_b[t] + w_new * xb[t];
      avg_chi[t] = (1.0 - w_new) * avg_chi[t] + w_new * chi[t];
    }

    const VectorXd x = detail::merge(model, whole, areas, avg_x, part, avg_chi);
    const double objective = whole.program.objective(x);
    std::optional<double> dist;
    if (settings.reference)
      dist = (x.head(whole.xi_dim) - *settings.reference).norm() / std::max(settings.reference->norm(), 1e-300);
    double max_gap = 0.0, copy_gap = 0.0;
    for (std::size_t p = 0; p < part.pairs.size(); ++p) {
      double g2 = 0.0;
      for (auto t : part.pairs[p].ties) {
        g2 += (avg_a[t] - avg_b[t]).squaredNorm();
        copy_gap = std::max({copy_gap, (avg_a[t] - avg_chi[t]).norm(), (avg_b[t] - avg_chi[t]).norm()});
      }
      const double gap = std::sqrt(g2);
      max_gap = std::max(max_gap, gap);
      res.trace.push_back({it, part.pair_name(p), gap, objective, dist});
    }
    res.max_gap.push_back(max_gap);
    detail::log_exchange(model, part, it, res.messages);
    res.iterations = it;
    if (max_gap <= settings.tol && copy_gap <= settings.tol && it > 1) {
      res.converged = true;
      break;
    }
  }

  std::vector<bool> group_zero(whole.group_lines.size(), false);
  const VectorXd x = detail::merge(model, whole, areas, avg_x, part, avg_chi);
  for (std::size_t g = 0; g < whole.group_lines.size(); ++g)
    group_zero[g] = x.segment(whole.indexing.line_offset(whole.group_lines[g]),
                              whole.indexing.line_width(whole.group_lines[g]))
                        .isZero(0.0);
  res.solution = reconfig::interpret(model, bounds, whole, x, group_zero);
  res.solution.status = res.converged ? socp::Status::optimal : socp::Status::max_iterations;
  res.solution.iterations = res.iterations;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.solution.seconds = res.seconds;
  return res;
}

}  // namespace gridrecon::admm
