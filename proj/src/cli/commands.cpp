#include "gridrecon/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridrecon/admm/distributed.hpp"
#include "gridrecon/admm/subgradient.hpp"
#include "gridrecon/error.hpp"
#include "gridrecon/grid/feeder.hpp"
#include "gridrecon/reconfig/report.hpp"
#include "gridrecon/scenario/sample_size.hpp"

namespace gridrecon::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// Output files held in memory until the run is complete.
class Bundle {
 public:
  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void write(const std::string& dir) const {
    if (dir.empty()) throw ValidationError("no output directory configured (use --out)");
    fs::create_directories(dir);
    for (const auto& [name, content] : files_) {
      std::ofstream out(fs::path(dir) / name, std::ios::binary);
      out << content;
      if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

struct Pipeline {
  grid::FeederModel model;
  std::optional<scenario::ScenarioSampler> sampler;
  scenario::InjectionBounds bounds;
  reconfig::CostSpec cost;
  std::int64_t samples = 0;
  std::int64_t samples_bound = 0;
};

Pipeline prepare(const RunConfig& c, std::ostream& log) {
  c.validate();
  c.check_digests();
  Pipeline p;
  p.model = grid::load_feeder(c.feeder);
  const auto doc = c.scenario.empty() ? scenario::ScenarioSpecDocument{} : scenario::load_scenario_spec(c.scenario);
  auto resolved = scenario::resolve(p.model, doc);
  p.sampler.emplace(p.model, std::move(resolved.errors), std::move(resolved.correlation));
  p.samples_bound = scenario::min_sample_size_reconfig(c.rho, c.beta, static_cast<std::int64_t>(p.model.dg_count()),
                                                  static_cast<std::int64_t>(p.model.line_phase_count()));
  p.samples = c.samples.value_or(p.samples_bound);
  log << "scenarios: K = " << p.samples << " (bound " << p.samples_bound << " at rho=" << c.rho
      << ", beta=" << c.beta << ")\n";
  const auto exec = c.parallel ? Execution::parallel : Execution::serial;
  p.bounds = p.sampler->sample_bounds(p.samples, c.seed, exec);

  p.cost = c.cost;
  for (const auto& t : c.line_terms) {
    bool found = false;
    for (std::size_t l = 0; l < p.model.lines.size(); ++l)
      if (p.model.lines[l].from == t.from && p.model.lines[l].to == t.to) {
        p.cost.line_terms[l] = t.alpha;
        found = true;
      }
    if (!found)
      throw ValidationError("cost line term names unknown line (" + std::to_string(t.from) + "," +
                            std::to_string(t.to) + ")");
  }
  return p;
}

ordered_json sample_info(const RunConfig& c, const Pipeline& p) {
  return {{"samples", p.samples},
          {"samples_auto", !c.samples.has_value()},
          {"samples_bound", p.samples_bound},
          {"rho", c.rho},
          {"beta", c.beta},
          {"n_dg", p.model.dg_count()},
          {"line_phase_count", p.model.line_phase_count()},
          {"seed", c.seed}};
}

ordered_json site_json(const grid::FeederModel& model, const scenario::Site& s) {
  return {{"node", model.nodes[s.node].id}, {"phase", std::string(1, grid::label_of(s.phase))}};
}

ordered_json open_list(const grid::FeederModel& model, const reconfig::ReconfigSolution& s) {
  auto arr = ordered_json::array();
  for (auto l : reconfig::open_lines(model, s)) arr.push_back(reconfig::line_label(model, l));
  return arr;
}

ordered_json validation_json(const RunConfig& c, const Pipeline& p, const reconfig::ReconfigSolution& sol) {
  const auto exec = c.parallel ? Execution::parallel : Execution::serial;
  const auto rep =
      reconfig::validate_lol(p.model, sol, *p.sampler, c.validation_scenarios, c.effective_validation_seed(), exec);
  ordered_json v;
  v["scenarios"] = rep.scenarios;
  v["seed"] = c.effective_validation_seed();
  v["joint_rate"] = rep.joint_rate;
  auto marg = ordered_json::array();
  for (std::size_t i = 0; i < rep.sites.size(); ++i) {
    auto e = site_json(p.model, rep.sites[i]);
    e["rate"] = rep.marginal_rate[i];
    marg.push_back(e);
  }
  v["marginal"] = marg;
  auto flagged = ordered_json::array();
  for (const auto& s : rep.flagged) flagged.push_back(site_json(p.model, s));
  v["flagged"] = flagged;
  return v;
}

int exit_for(socp::Status s) {
  switch (s) {
    case socp::Status::optimal: return kOptimal;
    case socp::Status::infeasible: return kInfeasible;
    case socp::Status::max_iterations: return kNotConverged;
  }
  return kError;
}

std::string kappa_suffix(const RunConfig& c, double kappa) {
  return c.kappas.size() == 1 ? "" : "_kappa_" + reconfig::format_number(kappa);
}

}  // namespace

int cmd_solve(const RunConfig& c, std::ostream& log) {
  if (c.lambdas.size() != 1) throw ValidationError("solve takes exactly one lambda (use sweep for a list)");
  const auto p = prepare(c, log);
  const auto problem = reconfig::assemble(p.model, p.bounds, p.cost, c.lambdas.front());
  const auto sol = reconfig::solve_centralized(p.model, p.bounds, problem, c.solver_settings());
  log << "solve: " << socp::to_string(sol.status) << ", " << sol.open_count() << " open switches, "
      << sol.iterations << " iterations\n";

  ordered_json summary;
  summary["command"] = "solve";
  summary["status"] = socp::to_string(sol.status);
  summary["lambda"] = sol.lambda;
  summary["scenarios"] = sample_info(c, p);
  summary["objective"] = sol.objective;
  summary["open_lines"] = open_list(p.model, sol);
  summary["radial"] = sol.radial;
  if (sol.status == socp::Status::optimal && c.validation_scenarios > 0)
    summary["validation"] = validation_json(c, p, sol);

  Bundle b;
  b.add("solution.json", reconfig::solution_json(p.model, sol));
  std::ostringstream cur;
  reconfig::write_current_matrix_csv(p.model, {sol}, cur);
  b.add("currents.csv", cur.str());
  b.add("summary.json", summary.dump(2) + "\n");
  b.add("manifest.json", manifest_json(c, "solve"));
  b.write(c.out);
  return exit_for(sol.status);
}

int cmd_sweep(const RunConfig& c, std::ostream& log) {
  const auto p = prepare(c, log);
  const auto sols = reconfig::sweep_lambda(p.model, p.bounds, p.cost, c.lambdas, c.solver_settings());
  ordered_json summary;
  summary["command"] = "sweep";
  summary["scenarios"] = sample_info(c, p);
  auto rows = ordered_json::array();
  auto docs = ordered_json::array();
  bool any_optimal = false, any_stalled = false;
  ordered_json last_feasible = nullptr;
  for (const auto& s : sols) {
    if (s.status == socp::Status::optimal) last_feasible = s.lambda;
    log << "lambda " << reconfig::format_number(s.lambda) << ": " << socp::to_string(s.status) << ", "
        << s.open_count() << " open\n";
    any_optimal = any_optimal || s.status == socp::Status::optimal;
    any_stalled = any_stalled || s.status == socp::Status::max_iterations;
    rows.push_back({{"lambda", s.lambda},
                    {"status", socp::to_string(s.status)},
                    {"open_count", s.open_count()},
                    {"open_lines", open_list(p.model, s)},
                    {"radial", s.radial},
                    {"objective", s.objective}});
    docs.push_back(ordered_json::parse(reconfig::solution_json(p.model, s)));
  }
  summary["lambdas"] = rows;
  summary["last_feasible_lambda"] = last_feasible;

  Bundle b;
  b.add("solutions.json", docs.dump(2) + "\n");
  std::ostringstream cur;
  reconfig::write_current_matrix_csv(p.model, sols, cur);
  b.add("currents.csv", cur.str());
  b.add("summary.json", summary.dump(2) + "\n");
  b.add("manifest.json", manifest_json(c, "sweep"));
  b.write(c.out);
  if (any_stalled) return kNotConverged;
  return any_optimal ? kOptimal : kInfeasible;
}

int cmd_distributed(const RunConfig& c, std::ostream& log) {
  if (c.lambdas.size() != 1) throw ValidationError("distributed takes exactly one lambda");
  if (c.partition.empty()) throw ValidationError("distributed runs need a partition (use --partition)");
  const auto p = prepare(c, log);
  const auto part = admm::partition(p.model, admm::load_partition(c.partition));
  const double lambda = c.lambdas.front();
  const auto exec = c.parallel ? Execution::parallel : Execution::serial;

  ordered_json summary;
  summary["command"] = "distributed";
  summary["lambda"] = lambda;
  summary["scenarios"] = sample_info(c, p);
  auto areas = ordered_json::array();
  for (std::size_t a = 0; a < part.area_count(); ++a) areas.push_back(part.names[a]);
  summary["areas"] = areas;
  auto ties = ordered_json::array();
  for (const auto& t : part.ties) ties.push_back(reconfig::line_label(p.model, t.line));
  summary["tie_lines"] = ties;

  Bundle b;
  std::optional<reconfig::ReconfigSolution> central;
  if (c.check_central) {
    const auto problem = reconfig::assemble(p.model, p.bounds, p.cost, lambda);
    central = reconfig::solve_centralized(p.model, p.bounds, problem, c.solver_settings());
    summary["central"] = {{"status", socp::to_string(central->status)},
                          {"objective", central->objective},
                          {"open_lines", open_list(p.model, *central)}};
    if (central->status != socp::Status::optimal) {
      log << "centralized reference is " << socp::to_string(central->status) << "\n";
      central.reset();
    }
  }

  int code = kOptimal;
  auto runs = ordered_json::array();
  for (double kappa : c.kappas) {
    admm::AdmmSettings s;
    s.kappa = kappa;
    s.max_iters = c.admm_max_iters;
    s.tol = c.admm_tol;
    s.exec = exec;
    s.local = c.solver_settings();
    if (central) s.reference = central->xi;
    const auto r = admm::run_admm(p.model, p.bounds, p.cost, lambda, part, s);
    log << "admm kappa " << reconfig::format_number(kappa) << ": " << (r.converged ? "converged" : "not converged")
        << " after " << r.iterations << " iterations\n";
    double dual_sum = 0.0;
    for (double d : r.dual_sum) dual_sum = std::max(dual_sum, d);
    ordered_json run{{"kappa", kappa},
                     {"converged", r.converged},
                     {"iterations", r.iterations},
                     {"iterations_to_gap_1e-3", admm::iterations_to_gap(r.max_gap, 1e-3)},
                     {"iterations_to_gap_1e-4", admm::iterations_to_gap(r.max_gap, 1e-4)},
                     {"max_dual_sum", dual_sum},
                     {"objective", r.solution.objective},
                     {"open_lines", open_list(p.model, r.solution)}};
    if (central) run["dist_to_central"] = (r.solution.xi - central->xi).norm() / central->xi.norm();
    runs.push_back(run);
    const auto suffix = kappa_suffix(c, kappa);
    b.add("solution" + suffix + ".json", reconfig::solution_json(p.model, r.solution));
    std::ostringstream trace, msgs;
    admm::write_trace_csv(r.trace, trace);
    admm::write_messages_csv(r.messages, msgs);
    b.add("trace" + suffix + ".csv", trace.str());
    b.add("messages" + suffix + ".csv", msgs.str());
    if (!r.converged) code = kNotConverged;
  }
  summary["runs"] = runs;

  if (c.baseline == "subgradient") {
    admm::SubgradientSettings s;
    s.step = c.baseline_step;
    s.max_iters = c.baseline_max_iters;
    s.tol = c.admm_tol;
    s.exec = exec;
    s.local = c.solver_settings();
    if (central) s.reference = central->xi;
    const auto r = admm::subgradient_baseline(p.model, p.bounds, p.cost, lambda, part, s);
    log << "subgradient baseline: " << r.iterations << " iterations\n";
    summary["baseline"] = {{"kind", "subgradient"},
                           {"step", c.baseline_step},
                           {"converged", r.converged},
                           {"iterations", r.iterations},
                           {"iterations_to_gap_1e-3", admm::iterations_to_gap(r.max_gap, 1e-3)},
                           {"final_gap", r.max_gap.empty() ? 0.0 : r.max_gap.back()}};
    std::ostringstream trace, msgs;
    admm::write_trace_csv(r.trace, trace);
    admm::write_messages_csv(r.messages, msgs);
    b.add("baseline_trace.csv", trace.str());
    b.add("baseline_messages.csv", msgs.str());
  }

  b.add("summary.json", summary.dump(2) + "\n");
  b.add("manifest.json", manifest_json(c, "distributed"));
  b.write(c.out);
  return code;
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& log) {
  try {
    if (command == "solve") return cmd_solve(config, log);
    if (command == "sweep") return cmd_sweep(config, log);
    if (command == "distributed") return cmd_distributed(config, log);
    log << "error: unknown command '" << command << "'\n";
    return kError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kError;
  }
}

}  // namespace gridrecon::cli
