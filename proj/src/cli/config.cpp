#include "gridrecon/cli/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "common/json_fields.hpp"
#include "gridrecon/version.hpp"

namespace gridrecon::cli {

using namespace detail;
namespace fs = std::filesystem;

namespace {

std::string resolve_path(const json& j, const std::string& path, const char* key, const std::string& base) {
  fs::path p(string_at(j, path, key));
  if (p.is_relative()) p = fs::path(base) / p;
  return fs::absolute(p).lexically_normal().string();
}

std::vector<double> number_list(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path)};
  if (!j.is_array() || j.empty()) throw ParseError(path, "expected a number or a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::int64_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ParseError(path, "expected a non-negative integer");
  return j.get<std::int64_t>();
}

void parse_cost(const json& j, const std::string& path, RunConfig& c) {
  require_object(j, path);
  reject_unknown(j, path, {"kind", "loss_weight", "op_weight", "scale", "pcc_coeff", "dg_coeffs", "line_terms"});
  if (j.contains("kind")) {
    const auto k = string_at(j, path, "kind");
    if (k == "loss")
      c.cost.kind = reconfig::CostSpec::Kind::loss;
    else if (k == "operation")
      c.cost.kind = reconfig::CostSpec::Kind::operation;
    else if (k == "weighted")
      c.cost.kind = reconfig::CostSpec::Kind::weighted;
    else
      throw ParseError(path + ".kind", "expected \"loss\", \"operation\" or \"weighted\"");
  }
  c.cost.loss_weight = number_or(j, path, "loss_weight", c.cost.loss_weight);
  c.cost.op_weight = number_or(j, path, "op_weight", c.cost.op_weight);
  c.cost.scale = number_or(j, path, "scale", c.cost.scale);
  if (j.contains("pcc_coeff")) c.cost.pcc_coeff = number_at(j, path, "pcc_coeff");
  if (j.contains("dg_coeffs")) {
    const auto& d = j["dg_coeffs"];
    require_object(d, path + ".dg_coeffs");
    for (auto it = d.begin(); it != d.end(); ++it) {
      const std::string kp = path + ".dg_coeffs." + it.key();
      int node = 0;
      try {
        std::size_t used = 0;
        node = std::stoi(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ParseError(kp, "keys must be node ids");
      }
      c.cost.dg_coeffs[node] = number(it.value(), kp);
    }
  }
  if (j.contains("line_terms")) {
    const auto& arr = j["line_terms"];
    if (!arr.is_array()) throw ParseError(path + ".line_terms", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ep = path + ".line_terms[" + std::to_string(i) + "]";
      require_object(arr[i], ep);
      reject_unknown(arr[i], ep, {"from", "to", "alpha"});
      c.line_terms.push_back({integer(field(arr[i], ep, "from"), ep + ".from"),
                              integer(field(arr[i], ep, "to"), ep + ".to"), number_at(arr[i], ep, "alpha")});
    }
  }
}

const char* kind_name(reconfig::CostSpec::Kind k) {
  switch (k) {
    case reconfig::CostSpec::Kind::loss: return "loss";
    case reconfig::CostSpec::Kind::operation: return "operation";
    case reconfig::CostSpec::Kind::weighted: return "weighted";
  }
  return "weighted";
}

}  // namespace

socp::SolverSettings RunConfig::solver_settings() const {
  socp::SolverSettings s;
  s.max_iters = solver_max_iters;
  s.tol_primal = s.tol_dual = solver_tol;
  s.kappa = solver_penalty;
  s.exec = parallel ? Execution::parallel : Execution::serial;
  return s;
}

void RunConfig::validate() const {
  if (feeder.empty()) throw ValidationError("config: feeder path is required");
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("config: rho must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("config: beta must lie in (0, 1)");
  if (lambdas.empty()) throw ValidationError("config: at least one lambda is required");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw ValidationError("config: lambda must be non-negative");
  for (double k : kappas)
    if (!(k > 0.0)) throw ValidationError("config: kappa must be positive");
  if (kappas.empty()) throw ValidationError("config: at least one kappa is required");
  if (samples && *samples < 1) throw ValidationError("config: samples must be at least 1");
  if (!baseline.empty() && baseline != "subgradient") throw ValidationError("config: unknown baseline '" + baseline + "'");
  if (validation_scenarios < 0) throw ValidationError("config: validation scenarios must be non-negative");
  if (!(solver_tol > 0.0) || solver_max_iters < 1 || !(solver_penalty > 0.0))
    throw ValidationError("config: solver settings must be positive");
  if (!(admm_tol > 0.0) || admm_max_iters < 1 || baseline_max_iters < 1 || !(baseline_step >= 0.0))
    throw ValidationError("config: distributed settings must be positive");
  cost.validate();
}

void RunConfig::check_digests() const {
  for (const auto& [key, digest] : expected_digests) {
    const std::string& path = key == "feeder" ? feeder : key == "scenario" ? scenario : partition;
    if (path.empty()) throw ValidationError("manifest records a " + key + " digest but no " + key + " path");
    if (file_digest(path) != digest)
      throw ValidationError(key + " file " + path + " differs from the one recorded in the manifest");
  }
}

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
  const json j = parse_document(text, "run configuration");
  require_object(j, "$");
  reject_unknown(j, "$",
                 {"feeder", "scenario", "partition", "cost", "lambda", "rho", "beta", "samples", "seed", "kappa",
                  "admm", "baseline", "check_central", "solver", "validation", "execution", "out", "command",
                  "tool_version", "input_digests"});
  RunConfig c;
  c.feeder = resolve_path(j, "$", "feeder", base_dir);
  if (j.contains("scenario")) c.scenario = resolve_path(j, "$", "scenario", base_dir);
  if (j.contains("partition")) c.partition = resolve_path(j, "$", "partition", base_dir);
  if (j.contains("cost")) parse_cost(j["cost"], "$.cost", c);
  if (j.contains("lambda")) c.lambdas = number_list(j["lambda"], "$.lambda");
  c.rho = number_or(j, "$", "rho", c.rho);
  c.beta = number_or(j, "$", "beta", c.beta);
  if (j.contains("samples")) {
    const auto& s = j["samples"];
    if (s.is_string() && s.get<std::string>() == "auto")
      c.samples.reset();
    else
      c.samples = count(s, "$.samples");
  }
  if (j.contains("seed")) c.seed = static_cast<std::uint64_t>(count(j["seed"], "$.seed"));
  if (j.contains("kappa")) c.kappas = number_list(j["kappa"], "$.kappa");
  if (j.contains("admm")) {
    const auto& a = j["admm"];
    require_object(a, "$.admm");
    reject_unknown(a, "$.admm", {"max_iters", "tol"});
    if (a.contains("max_iters")) c.admm_max_iters = integer(a["max_iters"], "$.admm.max_iters");
    c.admm_tol = number_or(a, "$.admm", "tol", c.admm_tol);
  }
  if (j.contains("baseline")) {
    const auto& b = j["baseline"];
    if (b.is_string()) {
      c.baseline = b.get<std::string>();
    } else {
      require_object(b, "$.baseline");
      reject_unknown(b, "$.baseline", {"kind", "step", "max_iters"});
      c.baseline = string_at(b, "$.baseline", "kind");
      c.baseline_step = number_or(b, "$.baseline", "step", c.baseline_step);
      if (b.contains("max_iters")) c.baseline_max_iters = integer(b["max_iters"], "$.baseline.max_iters");
    }
  }
  if (j.contains("check_central")) {
    if (!j["check_central"].is_boolean()) throw ParseError("$.check_central", "expected a boolean");
    c.check_central = j["check_central"].get<bool>();
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    require_object(s, "$.solver");
    reject_unknown(s, "$.solver", {"max_iters", "tol", "penalty"});
    if (s.contains("max_iters")) c.solver_max_iters = integer(s["max_iters"], "$.solver.max_iters");
    c.solver_tol = number_or(s, "$.solver", "tol", c.solver_tol);
    c.solver_penalty = number_or(s, "$.solver", "penalty", c.solver_penalty);
  }
  if (j.contains("validation")) {
    const auto& v = j["validation"];
    require_object(v, "$.validation");
    reject_unknown(v, "$.validation", {"scenarios", "seed"});
    if (v.contains("scenarios")) c.validation_scenarios = count(v["scenarios"], "$.validation.scenarios");
    if (v.contains("seed")) c.validation_seed = static_cast<std::uint64_t>(count(v["seed"], "$.validation.seed"));
  }
  if (j.contains("execution")) {
    const auto e = string_at(j, "$", "execution");
    if (e != "parallel" && e != "serial") throw ParseError("$.execution", "expected \"parallel\" or \"serial\"");
    c.parallel = e == "parallel";
  }
  if (j.contains("out")) c.out = resolve_path(j, "$", "out", base_dir);
  if (j.contains("input_digests")) {
    const auto& d = j["input_digests"];
    require_object(d, "$.input_digests");
    reject_unknown(d, "$.input_digests", {"feeder", "scenario", "partition"});
    for (auto it = d.begin(); it != d.end(); ++it) {
      if (!it.value().is_string()) throw ParseError("$.input_digests." + it.key(), "expected a string");
      c.expected_digests[it.key()] = it.value().get<std::string>();
    }
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open run configuration");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_run_config(text, fs::absolute(fs::path(path)).parent_path().string());
  } catch (const ParseError& e) {
    throw ParseError(e.path(), std::string(e.what()) + " (in " + path + ")");
  }
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open file");
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::string manifest_json(const RunConfig& c, const std::string& command) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["tool_version"] = kVersion;
  m["feeder"] = c.feeder;
  if (!c.scenario.empty()) m["scenario"] = c.scenario;
  if (!c.partition.empty()) m["partition"] = c.partition;
  nlohmann::ordered_json cost;
  cost["kind"] = kind_name(c.cost.kind);
  cost["loss_weight"] = c.cost.loss_weight;
  cost["op_weight"] = c.cost.op_weight;
  cost["scale"] = c.cost.scale;
  if (c.cost.pcc_coeff) cost["pcc_coeff"] = *c.cost.pcc_coeff;
  if (!c.cost.dg_coeffs.empty()) {
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (const auto& [node, coeff] : c.cost.dg_coeffs) d[std::to_string(node)] = coeff;
    cost["dg_coeffs"] = d;
  }
  if (!c.line_terms.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : c.line_terms) arr.push_back({{"from", t.from}, {"to", t.to}, {"alpha", t.alpha}});
    cost["line_terms"] = arr;
  }
  m["cost"] = cost;
  m["lambda"] = c.lambdas;
  m["rho"] = c.rho;
  m["beta"] = c.beta;
  if (c.samples)
    m["samples"] = *c.samples;
  else
    m["samples"] = "auto";
  m["seed"] = c.seed;
  m["kappa"] = c.kappas;
  m["admm"] = {{"max_iters", c.admm_max_iters}, {"tol", c.admm_tol}};
  if (!c.baseline.empty())
    m["baseline"] = {{"kind", c.baseline}, {"step", c.baseline_step}, {"max_iters", c.baseline_max_iters}};
  m["check_central"] = c.check_central;
  m["solver"] = {{"max_iters", c.solver_max_iters}, {"tol", c.solver_tol}, {"penalty", c.solver_penalty}};
  m["validation"] = {{"scenarios", c.validation_scenarios}, {"seed", c.effective_validation_seed()}};
  m["execution"] = c.parallel ? "parallel" : "serial";
  nlohmann::ordered_json digests;
  digests["feeder"] = file_digest(c.feeder);
  if (!c.scenario.empty()) digests["scenario"] = file_digest(c.scenario);
  if (!c.partition.empty()) digests["partition"] = file_digest(c.partition);
  m["input_digests"] = digests;
  return m.dump(2) + "\n";
}

}  // namespace gridrecon::cli
