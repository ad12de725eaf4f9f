#include "gridrecon/scenario/forecast.hpp"

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "common/json_fields.hpp"
#include "gridrecon/error.hpp"

namespace gridrecon::scenario {

using namespace detail;

namespace {

bool in_demand_set(const FeederModel& model, std::size_t n, Phase p) {
  const auto& node = model.nodes[n];
  return node.hosts_load(p) || node.hosts_res(p) || node.dg.has_value();
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, std::string("cannot open ") + what);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double fraction(const json& j, const std::string& path, const char* key, double fallback) {
  const double v = number_or(j, path, key, fallback);
  if (v < 0.0) throw ParseError(path + "." + key, "must be non-negative");
  return v;
}

}  // namespace

std::vector<Site> demand_sites(const FeederModel& model) {
  std::vector<Site> out;
  for (std::size_t n = 0; n < model.nodes.size(); ++n) {
    if (model.nodes[n].id == model.pcc) continue;
    for (Phase p : model.nodes[n].phases.members())
      if (in_demand_set(model, n, p)) out.push_back({n, p});
  }
  return out;
}

std::vector<Site> zero_injection_sites(const FeederModel& model) {
  std::vector<Site> out;
  for (std::size_t n = 0; n < model.nodes.size(); ++n) {
    if (model.nodes[n].id == model.pcc) continue;
    for (Phase p : model.nodes[n].phases.members())
      if (!in_demand_set(model, n, p)) out.push_back({n, p});
  }
  return out;
}

void ForecastErrorSpec::validate() const {
  const auto d = sites.size();
  if (load_sigma_p.size() != d || load_sigma_q.size() != d)
    throw ValidationError("load sigma vectors must have one entry per demand site");
  for (std::size_t i = 0; i < d; ++i)
    if (!(load_sigma_p[i] >= 0.0 && std::isfinite(load_sigma_p[i])) ||
        !(load_sigma_q[i] >= 0.0 && std::isfinite(load_sigma_q[i])))
      throw ValidationError("load sigma must be finite and non-negative");
  for (const auto& r : res)
    if (!(r.sigma_w >= 0.0 && std::isfinite(r.sigma_w)))
      throw ValidationError("renewable sigma must be finite and non-negative");
  if (!(lower_pct > 0.0 && lower_pct < upper_pct && upper_pct < 100.0))
    throw ValidationError("truncation percentiles must satisfy 0 < lower < upper < 100");
  if (epsilon.size() != 0 && epsilon.cols() != static_cast<Eigen::Index>(2 * d))
    throw ValidationError("epsilon samples must have 2|D| columns");
  if (epsilon.size() != 0 && !epsilon.allFinite()) throw ValidationError("epsilon samples must be finite");
}

Eigen::MatrixXd CorrelationModel::correlation(const std::vector<ResError>& res) const {
  const auto n = static_cast<Eigen::Index>(res.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  if (kind == Kind::independent) return c;
  if (distance.rows() != n || distance.cols() != n)
    throw ValidationError("correlation distance matrix does not match the renewable unit count");
  if (!(decay_length > 0.0)) throw ValidationError("correlation decay length must be positive");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && res[i].kind == res[j].kind) c(i, j) = std::exp(-distance(i, j) / decay_length);
  return c;
}

ScenarioSpecDocument parse_scenario_spec(const std::string& text, const std::string& base_dir) {
  const json doc = parse_document(text, "scenario document");
  require_object(doc, "$");
  reject_unknown(doc, "$", {"res_sigma_frac", "load_sigma_frac", "load_sigma_overrides", "truncation_pct",
                            "correlation", "epsilon_csv"});
  ScenarioSpecDocument s;
  if (doc.contains("res_sigma_frac")) {
    const auto& r = doc["res_sigma_frac"];
    require_object(r, "$.res_sigma_frac");
    reject_unknown(r, "$.res_sigma_frac", {"pv", "wind"});
    s.pv_sigma_frac = fraction(r, "$.res_sigma_frac", "pv", s.pv_sigma_frac);
    s.wind_sigma_frac = fraction(r, "$.res_sigma_frac", "wind", s.wind_sigma_frac);
  }
  if (doc.contains("load_sigma_frac")) {
    const auto& l = doc["load_sigma_frac"];
    require_object(l, "$.load_sigma_frac");
    reject_unknown(l, "$.load_sigma_frac", {"p", "q"});
    s.load_sigma_p_frac = fraction(l, "$.load_sigma_frac", "p", s.load_sigma_p_frac);
    s.load_sigma_q_frac = fraction(l, "$.load_sigma_frac", "q", s.load_sigma_q_frac);
  }
  if (doc.contains("load_sigma_overrides")) {
    const auto& arr = doc["load_sigma_overrides"];
    if (!arr.is_array()) throw ParseError("$.load_sigma_overrides", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "$.load_sigma_overrides[" + std::to_string(i) + "]";
      require_object(arr[i], p);
      reject_unknown(arr[i], p, {"node", "p", "q"});
      const int node = integer(field(arr[i], p, "node"), p + ".node");
      if (s.load_overrides.count(node)) throw ParseError(p + ".node", "duplicate override");
      s.load_overrides[node] = {fraction(arr[i], p, "p", s.load_sigma_p_frac),
                                fraction(arr[i], p, "q", s.load_sigma_q_frac)};
    }
  }
  if (doc.contains("truncation_pct")) {
    const auto& t = doc["truncation_pct"];
    if (!t.is_array() || t.size() != 2) throw ParseError("$.truncation_pct", "expected [lower, upper]");
    s.lower_pct = number(t[0], "$.truncation_pct[0]");
    s.upper_pct = number(t[1], "$.truncation_pct[1]");
    if (!(s.lower_pct > 0.0 && s.lower_pct < s.upper_pct && s.upper_pct < 100.0))
      throw ParseError("$.truncation_pct", "need 0 < lower < upper < 100");
  }
  if (doc.contains("correlation")) {
    const auto& c = doc["correlation"];
    const std::string p = "$.correlation";
    require_object(c, p);
    reject_unknown(c, p, {"kind", "decay_length", "distance"});
    const auto kind = string_at(c, p, "kind");
    if (kind == "independent") {
      s.correlation = CorrelationModel::Kind::independent;
    } else if (kind == "exponential-distance") {
      s.correlation = CorrelationModel::Kind::exponential_distance;
      s.decay_length = number_at(c, p, "decay_length");
      if (!(s.decay_length > 0.0)) throw ParseError(p + ".decay_length", "must be positive");
    } else {
      throw ParseError(p + ".kind", "expected \"independent\" or \"exponential-distance\"");
    }
    if (c.contains("distance")) {
      const auto d = string_at(c, p, "distance");
      if (d == "auto")
        s.distance = ScenarioSpecDocument::Distance::automatic;
      else if (d == "euclidean")
        s.distance = ScenarioSpecDocument::Distance::euclidean;
      else if (d == "hop")
        s.distance = ScenarioSpecDocument::Distance::hop;
      else
        throw ParseError(p + ".distance", "expected \"auto\", \"euclidean\" or \"hop\"");
    }
  }
  if (doc.contains("epsilon_csv")) {
    auto path = string_at(doc, "$", "epsilon_csv");
    std::filesystem::path fp(path);
    if (fp.is_relative() && !base_dir.empty()) fp = std::filesystem::path(base_dir) / fp;
    s.epsilon_csv = fp.string();
  }
  return s;
}

ScenarioSpecDocument load_scenario_spec(const std::string& path) {
  const auto text = read_file(path, "scenario document");
  try {
    return parse_scenario_spec(text, std::filesystem::path(path).parent_path().string());
  } catch (const ParseError& e) {
    throw ParseError(e.path(), std::string(e.what()) + " (in " + path + ")");
  }
}

std::string serialize_scenario_spec(const ScenarioSpecDocument& s) {
  json doc;
  doc["res_sigma_frac"] = {{"pv", s.pv_sigma_frac}, {"wind", s.wind_sigma_frac}};
  doc["load_sigma_frac"] = {{"p", s.load_sigma_p_frac}, {"q", s.load_sigma_q_frac}};
  if (!s.load_overrides.empty()) {
    json arr = json::array();
    for (const auto& [node, pq] : s.load_overrides) arr.push_back({{"node", node}, {"p", pq.first}, {"q", pq.second}});
    doc["load_sigma_overrides"] = arr;
  }
  doc["truncation_pct"] = {s.lower_pct, s.upper_pct};
  json c;
  if (s.correlation == CorrelationModel::Kind::independent) {
    c["kind"] = "independent";
  } else {
    c["kind"] = "exponential-distance";
    c["decay_length"] = s.decay_length;
  }
  c["distance"] = s.distance == ScenarioSpecDocument::Distance::automatic ? "auto"
                  : s.distance == ScenarioSpecDocument::Distance::euclidean ? "euclidean"
                                                                             : "hop";
  doc["correlation"] = c;
  if (!s.epsilon_csv.empty()) doc["epsilon_csv"] = s.epsilon_csv;
  return doc.dump(2);
}

Eigen::MatrixXd hop_distances(const FeederModel& model) {
  const auto n = model.nodes.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& l : model.lines) {
    const auto a = model.node_index(l.from), b = model.node_index(l.to);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), inf);
  for (std::size_t s = 0; s < n; ++s) {
    std::deque<std::size_t> queue{s};
    d(s, s) = 0.0;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (auto v : adj[u])
        if (d(s, v) == inf) {
          d(s, v) = d(s, u) + 1.0;
          queue.push_back(v);
        }
    }
  }
  return d;
}

ResolvedSpec resolve(const FeederModel& model, const ScenarioSpecDocument& doc) {
  ResolvedSpec out;
  auto& e = out.errors;
  e.sites = demand_sites(model);
  e.lower_pct = doc.lower_pct;
  e.upper_pct = doc.upper_pct;
  for (const auto& [node, pq] : doc.load_overrides) {
    (void)pq;
    model.node_index(node);  // throws for unknown ids
  }
  for (const auto& s : e.sites) {
    const auto& node = model.nodes[s.node];
    double fp = doc.load_sigma_p_frac, fq = doc.load_sigma_q_frac;
    if (auto it = doc.load_overrides.find(node.id); it != doc.load_overrides.end()) {
      fp = it->second.first;
      fq = it->second.second;
    }
    const auto load = node.load[grid::index_of(s.phase)];
    e.load_sigma_p.push_back(fp * std::abs(load.real()));
    e.load_sigma_q.push_back(fq * std::abs(load.imag()));
  }
  for (std::size_t n = 0; n < model.nodes.size(); ++n) {
    if (model.nodes[n].id == model.pcc) continue;
    for (const auto& u : model.nodes[n].res) {
      const double frac = u.kind == grid::ResKind::pv ? doc.pv_sigma_frac : doc.wind_sigma_frac;
      e.res.push_back({n, u.phase, u.kind, u.forecast_w, frac * u.forecast_w});
    }
  }

  auto& c = out.correlation;
  c.kind = doc.correlation;
  c.decay_length = doc.decay_length;
  if (c.kind == CorrelationModel::Kind::exponential_distance) {
    bool have_xy = true;
    for (const auto& r : e.res) have_xy = have_xy && model.nodes[r.node].xy_ft.has_value();
    auto mode = doc.distance;
    if (mode == ScenarioSpecDocument::Distance::euclidean && !have_xy)
      throw ValidationError("euclidean correlation distance needs xy_ft on every renewable node");
    if (mode == ScenarioSpecDocument::Distance::automatic)
      mode = have_xy ? ScenarioSpecDocument::Distance::euclidean : ScenarioSpecDocument::Distance::hop;
    const auto m = static_cast<Eigen::Index>(e.res.size());
    c.distance.resize(m, m);
    const Eigen::MatrixXd hops = mode == ScenarioSpecDocument::Distance::hop ? hop_distances(model) : Eigen::MatrixXd();
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto a = e.res[i].node, b = e.res[j].node;
        if (mode == ScenarioSpecDocument::Distance::hop) {
          c.distance(i, j) = hops(a, b);
        } else {
          const auto& pa = *model.nodes[a].xy_ft;
          const auto& pb = *model.nodes[b].xy_ft;
          c.distance(i, j) = std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
        }
      }
  }
  if (!doc.epsilon_csv.empty()) e.epsilon = load_epsilon_csv(doc.epsilon_csv, model, e.sites);
  e.validate();
  return out;
}

Eigen::MatrixXd load_epsilon_csv(const std::string& path, const FeederModel& model, const std::vector<Site>& sites) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open epsilon file");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, "empty epsilon file");

  std::map<std::pair<std::size_t, int>, std::size_t> site_of;
  for (std::size_t i = 0; i < sites.size(); ++i) site_of[{sites[i].node, grid::index_of(sites[i].phase)}] = i;
  const auto d = sites.size();

  std::vector<Eigen::Index> target;  // column in the output per CSV column
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) {
      const std::string where = path + ": column '" + cell + "'";
      const auto c1 = cell.find(':'), c2 = cell.rfind(':');
      if (c1 == std::string::npos || c1 == c2) throw ParseError(where, "expected node:phase:p|q");
      int id = 0;
      try {
        std::size_t used = 0;
        id = std::stoi(cell.substr(0, c1), &used);
        if (used != c1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(where, "bad node id");
      }
      const auto label = cell.substr(c1 + 1, c2 - c1 - 1);
      const auto ph = label.size() == 1 ? grid::phase_from_label(label[0]) : std::nullopt;
      const auto pq = cell.substr(c2 + 1);
      if (!ph || (pq != "p" && pq != "q")) throw ParseError(where, "expected node:phase:p|q");
      const auto it = site_of.find({model.node_index(id), grid::index_of(*ph)});
      if (it == site_of.end()) throw ParseError(where, "site is not a demand site");
      target.push_back(static_cast<Eigen::Index>(it->second + (pq == "q" ? d : 0)));
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream rs(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(rs, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno), "bad number '" + cell + "'");
      }
    }
    if (row.size() != target.size()) throw ParseError(path + ":" + std::to_string(lineno), "wrong column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path, "no epsilon samples");
  Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(2 * d));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < target.size(); ++c) eps(static_cast<Eigen::Index>(r), target[c]) = rows[r][c];
  return eps;
}

}  // namespace gridrecon::scenario
