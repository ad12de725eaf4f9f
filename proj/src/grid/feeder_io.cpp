#include <cmath>
#include <numbers>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "common/json_fields.hpp"
#include "gridrecon/error.hpp"
#include "gridrecon/grid/feeder.hpp"

namespace gridrecon::grid {

using nlohmann::json;

namespace {

using namespace detail;

constexpr double kFeetPerMile = 5280.0;
constexpr double kKilo = 1000.0;

struct Config {
  PhaseSet phases;
  Eigen::MatrixXd r;
  Eigen::MatrixXd x;
};

PhaseSet phases_of(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path, "expected a phase string such as \"abc\"");
  auto ps = PhaseSet::parse(j.get<std::string>());
  if (!ps || ps->empty()) throw ParseError(path, "invalid phase string '" + j.get<std::string>() + "'");
  return *ps;
}

Phase single_phase(const json& j, const std::string& path) {
  auto ps = phases_of(j, path);
  if (ps.size() != 1) throw ParseError(path, "expected exactly one phase");
  return ps.members().front();
}

Eigen::MatrixXd matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError(path, "expected a non-empty row-major matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows)
      throw ParseError(rp, "expected a square matrix");
    for (Eigen::Index c = 0; c < rows; ++c)
      m(r, c) = number(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

std::array<double, 3> per_phase(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"a", "b", "c"});
  std::array<double, 3> out{};
  for (Phase p : kAllPhases) {
    const std::string key(1, label_of(p));
    out[index_of(p)] = number_or(j, path, key.c_str(), 0.0);
  }
  return out;
}

Config parse_config(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"phases", "r_per_mile", "x_per_mile"});
  Config c;
  c.phases = phases_of(field(j, path, "phases"), path + ".phases");
  c.r = matrix(field(j, path, "r_per_mile"), path + ".r_per_mile");
  c.x = matrix(field(j, path, "x_per_mile"), path + ".x_per_mile");
  if (c.r.rows() != c.phases.size() || c.x.rows() != c.phases.size())
    throw ParseError(path, "matrix size does not match phase count");
  return c;
}

NodeSpec parse_node(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"id", "phases", "load_kw", "load_kvar", "dg", "res", "xy_ft"});
  NodeSpec n;
  n.id = integer(field(j, path, "id"), path + ".id");
  n.phases = phases_of(field(j, path, "phases"), path + ".phases");
  std::array<double, 3> p{}, q{};
  if (j.contains("load_kw")) p = per_phase(j["load_kw"], path + ".load_kw");
  if (j.contains("load_kvar")) q = per_phase(j["load_kvar"], path + ".load_kvar");
  for (int k = 0; k < 3; ++k) n.load[k] = cd(p[k] * kKilo, q[k] * kKilo);

  if (j.contains("dg")) {
    const auto& d = j["dg"];
    const std::string dp = path + ".dg";
    require_object(d, dp);
    reject_unknown(d, dp, {"p_min_kw", "p_max_kw", "q_min_kvar", "q_max_kvar", "cost_coeff"});
    DgSpec dg;
    dg.p_min_w = number_or(d, dp, "p_min_kw", 0.0) * kKilo;
    dg.p_max_w = number_at(d, dp, "p_max_kw") * kKilo;
    dg.q_min_var = number_or(d, dp, "q_min_kvar", 0.0) * kKilo;
    dg.q_max_var = number_or(d, dp, "q_max_kvar", 0.0) * kKilo;
    dg.cost_coeff = number_or(d, dp, "cost_coeff", 0.0);
    n.dg = dg;
  }
  if (j.contains("res")) {
    const auto& arr = j["res"];
    if (!arr.is_array()) throw ParseError(path + ".res", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& u = arr[i];
      const std::string up = path + ".res[" + std::to_string(i) + "]";
      require_object(u, up);
      reject_unknown(u, up, {"phase", "kind", "capacity_kw", "forecast_kw"});
      ResUnit unit;
      unit.phase = single_phase(field(u, up, "phase"), up + ".phase");
      const auto& kind = field(u, up, "kind");
      if (kind == "pv")
        unit.kind = ResKind::pv;
      else if (kind == "wind")
        unit.kind = ResKind::wind;
      else
        throw ParseError(up + ".kind", "expected \"pv\" or \"wind\"");
      unit.capacity_w = number_at(u, up, "capacity_kw") * kKilo;
      unit.forecast_w = number_at(u, up, "forecast_kw") * kKilo;
      n.res.push_back(unit);
    }
  }
  if (j.contains("xy_ft")) {
    const auto& xy = j["xy_ft"];
    if (!xy.is_array() || xy.size() != 2) throw ParseError(path + ".xy_ft", "expected [x, y]");
    n.xy_ft = std::array<double, 2>{number(xy[0], path + ".xy_ft[0]"), number(xy[1], path + ".xy_ft[1]")};
  }
  return n;
}

LineSpec parse_line(const json& j, const std::string& path, const std::map<std::string, Config>& configs) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"from", "to", "phases", "config", "length_ft", "r_ohm", "x_ohm", "i_max_a", "switchable",
                  "weight", "y_shunt_us"});
  LineSpec l;
  l.from = integer(field(j, path, "from"), path + ".from");
  l.to = integer(field(j, path, "to"), path + ".to");
  l.phases = phases_of(field(j, path, "phases"), path + ".phases");
  const auto k = static_cast<Eigen::Index>(l.phases.size());

  const bool by_config = j.contains("config");
  const bool explicit_z = j.contains("r_ohm") || j.contains("x_ohm");
  if (by_config == explicit_z)
    throw ParseError(path, "give either config + length_ft or explicit r_ohm / x_ohm");
  if (by_config) {
    const auto& cid = j["config"];
    if (!cid.is_string()) throw ParseError(path + ".config", "expected a configuration id string");
    auto it = configs.find(cid.get<std::string>());
    if (it == configs.end()) throw ParseError(path + ".config", "unknown configuration '" + cid.get<std::string>() + "'");
    const Config& cfg = it->second;
    if (!l.phases.subset_of(cfg.phases)) throw ParseError(path + ".phases", "not covered by the configuration");
    const double miles = number_at(j, path, "length_ft") / kFeetPerMile;
    if (!(miles > 0.0)) throw ParseError(path + ".length_ft", "must be positive");
    l.z.resize(k, k);
    const auto members = l.phases.members();
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index c = 0; c < k; ++c) {
        const int cr = cfg.phases.position(members[static_cast<std::size_t>(r)]);
        const int cc = cfg.phases.position(members[static_cast<std::size_t>(c)]);
        l.z(r, c) = cd(cfg.r(cr, cc), cfg.x(cr, cc)) * miles;
      }
  } else {
    if (j.contains("length_ft")) throw ParseError(path + ".length_ft", "only valid together with config");
    const auto r = matrix(field(j, path, "r_ohm"), path + ".r_ohm");
    const auto x = matrix(field(j, path, "x_ohm"), path + ".x_ohm");
    if (r.rows() != k || x.rows() != k) throw ParseError(path, "impedance size does not match phase count");
    l.z = r.cast<cd>() + cd(0.0, 1.0) * x.cast<cd>();
  }

  l.i_max_a = number_at(j, path, "i_max_a");
  const auto& sw = field(j, path, "switchable");
  if (!sw.is_boolean()) throw ParseError(path + ".switchable", "expected a boolean");
  l.switchable = sw.get<bool>();
  l.weight = number_or(j, path, "weight", 1.0);
  if (j.contains("y_shunt_us")) {
    const auto& y = j["y_shunt_us"];
    const std::string yp = path + ".y_shunt_us";
    if (!y.is_array() || static_cast<Eigen::Index>(y.size()) != k)
      throw ParseError(yp, "expected one [g, b] pair per phase");
    Eigen::VectorXcd ys(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& e = y[static_cast<std::size_t>(i)];
      const std::string ep = yp + "[" + std::to_string(i) + "]";
      if (!e.is_array() || e.size() != 2) throw ParseError(ep, "expected [g, b]");
      ys(i) = cd(number(e[0], ep + "[0]"), number(e[1], ep + "[1]")) * 1e-6;
    }
    l.y_shunt = ys;
  }
  return l;
}

}  // namespace

FeederModel parse_feeder(std::istream& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed document: ") + e.what());
  }
  require_object(doc, "$");
  reject_unknown(doc, "$",
                 {"nominal_voltage_v", "pcc_node", "price_pcc", "phase_angles_deg", "impedance_configs", "nodes",
                  "lines"});

  FeederModel m;
  m.nominal_voltage_v = number_at(doc, "$", "nominal_voltage_v");
  m.pcc = integer(field(doc, "$", "pcc_node"), "$.pcc_node");
  m.price_pcc = number_at(doc, "$", "price_pcc");
  if (doc.contains("phase_angles_deg")) {
    const auto deg = per_phase(doc["phase_angles_deg"], "$.phase_angles_deg");
    for (int k = 0; k < 3; ++k) m.phase_angles[k] = deg[k] * std::numbers::pi / 180.0;
  }

  std::map<std::string, Config> configs;
  if (doc.contains("impedance_configs")) {
    const auto& cj = doc["impedance_configs"];
    require_object(cj, "$.impedance_configs");
    for (auto it = cj.begin(); it != cj.end(); ++it)
      configs.emplace(it.key(), parse_config(it.value(), "$.impedance_configs." + it.key()));
  }

  const auto& nodes = field(doc, "$", "nodes");
  if (!nodes.is_array()) throw ParseError("$.nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    m.nodes.push_back(parse_node(nodes[i], "$.nodes[" + std::to_string(i) + "]"));

  const auto& lines = field(doc, "$", "lines");
  if (!lines.is_array()) throw ParseError("$.lines", "expected an array");
  for (std::size_t i = 0; i < lines.size(); ++i)
    m.lines.push_back(parse_line(lines[i], "$.lines[" + std::to_string(i) + "]", configs));

  m.validate();
  return m;
}

FeederModel parse_feeder_string(const std::string& text) {
  std::istringstream in(text);
  return parse_feeder(in);
}

FeederModel load_feeder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open feeder file");
  return parse_feeder(in);
}

std::string serialize_feeder(const FeederModel& m) {
  json doc = json::object();
  doc["nominal_voltage_v"] = m.nominal_voltage_v;
  doc["pcc_node"] = m.pcc;
  doc["price_pcc"] = m.price_pcc;
  if (m.phase_angles != kBalancedAngles) {
    json a = json::object();
    for (Phase p : kAllPhases) a[std::string(1, label_of(p))] = m.phase_angles[index_of(p)] * 180.0 / std::numbers::pi;
    doc["phase_angles_deg"] = a;
  }

  json nodes = json::array();
  for (const auto& n : m.nodes) {
    json nj;
    nj["id"] = n.id;
    nj["phases"] = n.phases.labels();
    json p = json::object(), q = json::object();
    for (Phase ph : kAllPhases) {
      const auto& s = n.load[index_of(ph)];
      if (s.real() != 0.0) p[std::string(1, label_of(ph))] = s.real() / kKilo;
      if (s.imag() != 0.0) q[std::string(1, label_of(ph))] = s.imag() / kKilo;
    }
    if (!p.empty()) nj["load_kw"] = p;
    if (!q.empty()) nj["load_kvar"] = q;
    if (n.dg) {
      nj["dg"] = {{"p_min_kw", n.dg->p_min_w / kKilo},
                  {"p_max_kw", n.dg->p_max_w / kKilo},
                  {"q_min_kvar", n.dg->q_min_var / kKilo},
                  {"q_max_kvar", n.dg->q_max_var / kKilo},
                  {"cost_coeff", n.dg->cost_coeff}};
    }
    if (!n.res.empty()) {
      json arr = json::array();
      for (const auto& u : n.res)
        arr.push_back({{"phase", std::string(1, label_of(u.phase))},
                       {"kind", u.kind == ResKind::pv ? "pv" : "wind"},
                       {"capacity_kw", u.capacity_w / kKilo},
                       {"forecast_kw", u.forecast_w / kKilo}});
      nj["res"] = arr;
    }
    if (n.xy_ft) nj["xy_ft"] = {(*n.xy_ft)[0], (*n.xy_ft)[1]};
    nodes.push_back(nj);
  }
  doc["nodes"] = nodes;

  json lines = json::array();
  for (const auto& l : m.lines) {
    json lj;
    lj["from"] = l.from;
    lj["to"] = l.to;
    lj["phases"] = l.phases.labels();
    json r = json::array(), x = json::array();
    for (Eigen::Index i = 0; i < l.z.rows(); ++i) {
      json rr = json::array(), xr = json::array();
      for (Eigen::Index k = 0; k < l.z.cols(); ++k) {
        rr.push_back(l.z(i, k).real());
        xr.push_back(l.z(i, k).imag());
      }
      r.push_back(rr);
      x.push_back(xr);
    }
    lj["r_ohm"] = r;
    lj["x_ohm"] = x;
    lj["i_max_a"] = l.i_max_a;
    lj["switchable"] = l.switchable;
    lj["weight"] = l.weight;
    if (l.y_shunt) {
      json y = json::array();
      for (Eigen::Index i = 0; i < l.y_shunt->size(); ++i)
        y.push_back({(*l.y_shunt)(i).real() * 1e6, (*l.y_shunt)(i).imag() * 1e6});
      lj["y_shunt_us"] = y;
    }
    lines.push_back(lj);
  }
  doc["lines"] = lines;
  return doc.dump(2);
}

}  // namespace gridrecon::grid
