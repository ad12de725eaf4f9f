#include "gridrecon/grid/feeder.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <Eigen/LU>

#include "gridrecon/error.hpp"

namespace gridrecon::grid {

std::optional<Phase> phase_from_label(char c) {
  switch (c) {
    case 'a': return Phase::a;
    case 'b': return Phase::b;
    case 'c': return Phase::c;
    default: return std::nullopt;
  }
}

std::optional<PhaseSet> PhaseSet::parse(std::string_view labels) {
  PhaseSet out;
  for (char ch : labels) {
    auto p = phase_from_label(ch);
    if (!p || out.contains(*p)) return std::nullopt;
    out.insert(*p);
  }
  return out;
}

int PhaseSet::size() const { return std::popcount(mask_); }

int PhaseSet::position(Phase p) const {
  if (!contains(p)) return -1;
  const std::uint8_t below = mask_ & static_cast<std::uint8_t>((1U << index_of(p)) - 1U);
  return std::popcount(below);
}

std::vector<Phase> PhaseSet::members() const {
  std::vector<Phase> out;
  for (Phase p : kAllPhases)
    if (contains(p)) out.push_back(p);
  return out;
}

std::string PhaseSet::labels() const {
  std::string s;
  for (Phase p : members()) s.push_back(label_of(p));
  return s;
}

bool NodeSpec::hosts_res(Phase p) const {
  return std::any_of(res.begin(), res.end(), [p](const ResUnit& u) { return u.phase == p; });
}

double NodeSpec::res_forecast_w(Phase p) const {
  double total = 0.0;
  for (const auto& u : res)
    if (u.phase == p) total += u.forecast_w;
  return total;
}

bool operator==(const LineSpec& l, const LineSpec& r) {
  if (l.from != r.from || l.to != r.to || l.phases != r.phases || l.i_max_a != r.i_max_a ||
      l.switchable != r.switchable || l.weight != r.weight)
    return false;
  if (l.z.rows() != r.z.rows() || l.z.cols() != r.z.cols() || l.z != r.z) return false;
  if (l.y_shunt.has_value() != r.y_shunt.has_value()) return false;
  if (l.y_shunt && (l.y_shunt->size() != r.y_shunt->size() || *l.y_shunt != *r.y_shunt))
    return false;
  return true;
}

std::size_t FeederModel::node_index(NodeId id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return i;
  throw ValidationError("unknown node id " + std::to_string(id));
}

std::size_t FeederModel::switchable_count() const {
  return static_cast<std::size_t>(
      std::count_if(lines.begin(), lines.end(), [](const LineSpec& l) { return l.switchable; }));
}

std::size_t FeederModel::line_phase_count() const {
  std::size_t n = 0;
  for (const auto& l : lines) n += static_cast<std::size_t>(l.phases.size());
  return n;
}

std::size_t FeederModel::dg_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const NodeSpec& n) { return n.dg.has_value(); }));
}

namespace {

std::string line_name(const LineSpec& l) {
  return "(" + std::to_string(l.from) + "," + std::to_string(l.to) + ")";
}

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

}  // namespace

void FeederModel::validate() const {
  if (!(nominal_voltage_v > 0.0)) fail("nominal voltage must be positive");
  if (nodes.empty()) fail("feeder has no nodes");

  std::map<NodeId, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (!index.emplace(n.id, i).second) fail("duplicate node id " + std::to_string(n.id));
    const std::string where = "node " + std::to_string(n.id);
    if (n.phases.empty()) fail(where + " declares no phases");
    for (Phase p : kAllPhases)
      if (n.hosts_load(p) && !n.phases.contains(p))
        fail(where + " has load on undeclared phase " + std::string(1, label_of(p)));
    for (const auto& u : n.res) {
      if (!n.phases.contains(u.phase))
        fail(where + " has RES on undeclared phase " + std::string(1, label_of(u.phase)));
      if (u.capacity_w < 0.0 || u.forecast_w < 0.0) fail(where + " RES with negative power");
      if (u.forecast_w > u.capacity_w) fail(where + " RES forecast exceeds capacity");
    }
    if (n.dg) {
      if (n.dg->p_min_w > n.dg->p_max_w) fail(where + " DG has p_min > p_max");
      if (n.dg->q_min_var > n.dg->q_max_var) fail(where + " DG has q_min > q_max");
    }
  }
  if (!index.contains(pcc)) fail("PCC node " + std::to_string(pcc) + " is not in the node list");

  std::set<std::pair<NodeId, NodeId>> edges;
  for (const auto& l : lines) {
    const std::string where = "line " + line_name(l);
    auto from = index.find(l.from);
    auto to = index.find(l.to);
    if (from == index.end() || to == index.end()) fail(where + " references an unknown node");
    if (l.from == l.to) fail(where + " is a self loop");
    if (!edges.emplace(l.from, l.to).second) fail("duplicate edge " + line_name(l));
    if (l.phases.empty()) fail(where + " declares no phases");
    if (!l.phases.subset_of(nodes[from->second].phases) || !l.phases.subset_of(nodes[to->second].phases))
      fail(where + " phases are not present at both endpoints");
    const auto k = l.phases.size();
    if (l.z.rows() != k || l.z.cols() != k) fail(where + " impedance has wrong shape");
    if ((l.z - l.z.transpose()).norm() > 1e-9 * (1.0 + l.z.norm()))
      fail(where + " impedance is not symmetric");
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(l.z);
    lu.setThreshold(1e-12);
    if (l.z.norm() == 0.0 || !lu.isInvertible()) fail(where + ": singular impedance");
    if (!(l.i_max_a > 0.0)) fail(where + " needs i_max > 0");
    if (l.weight < 0.0 || (l.switchable && !(l.weight > 0.0)))
      fail(where + " needs a positive weight when switchable");
    if (l.y_shunt && l.y_shunt->size() != k) fail(where + " shunt admittance has wrong length");
  }

  // Connectivity with every line closed.
  std::vector<std::vector<std::size_t>> adj(nodes.size());
  for (const auto& l : lines) {
    adj[index[l.from]].push_back(index[l.to]);
    adj[index[l.to]].push_back(index[l.from]);
  }
  std::vector<bool> seen(nodes.size(), false);
  std::queue<std::size_t> q;
  q.push(index[pcc]);
  seen[index[pcc]] = true;
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        q.push(v);
      }
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!seen[i]) fail("node " + std::to_string(nodes[i].id) + " is not connected to the PCC");
}

}  // namespace gridrecon::grid
