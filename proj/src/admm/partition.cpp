#include "gridrecon/admm/partition.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridrecon/error.hpp"

namespace gridrecon::admm {

using nlohmann::ordered_json;

std::vector<std::size_t> AreaPartition::area_lines(const FeederModel& model, std::size_t area) const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    const auto& line = model.lines[l];
    if (node_area[model.node_index(line.from)] == area || node_area[model.node_index(line.to)] == area)
      out.push_back(l);
  }
  return out;
}

std::vector<std::size_t> AreaPartition::internal_lines(const FeederModel& model, std::size_t area) const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    const auto& line = model.lines[l];
    if (node_area[model.node_index(line.from)] == area && node_area[model.node_index(line.to)] == area)
      out.push_back(l);
  }
  return out;
}

std::vector<std::size_t> AreaPartition::area_ties(std::size_t area) const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < ties.size(); ++t)
    if (ties[t].first == area || ties[t].second == area) out.push_back(t);
  return out;
}

std::vector<std::size_t> AreaPartition::area_pairs(std::size_t area) const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < pairs.size(); ++p)
    if (pairs[p].first == area || pairs[p].second == area) out.push_back(p);
  return out;
}

std::string AreaPartition::pair_name(std::size_t pair) const {
  return names[pairs[pair].first] + "|" + names[pairs[pair].second];
}

AreaPartition partition(const FeederModel& model, const std::vector<AreaSpec>& areas) {
  AreaPartition p;
  const std::size_t unassigned = areas.size();
  p.node_area.assign(model.nodes.size(), unassigned);
  for (std::size_t a = 0; a < areas.size(); ++a) {
    const auto& spec = areas[a];
    if (spec.name.empty()) throw ValidationError("area names must be non-empty");
    if (spec.name == AreaPartition::kManager)
      throw ValidationError(std::string("area name '") + AreaPartition::kManager + "' is reserved");
    if (std::find(p.names.begin(), p.names.end(), spec.name) != p.names.end())
      throw ValidationError("duplicate area name '" + spec.name + "'");
    if (spec.nodes.empty()) throw ValidationError("area '" + spec.name + "' has no nodes");
    p.names.push_back(spec.name);
    std::vector<std::size_t> idx;
    for (NodeId id : spec.nodes) {
      const auto n = model.node_index(id);
      if (p.node_area[n] != unassigned)
        throw ValidationError("node " + std::to_string(id) + " appears in area '" + spec.name + "' and area '" +
                              areas[p.node_area[n]].name + "'");
      p.node_area[n] = a;
      idx.push_back(n);
    }
    std::sort(idx.begin(), idx.end());
    p.nodes.push_back(std::move(idx));
  }
  p.names.emplace_back(AreaPartition::kManager);
  p.nodes.emplace_back();
  for (std::size_t n = 0; n < model.nodes.size(); ++n)
    if (p.node_area[n] == unassigned) p.nodes.back().push_back(n);

  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> by_pair;
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    const auto& line = model.lines[l];
    auto a = p.node_area[model.node_index(line.from)];
    auto b = p.node_area[model.node_index(line.to)];
    if (a == b) continue;
    if (!line.switchable)
      throw ValidationError("tie line (" + std::to_string(line.from) + "," + std::to_string(line.to) +
                            ") between areas '" + p.names[a] + "' and '" + p.names[b] + "' has no switch");
    if (a > b) std::swap(a, b);
    by_pair[{a, b}].push_back(p.ties.size());
    p.ties.push_back({l, a, b});
  }
  for (auto& [key, ties] : by_pair) p.pairs.push_back({key.first, key.second, ties});
  return p;
}

std::vector<AreaSpec> parse_partition(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError("", std::string("malformed partition document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("$", "expected an object mapping area names to node lists");
  std::vector<AreaSpec> out;
  for (const auto& [name, nodes] : doc.items()) {
    const std::string path = "$." + name;
    if (!nodes.is_array()) throw ParseError(path, "expected an array of node ids");
    AreaSpec a{name, {}};
    for (const auto& n : nodes) {
      if (!n.is_number_integer()) throw ParseError(path, "node ids must be integers");
      a.nodes.push_back(n.get<NodeId>());
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<AreaSpec> load_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open partition file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_partition(ss.str());
}

std::string serialize_partition(const std::vector<AreaSpec>& areas) {
  ordered_json doc = ordered_json::object();
  for (const auto& a : areas) doc[a.name] = a.nodes;
  return doc.dump(2) + "\n";
}

}  // namespace gridrecon::admm
