#pragma once

#include <string>
#include <vector>

#include "gridrecon/grid/feeder.hpp"

namespace gridrecon::admm {

using grid::FeederModel;
using grid::NodeId;

/// One named area of a partition file.
struct AreaSpec {
  std::string name;
  std::vector<NodeId> nodes;
};

/// A line whose endpoints lie in different areas. `first < second`.
struct TieLine {
  std::size_t line = 0;
  std::size_t first = 0;
  std::size_t second = 0;
};

/// All tie lines between one pair of areas, I(first, second).
struct TiePair {
  std::size_t first = 0;
  std::size_t second = 0;
  std::vector<std::size_t> ties;  // indices into AreaPartition::ties
};

/// Local area controllers (in file order) followed by the microgrid manager,
/// which owns every node no area claims and coordinates the tie lines.
struct AreaPartition {
  static constexpr const char* kManager = "MGM";

  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> nodes;  // model node indices per area
  std::vector<std::size_t> node_area;           // per model node
  std::vector<TieLine> ties;                    // model line order
  std::vector<TiePair> pairs;                   // ordered by (first, second)

  std::size_t area_count() const { return names.size(); }
  std::size_t manager() const { return names.size() - 1; }
  /// Lines with at least one endpoint in the area, model order.
  std::vector<std::size_t> area_lines(const FeederModel& model, std::size_t area) const;
  /// Lines with both endpoints in the area, model order.
  std::vector<std::size_t> internal_lines(const FeederModel& model, std::size_t area) const;
  /// Tie indices touching the area.
  std::vector<std::size_t> area_ties(std::size_t area) const;
  /// Pair indices touching the area; their count is |N(area)|.
  std::vector<std::size_t> area_pairs(std::size_t area) const;
  std::string pair_name(std::size_t pair) const;
};

/// Splits the feeder into the given areas plus the manager. Throws
/// ValidationError for overlapping or unknown nodes, empty or duplicate names,
/// the reserved name, and any tie line without a switch (the message names the line).
AreaPartition partition(const FeederModel& model, const std::vector<AreaSpec>& areas);

/// Partition document: a JSON object mapping area names to node-id arrays.
/// Area order is the document order.
std::vector<AreaSpec> parse_partition(const std::string& text);
std::vector<AreaSpec> load_partition(const std::string& path);
std::string serialize_partition(const std::vector<AreaSpec>& areas);

}  // namespace gridrecon::admm
