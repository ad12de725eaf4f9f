#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/SparseCore>

#include "gridrecon/grid/feeder.hpp"

namespace gridrecon::grid {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// One (line, phase) pair of the stacked current vector xi.
struct CurrentSlot {
  std::size_t line = 0;  // index into FeederModel::lines
  Phase phase = Phase::a;
  Index re = 0;  // coordinate of Re{I}
  Index im = 0;  // coordinate of Im{I}
};

/// Coordinate system of xi. Each line owns a contiguous block laid out as
/// [Re i_mn ; Im i_mn] with phases ordered a < b < c, and blocks follow the
/// order of the line list passed in.
class CurrentIndexing {
 public:
  CurrentIndexing() = default;
  /// All lines of the model.
  explicit CurrentIndexing(const FeederModel& model);
  /// A subset of the model's lines, in the given order.
  CurrentIndexing(const FeederModel& model, const std::vector<std::size_t>& lines);

  Index dimension() const { return dimension_; }
  const std::vector<CurrentSlot>& slots() const { return slots_; }
  const std::vector<std::size_t>& lines() const { return lines_; }

  bool has_line(std::size_t line) const { return line < offset_.size() && offset_[line] >= 0; }
  /// First coordinate of the line's block; the block has 2|P_mn| coordinates.
  Index line_offset(std::size_t line) const { return offset_.at(line); }
  Index line_width(std::size_t line) const { return width_.at(line); }
  /// Coordinates (re, im) of the line's phase, or throws if absent.
  const CurrentSlot& slot(std::size_t line, Phase p) const;

 private:
  std::vector<CurrentSlot> slots_;
  std::vector<std::size_t> lines_;
  std::vector<Index> offset_;  // per model line, -1 when not indexed
  std::vector<Index> width_;
  std::vector<std::vector<int>> slot_of_;  // per model line, per phase: slot index or -1
  Index dimension_ = 0;
};

/// Kirchhoff operators A_n^phi: for every (node, phase) a pair of rows mapping
/// xi to the (Re, Im) injected current, +1 on lines leaving the node and -1 on
/// lines entering it.
class IncidenceOperator {
 public:
  struct Site {
    std::size_t node = 0;  // index into FeederModel::nodes
    Phase phase = Phase::a;
  };

  IncidenceOperator() = default;
  IncidenceOperator(const FeederModel& model, const CurrentIndexing& idx);

  /// Stacked operator: rows 2s and 2s+1 belong to sites()[s].
  const SparseMatrix& matrix() const { return a_; }
  const std::vector<Site>& sites() const { return sites_; }
  /// Site number for (node index, phase), or -1 when the node lacks the phase.
  int site(std::size_t node, Phase p) const { return site_of_.at(node)[index_of(p)]; }
  /// The 2 x dim row pair for one site.
  SparseMatrix rows(int site) const { return a_.middleRows(2 * site, 2); }

 private:
  SparseMatrix a_;
  std::vector<Site> sites_;
  std::vector<std::array<int, 3>> site_of_;
};

struct Incidence {
  CurrentIndexing indexing;
  IncidenceOperator op;
};

Incidence build_incidence(const FeederModel& model);

}  // namespace gridrecon::grid
