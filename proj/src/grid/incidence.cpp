#include "gridrecon/grid/incidence.hpp"

#include <numeric>
#include <stdexcept>

namespace gridrecon::grid {

CurrentIndexing::CurrentIndexing(const FeederModel& model) {
  std::vector<std::size_t> all(model.lines.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  *this = CurrentIndexing(model, all);
}

CurrentIndexing::CurrentIndexing(const FeederModel& model, const std::vector<std::size_t>& lines)
    : lines_(lines),
      offset_(model.lines.size(), -1),
      width_(model.lines.size(), 0),
      slot_of_(model.lines.size(), std::vector<int>(3, -1)) {
  Index next = 0;
  for (std::size_t li : lines) {
    const auto& line = model.lines.at(li);
    if (offset_[li] >= 0) throw std::invalid_argument("line listed twice in CurrentIndexing");
    const Index k = line.phases.size();
    offset_[li] = next;
    width_[li] = 2 * k;
    Index pos = 0;
    for (Phase p : line.phases.members()) {
      slot_of_[li][index_of(p)] = static_cast<int>(slots_.size());
      slots_.push_back(CurrentSlot{li, p, next + pos, next + k + pos});
      ++pos;
    }
    next += 2 * k;
  }
  dimension_ = next;
}

const CurrentSlot& CurrentIndexing::slot(std::size_t line, Phase p) const {
  const int s = slot_of_.at(line)[index_of(p)];
  if (s < 0) throw std::out_of_range("line has no such phase in this indexing");
  return slots_[static_cast<std::size_t>(s)];
}

IncidenceOperator::IncidenceOperator(const FeederModel& model, const CurrentIndexing& idx)
    : site_of_(model.nodes.size(), std::array<int, 3>{-1, -1, -1}) {
  for (std::size_t n = 0; n < model.nodes.size(); ++n)
    for (Phase p : model.nodes[n].phases.members()) {
      site_of_[n][index_of(p)] = static_cast<int>(sites_.size());
      sites_.push_back(Site{n, p});
    }

  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& s : idx.slots()) {
    const auto& line = model.lines[s.line];
    const int out = site_of_[model.node_index(line.from)][index_of(s.phase)];
    const int in = site_of_[model.node_index(line.to)][index_of(s.phase)];
    trips.emplace_back(2 * out, s.re, 1.0);
    trips.emplace_back(2 * out + 1, s.im, 1.0);
    trips.emplace_back(2 * in, s.re, -1.0);
    trips.emplace_back(2 * in + 1, s.im, -1.0);
  }
  a_.resize(2 * static_cast<Index>(sites_.size()), idx.dimension());
  a_.setFromTriplets(trips.begin(), trips.end());
}

Incidence build_incidence(const FeederModel& model) {
  Incidence out;
  out.indexing = CurrentIndexing(model);
  out.op = IncidenceOperator(model, out.indexing);
  return out;
}

}  // namespace gridrecon::grid
