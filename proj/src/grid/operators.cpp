#include "gridrecon/grid/operators.hpp"

#include <cmath>

namespace gridrecon::grid {

SparseMatrix loss_matrix(const FeederModel& model, const CurrentIndexing& idx) {
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t li : idx.lines()) {
    const auto& line = model.lines[li];
    const Index k = line.phases.size();
    const Index off = idx.line_offset(li);
    const Eigen::MatrixXd r = line.z.real();
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j) {
        // symmetrize so the form is exactly symmetric even for slightly asymmetric input
        const double v = 0.5 * (r(i, j) + r(j, i));
        if (v == 0.0) continue;
        trips.emplace_back(off + i, off + j, v);
        trips.emplace_back(off + k + i, off + k + j, v);
      }
  }
  SparseMatrix l(idx.dimension(), idx.dimension());
  l.setFromTriplets(trips.begin(), trips.end());
  return l;
}

double line_loss(const LineSpec& line, const Eigen::Ref<const Eigen::VectorXd>& block) {
  const Index k = line.phases.size();
  const Eigen::MatrixXd r = 0.5 * (line.z.real() + line.z.real().transpose());
  const auto a = block.head(k);
  const auto b = block.segment(k, k);
  return a.dot(r * a) + b.dot(r * b);
}

FeederModel shunt_to_loads(const FeederModel& model) {
  FeederModel out = model;
  const double v2 = model.nominal_voltage_v * model.nominal_voltage_v;
  for (auto& line : out.lines) {
    if (!line.y_shunt) continue;
    const auto members = line.phases.members();
    for (std::size_t k = 0; k < members.size(); ++k) {
      const cd s = v2 * std::conj((*line.y_shunt)(static_cast<Index>(k)) * 0.5);
      const int p = index_of(members[k]);
      out.nodes[out.node_index(line.from)].load[p] += s;
      out.nodes[out.node_index(line.to)].load[p] += s;
    }
    line.y_shunt.reset();
  }
  return out;
}

InjectionMap injection_map(double magnitude, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  InjectionMap m;
  m.big_phi << c / magnitude, s / magnitude,
               s / magnitude, -c / magnitude;
  m.phi << magnitude * c, magnitude * s;
  m.phi_bar << magnitude * s, -magnitude * c;
  return m;
}

std::vector<SiteInjectionMap> nominal_injection_map(const FeederModel& model) {
  std::vector<SiteInjectionMap> out;
  for (std::size_t n = 0; n < model.nodes.size(); ++n)
    for (Phase p : model.nodes[n].phases.members())
      out.push_back({n, p, injection_map(model.nominal_voltage_v, model.phase_angles[index_of(p)])});
  return out;
}

}  // namespace gridrecon::grid
