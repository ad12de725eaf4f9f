#pragma once

// Small hand-built feeders shared by the unit and acceptance tests.

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridrecon/grid/feeder.hpp"

namespace gridrecon::testing {

using grid::FeederModel;
using grid::NodeId;

/// Three-phase line impedance: self r + jx on the diagonal, a quarter of it off-diagonal.
inline Eigen::MatrixXcd coupled_z(double r, double x, int phases = 3) {
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Constant(phases, phases, grid::cd(0.25 * r, 0.25 * x));
  z.diagonal().setConstant(grid::cd(r, x));
  return z;
}

class FeederBuilder {
 public:
  explicit FeederBuilder(double voltage = 2400.0, double price_pcc = 1.0) {
    m_.nominal_voltage_v = voltage;
    m_.price_pcc = price_pcc;
    m_.pcc = 1;
  }

  FeederBuilder& node(NodeId id, const std::string& phases = "abc") {
    grid::NodeSpec n;
    n.id = id;
    n.phases = *grid::PhaseSet::parse(phases);
    m_.nodes.push_back(n);
    return *this;
  }

  FeederBuilder& load(NodeId id, grid::Phase p, double kw, double kvar) {
    find(id).load[grid::index_of(p)] = {kw * 1000.0, kvar * 1000.0};
    return *this;
  }

  FeederBuilder& load_all(NodeId id, double kw, double kvar) {
    for (auto p : find(id).phases.members()) load(id, p, kw, kvar);
    return *this;
  }

  FeederBuilder& dg(NodeId id, double p_max_kw, double cost, double q_kvar = 0.0) {
    grid::DgSpec d;
    d.p_max_w = p_max_kw * 1000.0;
    d.q_min_var = -q_kvar * 1000.0;
    d.q_max_var = q_kvar * 1000.0;
    d.cost_coeff = cost;
    find(id).dg = d;
    return *this;
  }

  FeederBuilder& res(NodeId id, grid::Phase p, grid::ResKind kind, double forecast_kw) {
    find(id).res.push_back({p, kind, 1.25 * forecast_kw * 1000.0, forecast_kw * 1000.0});
    return *this;
  }

  FeederBuilder& xy(NodeId id, double x, double y) {
    find(id).xy_ft = std::array<double, 2>{x, y};
    return *this;
  }

  FeederBuilder& line(NodeId from, NodeId to, double r, double x, double imax, bool switchable = false,
                      double weight = 1.0, const std::string& phases = "abc") {
    grid::LineSpec l;
    l.from = from;
    l.to = to;
    l.phases = *grid::PhaseSet::parse(phases);
    l.z = coupled_z(r, x, l.phases.size());
    l.i_max_a = imax;
    l.switchable = switchable;
    l.weight = weight;
    m_.lines.push_back(l);
    return *this;
  }

  FeederModel build() const {
    m_.validate();
    return m_;
  }

 private:
  grid::NodeSpec& find(NodeId id) {
    for (auto& n : m_.nodes)
      if (n.id == id) return n;
    throw std::out_of_range("builder: unknown node");
  }
  mutable FeederModel m_;
};

/// PCC 1 feeding node 2 over one switchable line; 30 kW per phase at node 2.
inline FeederModel two_node() {
  return FeederBuilder()
      .node(1)
      .node(2)
      .load_all(2, 30.0, 10.0)
      .line(1, 2, 0.2, 0.4, 200.0, true)
      .build();
}

/// PCC 1 reaches the load at 3 through a cheap path (1-3) and a costlier
/// two-hop path (1-2-3). Both 1-3 and 2-3 are switchable.
inline FeederModel triangle(double w13 = 1.0, double w23 = 1.0) {
  return FeederBuilder()
      .node(1)
      .node(2)
      .node(3)
      .load_all(3, 40.0, 15.0)
      .line(1, 2, 0.3, 0.5, 200.0)
      .line(1, 3, 0.4, 0.6, 200.0, true, w13)
      .line(2, 3, 0.4, 0.6, 200.0, true, w23)
      .build();
}

/// Four nodes, a fixed trunk 1-2 and three switchable lines closing two loops.
inline FeederModel four_node() {
  return FeederBuilder()
      .node(1)
      .node(2)
      .node(3)
      .node(4)
      .load_all(3, 35.0, 12.0)
      .load_all(4, 25.0, 8.0)
      .dg(4, 20.0, 0.6)
      .line(1, 2, 0.15, 0.3, 300.0)
      .line(2, 3, 0.5, 0.7, 120.0, true)
      .line(2, 4, 0.6, 0.8, 120.0, true, 1.5)
      .line(3, 4, 0.3, 0.4, 120.0, true)
      .build();
}

/// Seven-node meshed feeder with a dispatchable unit and pv/wind injections,
/// sized so that the scenario program stays feasible under +-3 sigma swings.
inline FeederModel small_meshed() {
  using grid::Phase;
  using grid::ResKind;
  return FeederBuilder(2400.0, 1.0)
      .node(1)
      .node(2)
      .node(3)
      .node(4)
      .node(5)
      .node(6)
      .node(7)
      .load_all(2, 30.0, 12.0)
      .load_all(3, 20.0, 8.0)
      .load_all(4, 25.0, 10.0)
      .load_all(5, 15.0, 6.0)
      .load_all(6, 20.0, 7.0)
      .load_all(7, 10.0, 4.0)
      .dg(5, 30.0, 0.5)
      .res(3, Phase::a, ResKind::pv, 12.0)
      .res(3, Phase::b, ResKind::pv, 12.0)
      .res(6, Phase::c, ResKind::wind, 15.0)
      .res(7, Phase::a, ResKind::wind, 10.0)
      .line(1, 2, 0.10, 0.20, 400.0)
      .line(2, 3, 0.25, 0.40, 200.0)
      .line(3, 4, 0.25, 0.40, 200.0, true)
      .line(2, 5, 0.30, 0.45, 200.0)
      .line(5, 6, 0.30, 0.45, 200.0, true)
      .line(4, 6, 0.35, 0.50, 200.0, true)
      .line(3, 7, 0.30, 0.45, 200.0)
      .line(6, 7, 0.40, 0.55, 200.0, true, 1.5)
      .line(1, 5, 0.20, 0.35, 250.0, true)
      .build();
}

/// Random connected feeder: a random spanning tree on `nodes` nodes plus up to
/// `extra` chords. Between 1 and `max_switches` lines are switchable, chosen so
/// that the tree part through the PCC stays fixed where possible.
inline FeederModel random_feeder(std::mt19937_64& rng, int max_switches = 4) {
  std::uniform_int_distribution<int> n_dist(4, 7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = n_dist(rng);
  FeederBuilder b(2400.0, 1.0);
  for (int i = 1; i <= n; ++i) b.node(i);

  struct Edge {
    int from, to;
  };
  std::vector<Edge> tree, chords;
  for (int i = 2; i <= n; ++i) tree.push_back({std::uniform_int_distribution<int>(1, i - 1)(rng), i});
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      bool used = false;
      for (const auto& e : tree) used = used || (e.from == i && e.to == j);
      if (!used) chords.push_back({i, j});
    }
  std::shuffle(chords.begin(), chords.end(), rng);
  const int n_switch = std::uniform_int_distribution<int>(1, max_switches)(rng);
  const int n_chords = std::min<int>(static_cast<int>(chords.size()), std::uniform_int_distribution<int>(1, n_switch)(rng));
  chords.resize(static_cast<std::size_t>(n_chords));

  // switchable: every chord, then tree edges away from the PCC until n_switch
  int tree_switches = n_switch - n_chords;
  for (const auto& e : tree) {
    const bool sw = tree_switches > 0 && e.from != 1;
    if (sw) --tree_switches;
    b.line(e.from, e.to, 0.1 + 0.4 * u(rng), 0.2 + 0.5 * u(rng), e.from == 1 ? 600.0 : 150.0 + 150.0 * u(rng), sw,
           1.0 + u(rng));
  }
  for (const auto& e : chords)
    b.line(e.from, e.to, 0.1 + 0.4 * u(rng), 0.2 + 0.5 * u(rng), 150.0 + 150.0 * u(rng), true, 1.0 + u(rng));

  for (int i = 2; i <= n; ++i) {
    if (u(rng) < 0.8) b.load_all(i, 5.0 + 30.0 * u(rng), 2.0 + 10.0 * u(rng));
    if (u(rng) < 0.3) b.res(i, grid::Phase::a, u(rng) < 0.5 ? grid::ResKind::pv : grid::ResKind::wind, 5.0 + 10.0 * u(rng));
  }
  if (u(rng) < 0.5) b.dg(std::uniform_int_distribution<int>(2, n)(rng), 10.0 + 20.0 * u(rng), 0.3 + 0.5 * u(rng));
  return b.build();
}

}  // namespace gridrecon::testing
