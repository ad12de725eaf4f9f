#include <doctest.h>

#include <random>
#include <sstream>

#include "gridrecon/admm/distributed.hpp"
#include "gridrecon/admm/partition.hpp"
#include "gridrecon/admm/subgradient.hpp"
#include "gridrecon/error.hpp"
#include "gridrecon/socp/prox.hpp"
#include "gridrecon/scenario/sample_size.hpp"
#include "support/feeders.hpp"

using namespace gridrecon;
using namespace gridrecon::admm;

namespace {

struct Case {
  FeederModel model;
  InjectionBounds bounds;
  AreaPartition part;
};

/// small_meshed split into A1 = {4}, A2 = {6}; the manager keeps 1, 2, 3, 5, 7.
/// Ties: 3-4 (A1|MGM), 4-6 (A1|A2), 5-6 and 6-7 (A2|MGM).
Case small_case() {
  Case c;
  c.model = testing::small_meshed();
  auto r = scenario::resolve(c.model, {});
  scenario::ScenarioSampler s(c.model, r.errors, r.correlation);
  c.bounds = s.sample_bounds(2000, 4);
  c.part = partition(c.model, {{"A1", {4}}, {"A2", {6}}});
  return c;
}

socp::SolverSettings tight() {
  socp::SolverSettings s;
  s.tol_primal = s.tol_dual = 1e-10;
  s.tol_feasibility = 1e-9;
  s.max_iters = 200000;
  return s;
}

double pair_gap(const AreaPartition& part, std::size_t p, const std::vector<VectorXd>& xa,
                const std::vector<VectorXd>& xb) {
  double g2 = 0.0;
  for (auto t : part.pairs[p].ties) g2 += (xa[t] - xb[t]).squaredNorm();
  return std::sqrt(g2);
}

}  // namespace

TEST_CASE("partition of the 37-node fixture") {
  const auto m = grid::load_feeder(GRIDRECON_FIXTURES "/feeder37.json");
  const auto part = partition(m, load_partition(GRIDRECON_FIXTURES "/partition3.json"));
  REQUIRE(part.area_count() == 4);
  CHECK(part.names == std::vector<std::string>{"A1", "A2", "A3", "MGM"});
  std::vector<std::string> ties;
  for (const auto& t : part.ties) ties.push_back(std::to_string(m.lines[t.line].from) + "-" + std::to_string(m.lines[t.line].to));
  for (const char* expect : {"8-14", "8-11", "15-16"})
    CHECK(std::find(ties.begin(), ties.end(), expect) != ties.end());
  for (const auto& t : part.ties) {
    CHECK(m.lines[t.line].switchable);
    CHECK(t.first < t.second);
    CHECK(part.node_area[m.node_index(m.lines[t.line].from)] != part.node_area[m.node_index(m.lines[t.line].to)]);
  }
  // A1 borders only the manager; A2 borders A3 and the manager
  CHECK(part.area_pairs(0).size() == 1);
  CHECK(part.area_pairs(1).size() == 2);
  CHECK(part.nodes[part.manager()].size() == 37 - 5 - 4 - 3);
  const auto internal = part.internal_lines(m, 0);
  for (auto l : internal) {
    CHECK(part.node_area[m.node_index(m.lines[l].from)] == 0);
    CHECK(part.node_area[m.node_index(m.lines[l].to)] == 0);
  }
}

TEST_CASE("partition errors") {
  const auto m = testing::small_meshed();
  CHECK_THROWS_WITH_AS(partition(m, {{"A", {4, 6}}, {"B", {6}}}), doctest::Contains("6"), ValidationError);
  CHECK_THROWS_AS(partition(m, {{"A", {42}}}), ValidationError);
  CHECK_THROWS_AS(partition(m, {{"A", {4}}, {"A", {6}}}), ValidationError);
  CHECK_THROWS_AS(partition(m, {{"", {4}}}), ValidationError);
  CHECK_THROWS_AS(partition(m, {{"MGM", {4}}}), ValidationError);
  // 2-3 has no switch
  CHECK_THROWS_WITH_AS(partition(m, {{"A", {3, 4}}}), doctest::Contains("(2,3)"), ValidationError);
  CHECK_THROWS_AS(parse_partition(R"({"A": [1, "x"]})"), ParseError);
  CHECK_THROWS_AS(parse_partition(R"([1, 2])"), ParseError);

  const auto specs = parse_partition(R"({"zeta": [4], "alpha": [6]})");
  CHECK(specs[0].name == "zeta");
  const auto again = parse_partition(serialize_partition(specs));
  CHECK(again[1].name == "alpha");
  CHECK(again[1].nodes == std::vector<grid::NodeId>{6});
}

TEST_CASE("dual update formulas") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 100.0);
  const double kappa = 2.0;
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd a(6), b(6), c(6);
    for (Index i = 0; i < 6; ++i) {
      a(i) = g(rng);
      b(i) = g(rng);
      c(i) = g(rng);
    }
    detail::DualVector ga = detail::DualVector::Zero(6), gb = ga, mu = ga;
    detail::dual_update(kappa, a, b, c, ga, gb, mu);
    for (Index i = 0; i < 6; ++i) {
      CHECK(static_cast<double>(ga(i)) == doctest::Approx(2.0 / 3.0 * (2 * a(i) - b(i) - c(i))));
      CHECK(static_cast<double>(gb(i)) == doctest::Approx(2.0 / 3.0 * (2 * b(i) - a(i) - c(i))));
      CHECK(static_cast<double>(mu(i)) == doctest::Approx(2.0 / 3.0 * (a(i) + b(i) - 2 * c(i))));
    }
    CHECK(static_cast<double>((ga + gb - mu).cwiseAbs().maxCoeff()) <= 1e-12);

    // consensus is a fixed point
    const detail::DualVector ga0 = ga, gb0 = gb, mu0 = mu;
    detail::dual_update(kappa, a, a, a, ga, gb, mu);
    CHECK(ga == ga0);
    CHECK(gb == gb0);
    CHECK(mu == mu0);
  }
}

TEST_CASE("tie-line update") {
  const auto c = small_case();
  std::size_t l46 = 0;
  for (const auto& t : c.part.ties)
    if (c.model.lines[t.line].from == 4 && c.model.lines[t.line].to == 6) l46 = t.line;
  REQUIRE(c.model.lines[l46].from == 4);
  const double kappa = 1.5, lambda = 10.0;
  const TieUpdate upd(c.model, {}, lambda, l46, kappa);
  CHECK(upd.width() == 6);
  CHECK(upd(VectorXd::Zero(6), VectorXd::Zero(6)).isZero(0.0));

  // without a loss term and with inactive disks it is a scaled block soft threshold
  CostSpec op;
  op.kind = CostSpec::Kind::operation;
  const TieUpdate plain(c.model, op, lambda, l46, kappa);
  VectorXd v(6);
  v << 30, -20, 10, 5, 25, -15;
  const VectorXd expect = socp::block_soft_threshold(v, lambda * c.model.lines[l46].weight) / kappa;
  CHECK((plain(v, VectorXd::Zero(6)) - expect).norm() <= 1e-9);

  // a tiny disk pins each phase at its radius
  auto tiny = c.model;
  tiny.lines[l46].i_max_a = 0.5;
  const TieUpdate capped(tiny, op, 0.0, l46, kappa);
  const VectorXd x = capped(1000.0 * v, VectorXd::Zero(6));
  for (Index p = 0; p < 3; ++p) CHECK(std::hypot(x(p), x(3 + p)) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("area subproblem matches an independent solve of the local program") {
  const auto c = small_case();
  const double kappa = 1.0, lambda = 10.0;
  auto areas = detail::build_areas(c.model, c.bounds, {}, lambda, c.part, kappa, tight());
  REQUIRE(areas.size() == 3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 5.0);
  for (auto& area : areas) {
    CAPTURE(c.part.names[area.area()]);
    for (int trial = 0; trial < 2; ++trial) {
      std::vector<VectorXd> linear;
      for (std::size_t k = 0; k < area.ties().size(); ++k) {
        VectorXd l = VectorXd::Zero(area.tie_width(k));
        if (trial == 1)
          for (auto& e : l) e = g(rng);
        linear.push_back(l);
      }
      const auto got = area.solve(linear);
      REQUIRE(got.status == socp::Status::optimal);

      // the same subproblem written out by hand: ridge and linear term on the tie copies
      auto prog = area.problem().program;
      std::vector<Eigen::Triplet<double>> ridge;
      for (std::size_t k = 0; k < area.ties().size(); ++k)
        for (Index i = 0; i < area.tie_width(k); ++i) {
          ridge.emplace_back(area.tie_offset(k) + i, area.tie_offset(k) + i, kappa);
          prog.c(area.tie_offset(k) + i) += linear[k](i);
        }
      socp::SparseMatrix r(prog.n, prog.n);
      r.setFromTriplets(ridge.begin(), ridge.end());
      prog.q = prog.q + r;
      const auto ref = socp::solve(prog, tight());
      REQUIRE(ref.status == socp::Status::optimal);
      CHECK((got.x - ref.x).norm() <= 1e-6 * (1.0 + ref.x.norm()));
    }
  }
}

TEST_CASE("simplified iteration reproduces the unsimplified augmented-Lagrangian steps") {
  const auto c = small_case();
  const double kappa = 1.0, lambda = 10.0;
  const int iters = 40;

  AdmmSettings s;
  s.kappa = kappa;
  s.max_iters = iters;
  s.tol = 0.0;
  s.local = tight();
  s.exec = Execution::serial;
  const auto simplified = run_admm(c.model, c.bounds, {}, lambda, c.part, s);
  REQUIRE(simplified.max_gap.size() == static_cast<std::size_t>(iters));

  // consensus variable z per tie; constraints xa = z, xb = z, chi = z with multipliers ga, gb, nu
  auto areas = detail::build_areas(c.model, c.bounds, {}, lambda, c.part, kappa, tight());
  const auto nt = c.part.ties.size();
  std::vector<TieUpdate> tie;
  std::vector<VectorXd> xa(nt), xb(nt), chi(nt), z(nt), ga(nt), gb(nt), nu(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    tie.emplace_back(c.model, CostSpec{}, lambda, c.part.ties[t].line, kappa);
    for (auto* v : {&xa[t], &xb[t], &chi[t], &z[t], &ga[t], &gb[t], &nu[t]}) *v = VectorXd::Zero(tie[t].width());
  }
  std::vector<VectorXd> area_x(areas.size());
  for (int it = 0; it < iters; ++it) {
    // primal blocks against the fixed z
    for (std::size_t s_i = 0; s_i < areas.size(); ++s_i) {
      std::vector<VectorXd> linear;
      for (auto t : areas[s_i].ties()) {
        const bool first = c.part.ties[t].first == areas[s_i].area();
        linear.push_back((first ? ga[t] : gb[t]) - kappa * z[t]);
      }
      const auto r = areas[s_i].solve(linear);
      area_x[s_i] = r.x;
    }
    for (std::size_t t = 0; t < nt; ++t) chi[t] = tie[t](kappa * z[t] - nu[t], chi[t]);
    for (std::size_t s_i = 0; s_i < areas.size(); ++s_i)
      for (std::size_t k = 0; k < areas[s_i].ties().size(); ++k) {
        const auto t = areas[s_i].ties()[k];
        const bool first = c.part.ties[t].first == areas[s_i].area();
        (first ? xa[t] : xb[t]) = area_x[s_i].segment(areas[s_i].tie_offset(k), areas[s_i].tie_width(k));
      }
    // z minimizes the augmented Lagrangian with the multipliers included
    for (std::size_t t = 0; t < nt; ++t) z[t] = (xa[t] + xb[t] + chi[t]) / 3.0 + (ga[t] + gb[t] + nu[t]) / (3.0 * kappa);
    // multiplier ascent
    for (std::size_t t = 0; t < nt; ++t) {
      ga[t] += kappa * (xa[t] - z[t]);
      gb[t] += kappa * (xb[t] - z[t]);
      nu[t] += kappa * (chi[t] - z[t]);
    }
    double max_gap = 0.0;
    for (std::size_t p = 0; p < c.part.pairs.size(); ++p) max_gap = std::max(max_gap, pair_gap(c.part, p, xa, xb));
    CAPTURE(it);
    CHECK(max_gap == doctest::Approx(simplified.max_gap[static_cast<std::size_t>(it)]).epsilon(1e-4));
  }
  const auto whole = reconfig::assemble(c.model, c.bounds, {}, lambda);
  const VectorXd x = detail::merge(c.model, whole, areas, area_x, c.part, chi);
  CHECK((x.head(whole.xi_dim) - simplified.solution.xi).norm() <= 1e-5 * simplified.solution.xi.norm());
}

TEST_CASE("distributed run converges to the centralized solution") {
  const auto c = small_case();
  const double lambda = 10.0;
  const auto central =
      reconfig::solve_centralized(c.model, c.bounds, reconfig::assemble(c.model, c.bounds, {}, lambda));
  REQUIRE(central.status == socp::Status::optimal);
  AdmmSettings s;
  s.kappa = 1.0;
  s.reference = central.xi;
  const auto r = run_admm(c.model, c.bounds, {}, lambda, c.part, s);
  REQUIRE(r.converged);
  CHECK((r.solution.xi - central.xi).norm() <= 1e-4 * central.xi.norm());
  CHECK(r.solution.line_open == central.line_open);
  for (double d : r.dual_sum) CHECK(d <= 1e-12);
  CHECK(r.trace.back().dist_to_central.value() <= 1e-4);
  CHECK(r.solution.status == socp::Status::optimal);
  CHECK(r.solution.max_violation <= 1e-5);
  CHECK(iterations_to_gap(r.max_gap, 1e-4) > 0);
  CHECK(iterations_to_gap(r.max_gap, 1e-4) <= r.iterations);
}

TEST_CASE("area solves give the same trace serially and concurrently") {
  const auto c = small_case();
  AdmmSettings s;
  s.max_iters = 60;
  s.tol = 0.0;
  s.exec = Execution::serial;
  const auto a = run_admm(c.model, c.bounds, {}, 10.0, c.part, s);
  s.exec = Execution::parallel;
  const auto b = run_admm(c.model, c.bounds, {}, 10.0, c.part, s);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(std::abs(a.trace[i].gap - b.trace[i].gap) <= 1e-12);
    CHECK(std::abs(a.trace[i].objective - b.trace[i].objective) <= 1e-12 * std::abs(a.trace[i].objective));
  }
  CHECK(a.solution.xi == b.solution.xi);
}

TEST_CASE("message log follows the two-way exchange") {
  const auto c = small_case();
  AdmmSettings s;
  s.max_iters = 3;
  s.tol = 0.0;
  const auto r = run_admm(c.model, c.bounds, {}, 10.0, c.part, s);
  // per iteration: A1 has neighbours {A2, MGM}, A2 has {A1, MGM}
  REQUIRE(r.messages.size() == 3 * 2 * 4);
  for (int it = 1; it <= 3; ++it) {
    std::map<std::string, int> up, down;
    std::map<std::string, std::size_t> up_bytes;
    for (const auto& m : r.messages)
      if (m.iter == it) {
        if (m.receiver == "MGM") {
          ++up[m.sender];
          up_bytes[m.sender] += m.bytes;
        } else {
          CHECK(m.sender == "MGM");
          ++down[m.receiver];
        }
      }
    for (std::size_t a = 0; a + 1 < c.part.area_count(); ++a) {
      const auto& name = c.part.names[a];
      CHECK(up[name] == static_cast<int>(c.part.area_pairs(a).size()));
      CHECK(down[name] == up[name]);
    }
    // A1 reports 3-4 and 4-6, A2 reports 4-6, 5-6 and 6-7: six doubles per three-phase line
    CHECK(up_bytes["A1"] == 2 * 6 * sizeof(double));
    CHECK(up_bytes["A2"] == 3 * 6 * sizeof(double));
  }
  std::ostringstream out;
  write_messages_csv(r.messages, out);
  CHECK(out.str().rfind("iter,sender,receiver,bytes\n1,A1,MGM,48\n", 0) == 0);
}

TEST_CASE("single-area partitions reduce to the centralized solve") {
  const auto m = testing::small_meshed();
  auto r = scenario::resolve(m, {});
  scenario::ScenarioSampler s(m, r.errors, r.correlation);
  const auto b = s.sample_bounds(500, 2);
  std::vector<grid::NodeId> all;
  for (const auto& n : m.nodes) all.push_back(n.id);
  const auto part = partition(m, {{"ALL", all}});
  CHECK(part.ties.empty());
  CHECK(part.nodes[part.manager()].empty());

  const auto central = reconfig::solve_centralized(m, b, reconfig::assemble(m, b, {}, 10.0), tight());
  AdmmSettings as;
  as.local = tight();
  const auto admm = run_admm(m, b, {}, 10.0, part, as);
  CHECK(admm.converged);
  CHECK(admm.iterations <= 2);
  CHECK((admm.solution.xi - central.xi).norm() <= 1e-6 * central.xi.norm());
  SubgradientSettings ss;
  ss.local = tight();
  const auto sub = subgradient_baseline(m, b, {}, 10.0, part, ss);
  CHECK((sub.solution.xi - central.xi).norm() <= 1e-6 * central.xi.norm());
}

TEST_CASE("subgradient baseline") {
  const auto c = small_case();
  SubgradientSettings s;
  s.step = 0.0;
  s.max_iters = 10;
  const auto still = subgradient_baseline(c.model, c.bounds, {}, 10.0, c.part, s);
  REQUIRE(still.max_gap.size() == 10);
  for (double g : still.max_gap) CHECK(g == doctest::Approx(still.max_gap.front()).epsilon(1e-9));

  s.step = 0.1;
  s.max_iters = 200;
  const auto moving = subgradient_baseline(c.model, c.bounds, {}, 10.0, c.part, s);
  CHECK(moving.max_gap.back() < moving.max_gap.front());
  for (double d : moving.max_gap) CHECK(std::isfinite(d));
  s.step = -1.0;
  CHECK_THROWS_AS(subgradient_baseline(c.model, c.bounds, {}, 10.0, c.part, s), ValidationError);
}

TEST_CASE("an infeasible area aborts the run with its name") {
  auto c = small_case();
  for (auto& l : c.model.lines)
    if ((l.from == 3 && l.to == 4) || (l.from == 4 && l.to == 6)) l.i_max_a = 0.01;
  AdmmSettings s;
  s.max_iters = 5;
  CHECK_THROWS_WITH_AS(run_admm(c.model, c.bounds, {}, 10.0, c.part, s), doctest::Contains("A1"), ValidationError);
}

TEST_CASE("settings validation, injected latency and trace export") {
  const auto c = small_case();
  AdmmSettings s;
  s.kappa = 0.0;
  CHECK_THROWS_AS(run_admm(c.model, c.bounds, {}, 10.0, c.part, s), ValidationError);
  s.kappa = 1.0;
  s.max_iters = 3;
  s.tol = 0.0;
  s.latency = std::chrono::milliseconds(5);
  const auto r = run_admm(c.model, c.bounds, {}, 10.0, c.part, s);
  CHECK(r.seconds >= 0.03);
  CHECK_FALSE(r.converged);
  CHECK(r.solution.status == socp::Status::max_iterations);

  std::ostringstream out;
  write_trace_csv(r.trace, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,tie_id,gap,objective,dist_to_central");
  std::getline(in, line);
  CHECK(line.rfind("1,A1|A2,", 0) == 0);
  CHECK(line.back() == ',');  // no reference, blank distance
  CHECK(r.trace.size() == 3 * c.part.pairs.size());

  CHECK(iterations_to_gap({5.0, 1e-5, 1e-3, 1e-5, 1e-6}, 1e-4) == 4);
  CHECK(iterations_to_gap({5.0, 1.0}, 1e-4) == -1);
  CHECK(iterations_to_gap({}, 1e-4) == -1);
}
