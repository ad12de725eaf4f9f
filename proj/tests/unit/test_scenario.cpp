#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "gridrecon/error.hpp"
#include "gridrecon/reconfig/centralized.hpp"
#include "gridrecon/scenario/forecast.hpp"
#include "gridrecon/scenario/sample_size.hpp"
#include "gridrecon/scenario/sampler.hpp"
#include "support/feeders.hpp"

using namespace gridrecon;
using namespace gridrecon::scenario;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

std::int64_t big_sample_size(double rho, double beta, std::int64_t m) {
  const Big r(rho), b(beta), md(m);
  const Big k = Big(2) / r * log(Big(1) / b) + Big(2) * md + Big(2) * md / r * log(Big(2) / r);
  return static_cast<std::int64_t>(ceil(k));
}

ScenarioSampler sampler_for(const FeederModel& model, ScenarioSpecDocument doc = {}) {
  auto r = resolve(model, doc);
  return ScenarioSampler(model, std::move(r.errors), std::move(r.correlation));
}

/// Two pv units 4 hops apart plus loads.
FeederModel pv_pair() {
  using grid::Phase;
  return testing::FeederBuilder()
      .node(1)
      .node(2)
      .node(3)
      .node(4)
      .node(5)
      .load_all(2, 10.0, 4.0)
      .res(2, Phase::a, grid::ResKind::pv, 20.0)
      .res(5, Phase::a, grid::ResKind::pv, 20.0)
      .res(4, Phase::b, grid::ResKind::wind, 15.0)
      .line(1, 2, 0.1, 0.2, 300.0)
      .line(2, 3, 0.1, 0.2, 300.0)
      .line(3, 4, 0.1, 0.2, 300.0)
      .line(4, 5, 0.1, 0.2, 300.0)
      .build();
}

}  // namespace

TEST_CASE("sample-size bound matches a 50-digit evaluation") {
  CHECK(min_sample_size(0.01, 0.05, 4) == 4846);
  CHECK(min_sample_size_reconfig(0.1, 0.1, 1, 2) == 418);
  for (double rho : {0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 0.9})
    for (double beta : {1e-9, 1e-6, 1e-3, 0.01, 0.05, 0.1, 0.5, 0.9})
      for (std::int64_t m : {1, 2, 3, 4, 10, 50, 278, 1000, 12345}) {
        CAPTURE(rho);
        CAPTURE(beta);
        CAPTURE(m);
        CHECK(min_sample_size(rho, beta, m) == big_sample_size(rho, beta, m));
      }
  for (std::int64_t g : {0, 1, 7})
    for (std::int64_t lp : {0, 2, 132})
      if (g + lp > 0) CHECK(min_sample_size_reconfig(0.01, 0.05, g, lp) == big_sample_size(0.01, 0.05, 2 * (g + lp)));
}

TEST_CASE("sample-size bound is monotone and rejects bad arguments") {
  CHECK(min_sample_size(0.01, 0.05, 4) > min_sample_size(0.1, 0.05, 4));
  CHECK(min_sample_size(0.01, 0.01, 4) > min_sample_size(0.01, 0.05, 4));
  std::int64_t prev = 0;
  for (std::int64_t lp = 1; lp < 200; ++lp) {
    const auto k = min_sample_size_reconfig(0.01, 0.05, 7, lp);
    CHECK(k > prev);
    prev = k;
  }
  CHECK(min_sample_size(0.999, 0.999, 1) >= 1);
  CHECK_THROWS_AS(min_sample_size(0.0, 0.05, 4), std::domain_error);
  CHECK_THROWS_AS(min_sample_size(1.0, 0.05, 4), std::domain_error);
  CHECK_THROWS_AS(min_sample_size(0.01, 0.0, 4), std::domain_error);
  CHECK_THROWS_AS(min_sample_size(0.01, 1.5, 4), std::domain_error);
  CHECK_THROWS_AS(min_sample_size(0.01, 0.05, 0), std::domain_error);
  CHECK_THROWS_AS(min_sample_size_reconfig(0.01, 0.05, 0, 0), std::domain_error);
  CHECK_THROWS_AS(min_sample_size_reconfig(0.01, 0.05, -1, 3), std::domain_error);
}

TEST_CASE("demand set covers load, renewable and generator phases except the PCC") {
  const auto m = testing::small_meshed();
  const auto d = demand_sites(m);
  const auto z = zero_injection_sites(m);
  CHECK(d.size() == 18);  // six loaded three-phase nodes
  CHECK(z.empty());
  const auto p = pv_pair();
  CHECK(demand_sites(p).size() == 3 + 1 + 1);
  CHECK(zero_injection_sites(p).size() == 12 - 5);
}

TEST_CASE("zero sigmas reproduce the forecast net injection exactly") {
  const auto m = testing::small_meshed();
  ScenarioSpecDocument doc;
  doc.pv_sigma_frac = doc.wind_sigma_frac = 0.0;
  doc.load_sigma_p_frac = doc.load_sigma_q_frac = 0.0;
  const auto s = sampler_for(m, doc);
  const auto set = s.sample(300, 5);
  for (Eigen::Index k = 0; k < set.count(); ++k) {
    CHECK(set.p.row(k).transpose() == s.nominal_p());
    CHECK(set.q.row(k).transpose() == s.nominal_q());
  }
  // node 3 phase a: 12 kW of pv against a 20 kW load
  const auto& sites = s.sites();
  for (std::size_t i = 0; i < sites.size(); ++i)
    if (m.nodes[sites[i].node].id == 3 && sites[i].phase == grid::Phase::a)
      CHECK(s.nominal_p()(static_cast<Eigen::Index>(i)) == doctest::Approx(-8000.0));
}

TEST_CASE("independent errors are centred and truncated at the configured percentiles") {
  const auto m = pv_pair();
  const auto s = sampler_for(m);
  CHECK(s.z_lower() == doctest::Approx(-3.0115).epsilon(1e-4));
  CHECK(s.z_upper() == doctest::Approx(3.0115).epsilon(1e-4));
  const std::int64_t k = 100000;
  const auto set = s.sample(k, 17);
  auto r = resolve(m, {});
  for (Eigen::Index i = 0; i < set.p.cols(); ++i) {
    const auto si = static_cast<std::size_t>(i);
    double sigma_p = r.errors.load_sigma_p[si];
    for (const auto& u : r.errors.res)
      if (Site{u.node, u.phase} == s.sites()[si]) sigma_p = std::hypot(sigma_p, u.sigma_w);
    const double sigma_q = r.errors.load_sigma_q[si];
    const Eigen::ArrayXd dp = set.p.col(i).array() - s.nominal_p()(i);
    const Eigen::ArrayXd dq = set.q.col(i).array() - s.nominal_q()(i);
    CHECK(std::abs(dp.mean()) <= 4.0 * sigma_p / std::sqrt(double(k)) + 1e-9);
    CHECK(std::abs(dq.mean()) <= 4.0 * sigma_q / std::sqrt(double(k)) + 1e-9);
    CHECK(dq.abs().maxCoeff() <= 3.0116 * sigma_q + 1e-9);
  }
  // single-source sites: the pv unit at node 5 and the wind unit at node 4 alone
  for (const auto& u : r.errors.res) {
    const auto it = std::find(s.sites().begin(), s.sites().end(), Site{u.node, u.phase});
    const auto col = static_cast<Eigen::Index>(it - s.sites().begin());
    if (m.nodes[u.node].id == 2) continue;
    const Eigen::ArrayXd dp = set.p.col(col).array() - s.nominal_p()(col);
    CHECK(dp.abs().maxCoeff() <= 3.0116 * u.sigma_w);
    CHECK(dp.abs().maxCoeff() >= 2.9 * u.sigma_w);
  }
}

TEST_CASE("renewable errors become fully correlated as the decay length grows") {
  const auto m = pv_pair();
  ScenarioSpecDocument doc;
  doc.correlation = CorrelationModel::Kind::exponential_distance;
  doc.distance = ScenarioSpecDocument::Distance::hop;
  doc.decay_length = 1e6;
  doc.load_sigma_p_frac = doc.load_sigma_q_frac = 0.0;
  const auto s = sampler_for(m, doc);
  const auto set = s.sample(100000, 23);
  Eigen::Index c2 = -1, c5 = -1, c4 = -1;
  for (std::size_t i = 0; i < s.sites().size(); ++i) {
    const auto id = m.nodes[s.sites()[i].node].id;
    const auto idx = static_cast<Eigen::Index>(i);
    if (id == 2 && s.sites()[i].phase == grid::Phase::a) c2 = idx;
    if (id == 5) c5 = idx;
    if (id == 4) c4 = idx;
  }
  auto corr = [&](Eigen::Index a, Eigen::Index b) {
    const Eigen::ArrayXd x = set.p.col(a).array() - set.p.col(a).mean();
    const Eigen::ArrayXd y = set.p.col(b).array() - set.p.col(b).mean();
    return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
  };
  CHECK(corr(c2, c5) == doctest::Approx(1.0).epsilon(0.02));
  // pv and wind stay independent
  CHECK(std::abs(corr(c2, c4)) < 0.02);

  doc.decay_length = 1.0;
  const auto r = resolve(m, doc);
  const auto c = r.correlation.correlation(r.errors.res);
  // units in node order: pv at 2, wind at 4, pv at 5
  CHECK(c(0, 2) == doctest::Approx(std::exp(-3.0)));
  CHECK(c(0, 1) == 0.0);
}

TEST_CASE("euclidean distances are used when every renewable node has coordinates") {
  auto m = pv_pair();
  m.nodes[1].xy_ft = std::array<double, 2>{0.0, 0.0};
  m.nodes[4].xy_ft = std::array<double, 2>{300.0, 400.0};
  m.nodes[3].xy_ft = std::array<double, 2>{0.0, 100.0};
  ScenarioSpecDocument doc;
  doc.correlation = CorrelationModel::Kind::exponential_distance;
  doc.decay_length = 500.0;
  const auto r = resolve(m, doc);
  CHECK(r.correlation.distance(0, 2) == doctest::Approx(500.0));
  CHECK(r.correlation.distance(0, 1) == doctest::Approx(100.0));
  doc.distance = ScenarioSpecDocument::Distance::hop;
  CHECK(resolve(m, doc).correlation.distance(0, 2) == 3.0);
  m.nodes[3].xy_ft.reset();
  doc.distance = ScenarioSpecDocument::Distance::euclidean;
  CHECK_THROWS_AS(resolve(m, doc), ValidationError);
}

TEST_CASE("a non-PSD correlation is rejected") {
  const auto m = pv_pair();
  auto r = resolve(m, {});
  r.correlation.kind = CorrelationModel::Kind::exponential_distance;
  r.correlation.decay_length = 1.0;
  r.correlation.distance = Eigen::MatrixXd::Zero(3, 3);
  // three pv units: 0 ~ 1 and 0 ~ 2 perfectly, 1 and 2 nearly independent
  r.errors.res[1].kind = grid::ResKind::pv;
  r.correlation.distance(0, 1) = r.correlation.distance(1, 0) = 0.0;
  r.correlation.distance(0, 2) = r.correlation.distance(2, 0) = 0.0;
  r.correlation.distance(1, 2) = r.correlation.distance(2, 1) = 50.0;
  CHECK_THROWS_AS(ScenarioSampler(m, r.errors, r.correlation), ValidationError);
}

TEST_CASE("sampling is deterministic and independent of the execution mode") {
  const auto m = testing::small_meshed();
  ScenarioSpecDocument doc;
  doc.correlation = CorrelationModel::Kind::exponential_distance;
  doc.decay_length = 2.0;
  const auto s = sampler_for(m, doc);
  const auto a = s.sample(1000, 99, Execution::serial);
  const auto b = s.sample(1000, 99, Execution::parallel);
  const auto c = s.sample(1000, 99, Execution::parallel);
  CHECK(a.p == b.p);
  CHECK(a.q == b.q);
  CHECK(b.p == c.p);
  CHECK_FALSE(s.sample(1000, 100).p == a.p);

  const auto bounds = s.sample_bounds(1000, 99, Execution::serial);
  const auto reduced = reduce_scenarios(a, Execution::parallel);
  CHECK(bounds.p == reduced.p);
  CHECK(bounds.q == reduced.q);
  CHECK(s.sample_bounds(1000, 99, Execution::parallel).p == bounds.p);
  CHECK_THROWS_AS(s.sample(0, 1), std::domain_error);
}

TEST_CASE("reduction takes the per-site minimum") {
  ScenarioSet set;
  set.sites = {{0, grid::Phase::a}, {1, grid::Phase::b}};
  set.p.resize(3, 2);
  set.q.resize(3, 2);
  set.p << 3, -1, 1, -5, 2, 0;
  set.q << 0, 0, 0, 0, 0, 0;
  const auto b = reduce_scenarios(set);
  CHECK(b.p(0) == 1.0);
  CHECK(b.p(1) == -5.0);

  ScenarioSet one = set;
  one.p = set.p.topRows(1);
  one.q = set.q.topRows(1);
  CHECK(reduce_scenarios(one).p == one.p.row(0).transpose());
}

TEST_CASE("reduced bounds accept exactly the points that satisfy every sampled constraint") {
  const auto m = testing::small_meshed();
  const auto s = sampler_for(m);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-3.0, 0.5);
  int feasible = 0, infeasible = 0, mismatches = 0;
  for (int set_no = 0; set_no < 20; ++set_no) {
    const auto set = s.sample(25, 1000 + static_cast<std::uint64_t>(set_no));
    const auto reduced = reduce_scenarios(set);
    const auto problem = reconfig::assemble(m, reduced, {}, 0.0);
    // a point 500 W inside every reduced bound, then perturbed by a random amount
    InjectionBounds inner = reduced;
    inner.p.array() -= 500.0;
    inner.q.array() -= 500.0;
    const auto sol = socp::solve(reconfig::assemble(m, inner, {}, 0.0).program);
    REQUIRE(sol.status == socp::Status::optimal);
    for (int pt = 0; pt < 5; ++pt) {
      Eigen::VectorXd x = sol.x;
      const double scale = std::pow(10.0, u(rng));
      for (auto& v : x) v += scale * g(rng);

      const Eigen::VectorXd lhs = problem.program.a_in * x;
      const bool ok_reduced = (lhs.array() <= problem.program.b_in.array()).all();
      bool ok_all = true;
      for (Eigen::Index k = 0; k < set.count(); ++k) {
        InjectionBounds single{set.sites, set.p.row(k).transpose(), set.q.row(k).transpose()};
        const auto pk = reconfig::assemble(m, single, {}, 0.0);
        ok_all = ok_all && ((pk.program.a_in * x).array() <= pk.program.b_in.array()).all();
      }
      mismatches += ok_reduced != ok_all;
      (ok_all ? feasible : infeasible) += 1;
    }
  }
  CHECK(mismatches == 0);
  // both outcomes are exercised
  CHECK(feasible > 5);
  CHECK(infeasible > 5);
}

TEST_CASE("scenario documents round-trip and reject unknown keys") {
  const std::string text = R"({"res_sigma_frac": {"pv": 0.1, "wind": 0.3},
    "load_sigma_overrides": [{"node": 3, "p": 0.2, "q": 0.0}],
    "truncation_pct": [1, 99],
    "correlation": {"kind": "exponential-distance", "decay_length": 2.5, "distance": "hop"}})";
  const auto doc = parse_scenario_spec(text);
  CHECK(doc.pv_sigma_frac == 0.1);
  CHECK(doc.wind_sigma_frac == 0.3);
  CHECK(doc.load_overrides.at(3).first == 0.2);
  CHECK(doc.lower_pct == 1.0);
  CHECK(doc.correlation == CorrelationModel::Kind::exponential_distance);
  CHECK(doc.distance == ScenarioSpecDocument::Distance::hop);
  const auto again = parse_scenario_spec(serialize_scenario_spec(doc));
  CHECK(again.decay_length == 2.5);
  CHECK(again.load_overrides == doc.load_overrides);

  CHECK_THROWS_AS(parse_scenario_spec(R"({"sigma": 1})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_spec(R"({"res_sigma_frac": {"pv": -0.1}})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_spec(R"({"correlation": {"kind": "gaussian"}})"), ParseError);

  const auto r = resolve(testing::small_meshed(), doc);
  for (std::size_t i = 0; i < r.errors.sites.size(); ++i)
    if (r.errors.sites[i].node == 2) CHECK(r.errors.load_sigma_p[i] == doctest::Approx(0.2 * 20000.0));
  ScenarioSpecDocument bad;
  bad.load_overrides[99] = {0.1, 0.1};
  CHECK_THROWS_AS(resolve(testing::small_meshed(), bad), ValidationError);
}

TEST_CASE("epsilon samples are bootstrapped into the scenarios") {
  const auto m = testing::small_meshed();
  const auto dir = std::filesystem::temp_directory_path() / "gridrecon_eps_test";
  std::filesystem::create_directories(dir);
  const auto csv = (dir / "eps.csv").string();
  {
    std::ofstream out(csv);
    out << "2:a:p,2:a:q\n100,-5\n300,-5\n";
  }
  ScenarioSpecDocument doc;
  doc.pv_sigma_frac = doc.wind_sigma_frac = doc.load_sigma_p_frac = doc.load_sigma_q_frac = 0.0;
  doc.epsilon_csv = csv;
  const auto s = sampler_for(m, doc);
  const auto set = s.sample(400, 3);
  const Eigen::ArrayXd d = set.p.col(0).array() - s.nominal_p()(0);
  CHECK((((d - 100.0).abs() < 1e-9) || ((d - 300.0).abs() < 1e-9)).all());
  CHECK((d - 100.0).abs().minCoeff() < 1e-9);
  CHECK((d - 300.0).abs().minCoeff() < 1e-9);
  CHECK((set.p.col(1).array() == s.nominal_p()(1)).all());

  {
    std::ofstream out(csv);
    out << "1:a:p\n1\n";  // the PCC is not a demand site
  }
  CHECK_THROWS_AS(sampler_for(m, doc), ParseError);
  {
    std::ofstream out(csv);
    out << "2:a:p\nabc\n";
  }
  CHECK_THROWS_AS(sampler_for(m, doc), ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scenario export has one line per scenario and site") {
  const auto m = testing::small_meshed();
  const auto s = sampler_for(m);
  const auto set = s.sample(3, 1);
  std::ostringstream out;
  write_scenarios_csv(set, m, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,node,phase,p_w,q_var");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3 * 18);
}
