// Serial versus OpenMP timings of the parallel kernels. Every benchmark takes
// the execution mode as its argument: 0 = serial reference, 1 = parallel.
#include <benchmark/benchmark.h>

#include <random>

#include "gridrecon/reconfig/centralized.hpp"
#include "gridrecon/scenario/sampler.hpp"
#include "gridrecon/socp/prox.hpp"

using namespace gridrecon;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

struct Fixture37 {
  grid::FeederModel model = grid::load_feeder(GRIDRECON_DATA "/feeder37.json");
  scenario::ScenarioSampler sampler = make_sampler(model);
  reconfig::ReconfigSolution solution;

  Fixture37() {
    const auto b = sampler.sample_bounds(2000, 7);
    solution = reconfig::solve_centralized(model, b, reconfig::assemble(model, b, {}, 200.0));
  }
  static scenario::ScenarioSampler make_sampler(const grid::FeederModel& m) {
    auto r = scenario::resolve(m, scenario::load_scenario_spec(GRIDRECON_DATA "/scenario37.json"));
    return {m, std::move(r.errors), std::move(r.correlation)};
  }
  static const Fixture37& get() {
    static const Fixture37 f;
    return f;
  }
};

void BM_ApplyProx(benchmark::State& state) {
  // a program-sized row layout: 4000 linear rows, 3000 groups of 6, 6000 disks
  socp::ProxLayout layout;
  layout.n_eq = 1000;
  layout.n_in = 3000;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  layout.rhs = Eigen::VectorXd::NullaryExpr(4000, [&] { return g(rng); });
  Eigen::Index row = 4000;
  for (int b = 0; b < 3000; ++b, row += 6) {
    layout.block_start.push_back(row);
    layout.block_size.push_back(6);
    layout.block_weight.push_back(0.5);
  }
  layout.ball_start = row;
  layout.ball_radius = Eigen::VectorXd::Constant(6000, 1.0);
  const Eigen::VectorXd rho = Eigen::VectorXd::Constant(layout.rows(), 2.0);
  const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(layout.rows(), [&] { return 2.0 * g(rng); });
  Eigen::VectorXd z(layout.rows());
  for (auto _ : state) {
    z = v;
    socp::apply_prox(layout, rho, z, mode(state));
    benchmark::DoNotOptimize(z.data());
  }
}

void BM_Sample(benchmark::State& state) {
  const auto& f = Fixture37::get();
  for (auto _ : state) benchmark::DoNotOptimize(f.sampler.sample(20000, 3, mode(state)));
}

void BM_SampleBounds(benchmark::State& state) {
  const auto& f = Fixture37::get();
  for (auto _ : state) benchmark::DoNotOptimize(f.sampler.sample_bounds(20000, 3, mode(state)));
}

void BM_ReduceScenarios(benchmark::State& state) {
  const auto& f = Fixture37::get();
  const auto set = f.sampler.sample(20000, 3);
  for (auto _ : state) benchmark::DoNotOptimize(scenario::reduce_scenarios(set, mode(state)));
}

void BM_ValidateLol(benchmark::State& state) {
  const auto& f = Fixture37::get();
  for (auto _ : state)
    benchmark::DoNotOptimize(reconfig::validate_lol(f.model, f.solution, f.sampler, 10000, 11, mode(state)));
}

}  // namespace

BENCHMARK(BM_ApplyProx)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Sample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleBounds)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReduceScenarios)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValidateLol)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
