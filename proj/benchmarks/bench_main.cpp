#include <benchmark/benchmark.h>

#include "dsmp/absde.hpp"
#include "dsmp/experiments.hpp"
#include "dsmp/models.hpp"

using namespace dsmp;

namespace {

void BM_ForwardPath(benchmark::State& state) {
  const Model m = builtin_model("bounded");
  const TimeGrid grid = build_grid(1.0, 0.25, static_cast<int>(state.range(0)));
  const NoisePath noise = sample_noise(grid, SeedSpec{1, 0}, m.jump_intensity, m.marks);
  const Control u = Control::zero();
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_path(m, u, grid, noise, Measure::physical));
  }
  state.SetItemsProcessed(state.iterations() * grid.steps);
}
BENCHMARK(BM_ForwardPath)->Arg(5)->Arg(50);

void BM_Regression(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  std::vector<std::vector<double>> features(static_cast<std::size_t>(rows),
                                            std::vector<double>(3));
  std::vector<double> values(static_cast<std::size_t>(rows));
  std::mt19937_64 eng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < rows; ++i) {
    for (auto& f : features[static_cast<std::size_t>(i)]) f = g(eng);
    values[static_cast<std::size_t>(i)] = g(eng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(polynomial_regression(features, values, 2));
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_Regression)->Arg(2000)->Arg(10000);

void BM_AdjointSweep(benchmark::State& state) {
  const Model m = make_investment_adjoint_model(0.05, 0.5);
  const TimeGrid grid = build_grid(1.0, 0.4, 20);
  const ForwardEnsemble ens =
      simulate_ensemble(m, Control::zero(), grid, 11, static_cast<int>(state.range(0)));
  RegressionConfig cfg;
  const PSolution psol = solve_p_equation(m, Control::zero(), ens, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_adjoint(m, Control::zero(), ens, psol, cfg));
  }
}
BENCHMARK(BM_AdjointSweep)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
