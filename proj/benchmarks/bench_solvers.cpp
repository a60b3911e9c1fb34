#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "shapespline/changepoint.hpp"
#include "shapespline/estimator.hpp"
#include "shapespline/primal_oracle.hpp"

using namespace shapespline;

namespace {

// Noisy |t - 0.5| on an equispaced design, quadratic loss with weights 1/N.
Observations kink_data(int n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 0.02);
  Observations obs;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    obs.t.push_back(t);
    obs.y.push_back(std::abs(t - 0.5) + z(rng));
    obs.losses.push_back(LossSpec::quadratic(1.0 / n));
  }
  return obs;
}

FitSettings settings_for(int m, double p) {
  FitSettings s;
  s.m = m;
  s.p = p;
  s.lambda = 1e-4;
  return s;
}

void BM_DualFit(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const auto obs = kink_data(n);
  const auto s = settings_for(m, 1.5);
  const ChangePointConfig cfg(m, {0.5}, m == 1 ? -1 : 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit(obs, s, cfg).dual.objective);
}
BENCHMARK(BM_DualFit)->Args({41, 1})->Args({101, 2})->Args({401, 2})->Args({101, 3})->Unit(benchmark::kMillisecond);

void BM_PrimalOracle(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto obs = kink_data(n);
  const ChangePointConfig cfg(2, {0.5}, 1);
  const DiscretePrimal dp(obs, 2, 2.0, 1e-4, static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_primal(dp, &cfg).objective);
}
BENCHMARK(BM_PrimalOracle)->Args({41, 512})->Args({41, 2048})->Unit(benchmark::kMillisecond);

void BM_ProfileObjective(benchmark::State& state) {
  const auto obs = kink_data(41);
  const auto s = settings_for(1, 2.0);
  double x = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(profile_objective(obs, s, std::vector<double>{x}, -1));
    x = x < 0.7 ? x + 0.01 : 0.3;
  }
}
BENCHMARK(BM_ProfileObjective)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
