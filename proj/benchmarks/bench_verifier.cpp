#include <benchmark/benchmark.h>

#include "asymloss/losses.hpp"
#include "asymloss/noise.hpp"
#include "asymloss/verifier.hpp"

using namespace asymloss;

namespace {

AsymmetryWeights symmetric_weights(double eta, std::size_t K) {
  return weights_from_noise(NoiseSpec::symmetric(eta), ClassLabel{0}, K);
}

// Exhaustive grid for K = 3 vs segment + leakage grid for K = 10.
void BM_Oracle(benchmark::State& state) {
  const std::size_t K = static_cast<std::size_t>(state.range(0));
  const std::size_t resolution = static_cast<std::size_t>(state.range(1));
  const AsymmetryWeights w = symmetric_weights(0.4, K);
  const LossSpec spec = LossSpec::amse(9.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(oracle_minimize(spec, w, resolution));
}

void BM_SupH(benchmark::State& state) {
  const AsymmetryWeights w = symmetric_weights(0.8, 10);
  for (auto _ : state) benchmark::DoNotOptimize(sup_h(2.0, 9.0, w, static_cast<std::size_t>(state.range(0))));
}

void BM_Threshold(benchmark::State& state) {
  const AsymmetryWeights w = symmetric_weights(0.8, 10);
  for (auto _ : state) benchmark::DoNotOptimize(theorem_threshold(2.0, 9.0, w));
}

}  // namespace

BENCHMARK(BM_Oracle)->Args({3, 200})->Args({10, 10000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SupH)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Threshold);
