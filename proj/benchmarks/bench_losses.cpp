#include <benchmark/benchmark.h>

#include <vector>

#include "asymloss/core.hpp"
#include "asymloss/losses.hpp"
#include "asymloss/rng.hpp"

using namespace asymloss;

namespace {

ProbVector random_point(std::size_t K, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> logits(K);
  for (double& z : logits) z = rng.normal();
  return softmax(logits);
}

LossSpec spec_for(int id) {
  switch (id) {
    case 0: return LossSpec::ce();
    case 1: return LossSpec::nce();
    case 2: return LossSpec::amse(10.0, 2.0);
    default: return make_jal(JalFlavor::ce, 1.0, 1.0, 10.0);
  }
}

void BM_LossValue(benchmark::State& state) {
  const LossSpec spec = spec_for(static_cast<int>(state.range(0)));
  const ProbVector p = random_point(static_cast<std::size_t>(state.range(1)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(loss_value(spec, p, ClassLabel{0}));
  state.SetLabel(loss_name(spec));
}

void BM_LossGradLogits(benchmark::State& state) {
  const LossSpec spec = spec_for(static_cast<int>(state.range(0)));
  const std::size_t K = static_cast<std::size_t>(state.range(1));
  Rng rng(5);
  std::vector<double> logits(K);
  for (double& z : logits) z = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(loss_grad_logits(spec, logits, ClassLabel{0}));
  state.SetLabel(loss_name(spec));
}

}  // namespace

BENCHMARK(BM_LossValue)->ArgsProduct({{0, 1, 2, 3}, {10, 100}});
BENCHMARK(BM_LossGradLogits)->ArgsProduct({{0, 1, 2, 3}, {10, 100}});
