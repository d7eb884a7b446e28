#include <benchmark/benchmark.h>

#include "asymloss/dataset_io.hpp"
#include "asymloss/losses.hpp"
#include "asymloss/noise.hpp"
#include "asymloss/trainer.hpp"

using namespace asymloss;

namespace {

// One epoch over the 4000-sample blob set used by the robustness runs.
void BM_TrainEpoch(benchmark::State& state) {
  const Dataset clean = synth_dataset(SynthKind::gaussians, 4000, 4, 2, 4.0, 1);
  const Dataset noisy = inject(clean, NoiseSpec::symmetric(0.4), 0);
  const Dataset test_set = synth_dataset(SynthKind::gaussians, 1000, 4, 2, 4.0, 2);
  const LossSpec spec = state.range(0) == 0 ? LossSpec::ce() : make_jal(JalFlavor::ce, 1.0, 1.0, 10.0);
  OptConfig opt;
  opt.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(noisy, test_set, MlpConfig{}, opt, spec));
  state.SetLabel(loss_name(spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(noisy.size()));
}

void BM_NoiseInject(benchmark::State& state) {
  const Dataset clean = synth_dataset(SynthKind::gaussians, 100000, 10, 2, 4.0, 7);
  const NoiseSpec spec = NoiseSpec::symmetric(0.4);
  for (auto _ : state) benchmark::DoNotOptimize(inject(clean, spec, 11));
}

}  // namespace

BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NoiseInject)->Unit(benchmark::kMillisecond);
