// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "fillmass/audio_features.hpp"
#include "fillmass/synth_harness.hpp"

namespace {

using namespace fillmass;

void BM_MagnitudeSpectrum(benchmark::State& state) {
  const auto clip = synth::synth_audio({FillingType::rice, 0.5, 16000, 1});
  const std::span<const double> frame(clip.samples().data(), 800);
  for (auto _ : state) benchmark::DoNotOptimize(audio::magnitude_spectrum(frame));
}
BENCHMARK(BM_MagnitudeSpectrum);

void BM_ClassicalFeatures(benchmark::State& state) {
  const auto clip =
      synth::synth_audio({FillingType::water, static_cast<double>(state.range(0)), 16000, 2});
  for (auto _ : state) benchmark::DoNotOptimize(audio::classical_features(clip));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(clip.size()));
}
BENCHMARK(BM_ClassicalFeatures)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
