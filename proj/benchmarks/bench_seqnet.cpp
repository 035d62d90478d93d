// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "fillmass/seqnet.hpp"

namespace {

using namespace fillmass;

seqnet::Matrix random_matrix(int rows, int cols, Rng& rng) {
  seqnet::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

void BM_Classify(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const auto model = seqnet::SequenceClassifier::random(128, hidden, 5, 4, 1);
  Rng rng(2);
  const auto seq = random_matrix(3, 128, rng);
  for (auto _ : state) benchmark::DoNotOptimize(seqnet::classify(model.gru, model.head, seq, 3));
}
BENCHMARK(BM_Classify)->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_LossAndGradient(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const auto model = seqnet::SequenceClassifier::random(128, hidden, 5, 4, 1);
  Rng rng(3);
  std::vector<seqnet::SequenceItem> batch;
  for (int i = 0; i < 64; ++i) {
    seqnet::SequenceItem it;
    it.streams.push_back(random_matrix(3, 128, rng));
    it.label = i % 4;
    batch.push_back(std::move(it));
  }
  for (auto _ : state) benchmark::DoNotOptimize(seqnet::loss_and_gradient(model, batch));
}
BENCHMARK(BM_LossAndGradient)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
