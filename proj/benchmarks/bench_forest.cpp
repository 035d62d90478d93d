// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "fillmass/forest.hpp"

namespace {

using namespace fillmass;

struct Data {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Data make_data(int rows, int cols) {
  Rng rng(3);
  Data d;
  d.X.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int c = r % 4;
    d.y.push_back(c);
    for (int j = 0; j < cols; ++j) d.X(r, j) = rng.normal() + (j % 4 == c ? 1.0 : 0.0);
  }
  return d;
}

void BM_TrainForest(benchmark::State& state) {
  const auto d = make_data(static_cast<int>(state.range(0)), 136);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forest::train_forest(d.X, d.y, 4, static_cast<int>(state.range(1)), 1));
  }
}
BENCHMARK(BM_TrainForest)->Args({400, 10})->Args({400, 100})->Unit(benchmark::kMillisecond);

void BM_PredictProba(benchmark::State& state) {
  const auto d = make_data(400, 136);
  const auto model = forest::train_forest(d.X, d.y, 4, 100, 1);
  const Eigen::VectorXd row = d.X.row(0);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_proba(std::span(row.data(), 136)));
}
BENCHMARK(BM_PredictProba);

}  // namespace

BENCHMARK_MAIN();
