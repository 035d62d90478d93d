// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "fillmass/capacity_geom.hpp"
#include "fillmass/synth_harness.hpp"

namespace {

using namespace fillmass;

void BM_RenderMasks(benchmark::State& state) {
  const synth::Cylinder cyl{0.04, 0.12, Eigen::Vector3d(0, 0, 0.06)};
  const auto cams = synth::camera_rig(cyl.center, {});
  for (auto _ : state) benchmark::DoNotOptimize(synth::render_cylinder_masks({cyl, cams, 640, 480, 0}));
}
BENCHMARK(BM_RenderMasks)->Unit(benchmark::kMillisecond);

void BM_EstimateFrame(benchmark::State& state) {
  const synth::Cylinder cyl{0.04, 0.12, Eigen::Vector3d(0, 0, 0.06)};
  const auto cams = synth::camera_rig(cyl.center, {});
  const auto masks = synth::render_cylinder_masks({cyl, cams, 640, 480, 0});
  geom::FitConfig cfg;
  cfg.shrink_step = static_cast<double>(state.range(0)) * 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(geom::estimate_frame({&masks[0], &masks[1]}, {&cams[0], &cams[1]}, cfg));
  }
}
BENCHMARK(BM_EstimateFrame)->Arg(1)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
