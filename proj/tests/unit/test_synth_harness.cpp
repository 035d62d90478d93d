// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "fillmass/audio_features.hpp"
#include "fillmass/capacity_geom.hpp"
#include "fillmass/errors.hpp"
#include "fillmass/forest.hpp"
#include "fillmass/fusion_mass.hpp"
#include "fillmass/synth_harness.hpp"
#include "test_support.hpp"

namespace fillmass::synth {
namespace {

namespace fs = std::filesystem;

std::size_t foreground(const io::MaskImage& m) {
  std::size_t n = 0;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) n += m.at(c, r) ? 1 : 0;
  }
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

SceneSpec centered_scene(double r, double h) {
  SceneSpec s;
  s.cylinder = {r, h, Eigen::Vector3d(0, 0, h / 2)};
  s.cameras = camera_rig(s.cylinder.center, {});
  return s;
}

TEST(Render, ThinCylinderIsAtMostASliver) {
  const auto masks = render_cylinder_masks(centered_scene(1e-6, 0.1));
  for (const auto& m : masks) {
    for (int r = 0; r < m.height(); ++r) {
      int row = 0;
      for (int c = 0; c < m.width(); ++c) row += m.at(c, r) ? 1 : 0;
      EXPECT_LE(row, 1);
    }
  }
}

TEST(Render, SymmetricCamerasSeeEqualAreas) {
  for (double r : {0.02, 0.035, 0.05}) {
    const auto masks = render_cylinder_masks(centered_scene(r, 0.12));
    const double a = static_cast<double>(foreground(masks[0]));
    const double b = static_cast<double>(foreground(masks[1]));
    ASSERT_GT(a, 0);
    EXPECT_LE(std::abs(a - b) / a, 0.02);
  }
}

TEST(Render, CentroidIsNearProjectedCenter) {
  const auto s = centered_scene(0.03, 0.10);
  const auto masks = render_cylinder_masks(s);
  for (int c = 0; c < 2; ++c) {
    const auto centroid = geom::mask_centroid(masks[c]);
    const auto proj = geom::project(s.cameras[c], s.cylinder.center);
    ASSERT_TRUE(centroid && proj);
    EXPECT_LE(std::hypot(centroid->u - proj->u, centroid->v - proj->v), 2.0);
  }
}

TEST(Render, RayTestMatchesPointSampling) {
  // A pixel is foreground iff some point of its centre ray lies inside the solid.
  const auto s = centered_scene(0.04, 0.09);
  const auto& cam = s.cameras[0];
  const auto mask = render_cylinder_mask(s.cylinder, cam, 80, 60);
  auto scaled = cam;
  scaled.fx = scaled.fy = cam.fx / 8;
  scaled.cx = 40;
  scaled.cy = 30;
  const auto coarse = render_cylinder_mask(s.cylinder, scaled, 80, 60);
  int agree = 0, total = 0;
  for (int r = 0; r < 60; ++r) {
    for (int c = 0; c < 80; ++c) {
      const auto ray = geom::backproject_ray(scaled, {c + 0.5, r + 0.5});
      bool inside = false;
      for (int k = 0; k < 4000 && !inside; ++k) {
        const Eigen::Vector3d p = ray.origin + (0.5 + k * 0.00025) * ray.direction;
        const Eigen::Vector3d q = p - s.cylinder.center;
        inside = std::hypot(q.x(), q.y()) <= 0.04 && std::abs(q.z()) <= 0.045;
      }
      agree += inside == coarse.at(c, r);
      ++total;
    }
  }
  EXPECT_GE(agree, total - 4);
  EXPECT_EQ(mask.width(), 80);
}

TEST(Render, RejectsBadScenes) {
  auto s = centered_scene(0.03, 0.1);
  s.cylinder.radius = 0;
  EXPECT_THROW(render_cylinder_masks(s), GenerationError);
  s = centered_scene(0.03, 0.1);
  s.cylinder.center = -3 * (s.cameras[0].R.transpose() * Eigen::Vector3d(0, 0, 1));
  s.cylinder.center += -s.cameras[0].R.transpose() * s.cameras[0].t;
  EXPECT_THROW(render_cylinder_masks(s), GenerationError);
}

TEST(Render, OcclusionClearsOnlyTheRectangle) {
  auto masks = render_cylinder_masks(centered_scene(0.04, 0.12));
  const std::size_t before = foreground(masks[0]);
  occlude_rectangle(masks[0], -10, -10, 5, 5);
  EXPECT_EQ(foreground(masks[0]), before);
  occlude_rectangle(masks[0], 0, 0, 640, 240);
  EXPECT_LT(foreground(masks[0]), before);
  for (int r = 0; r < 240; ++r) {
    for (int c = 0; c < 640; ++c) EXPECT_FALSE(masks[0].at(c, r));
  }
}

TEST(Audio, LengthsAndLevels) {
  const auto clip = synth_audio({FillingType::water, 2.0, 16000, 1});
  EXPECT_EQ(clip.samples().size(), 32000u);
  double ss = 0;
  for (double v : clip.samples()) ss += v * v;
  EXPECT_NEAR(std::sqrt(ss / 32000), 0.1, 1e-9);

  const auto empty = synth_audio({FillingType::empty, 2.0, 16000, 2});
  ss = 0;
  for (double v : empty.samples()) ss += v * v;
  EXPECT_LE(std::sqrt(ss / 32000), 2e-4);
  EXPECT_THROW(synth_audio({FillingType::rice, 0.4, 16000, 3}), GenerationError);
}

TEST(Audio, DeterministicPerSeed) {
  for (auto t : {FillingType::empty, FillingType::pasta, FillingType::rice, FillingType::water}) {
    const auto a = synth_audio({t, 0.7, 16000, 5});
    EXPECT_EQ(a.samples(), synth_audio({t, 0.7, 16000, 5}).samples());
    EXPECT_NE(a.samples(), synth_audio({t, 0.7, 16000, 6}).samples());
    for (double v : a.samples()) ASSERT_LE(std::abs(v), 1.0);
  }
}

TEST(Audio, ClassesAreSeparableByForest) {
  auto features = [](int per_class, std::uint64_t base, Eigen::MatrixXd& X, std::vector<int>& y) {
    X.resize(per_class * kNumFillingTypes, audio::kLongTermDim);
    y.clear();
    int row = 0;
    for (int t = 0; t < kNumFillingTypes; ++t) {
      for (int i = 0; i < per_class; ++i, ++row) {
        const auto v = audio::classical_features(
            synth_audio({filling_type_from_index(t), 1.0, 16000, mix_seed(base, row)}));
        for (int d = 0; d < audio::kLongTermDim; ++d) X(row, d) = v.values[d];
        y.push_back(t);
      }
    }
  };
  Eigen::MatrixXd Xtr, Xte;
  std::vector<int> ytr, yte;
  features(40, 100, Xtr, ytr);
  features(10, 200, Xte, yte);
  const auto model = forest::train_forest(Xtr, ytr, kNumFillingTypes, 50, 7);
  EXPECT_GE(forest::accuracy(model, Xte, yte), 0.9);
}

TEST(Embedding, ZeroNoiseIsTheMean) {
  const auto seq = synth_embedding_sequence(3, 1, 128, 9, 0.0);
  const auto mu = class_mean(3, 128);
  EXPECT_EQ(seq.data().row(0).transpose(), mu);
  EXPECT_NEAR(mu.norm(), 2.0, 1e-12);
  EXPECT_FALSE(seq.camera_id());
}

TEST(Embedding, SampleMeanObeysClt) {
  const auto a = synth_embedding_sequence(5, 1000, 128, 1);
  const auto b = synth_embedding_sequence(5, 1000, 128, 2);
  EXPECT_NE(a.data(), b.data());
  const Eigen::VectorXd mu = class_mean(5, 128);
  // Per-coordinate standard error is 0.5 / sqrt(1000); 5 sigma bounds every coordinate.
  const double bound = 5 * 0.5 / std::sqrt(1000.0);
  for (const auto* s : {&a, &b}) {
    const Eigen::VectorXd mean = s->data().colwise().mean().transpose();
    EXPECT_LE((mean - mu).cwiseAbs().maxCoeff(), bound);
  }
}

TEST(Embedding, VideoDimensionAndErrors) {
  const auto v = synth_embedding_sequence(1, 4, 512, 3, 0.5, 1);
  EXPECT_EQ(v.dim(), 512);
  EXPECT_EQ(v.source(), io::EmbeddingSource::video);
  EXPECT_THROW(synth_embedding_sequence(1, 4, 300, 3), DimensionError);
  EXPECT_THROW(synth_embedding_sequence(1, 0, 128, 3), GenerationError);
}

TEST(Dataset, SmallDatasetContentsAndLabels) {
  testing::TempDir dir;
  DatasetOptions opt;
  opt.n_per_class = 1;
  opt.seed = 3;
  const auto manifest = generate_dataset(dir.path(), opt);
  ASSERT_EQ(manifest.records.size(), 12u);
  const auto objects = dataset_objects(opt.seed);
  std::set<int> seen;
  for (const auto& rec : manifest.records) {
    seen.insert(rec.container_id);
    ASSERT_TRUE(rec.labels);
    const auto& l = *rec.labels;
    if (l.filling_type == FillingType::empty) {
      EXPECT_EQ(l.filling_level, FillingLevel::percent0);
    }
    if (l.filling_level == FillingLevel::percent0) {
      EXPECT_EQ(l.mass_g, 0.0);
    }
    const auto& obj = objects[rec.container_id];
    EXPECT_EQ(obj.type, rec.container_type);
    EXPECT_EQ(l.capacity_ml, obj.radius * obj.radius * obj.height * std::numbers::pi * 1e6);
    EXPECT_EQ(l.mass_g, fusion::filling_mass(l.capacity_ml, l.filling_level, l.filling_type));
  }
  EXPECT_EQ(seen.size(), static_cast<std::size_t>(kNumObjects));
  const auto back = io::read_manifest(dir / "manifest.json");
  ASSERT_EQ(back.records.size(), manifest.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    EXPECT_EQ(back.records[i].sequence_id, manifest.records[i].sequence_id);
    EXPECT_EQ(back.records[i].audio, manifest.records[i].audio);
  }
}

TEST(Dataset, EveryObjectSeesEveryFillCombination) {
  // Objects rotate across slots, so no label is a function of the container.
  testing::TempDir dir;
  DatasetOptions opt;
  opt.n_per_class = 9;
  opt.width = 32;
  opt.height = 24;
  const auto manifest = generate_dataset(dir.path(), opt);
  std::set<std::tuple<int, int, int>> combos;
  for (const auto& rec : manifest.records) {
    combos.insert({rec.container_id, index_of(rec.labels->filling_type),
                   index_of(rec.labels->filling_level)});
  }
  EXPECT_EQ(combos.size(), static_cast<std::size_t>(kNumObjects * 10));
}

TEST(Dataset, RegenerationIsByteIdentical) {
  testing::TempDir a, b;
  DatasetOptions opt;
  opt.n_per_class = 1;
  opt.seed = 11;
  opt.width = 64;
  opt.height = 48;
  const auto ma = generate_dataset(a.path(), opt);
  generate_dataset(b.path(), opt);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a.path());
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 12u * 6);
  EXPECT_GT(ma.records.size(), 0u);
}

TEST(Dataset, GeometryRecoversEveryGeneratedCapacity) {
  testing::TempDir dir;
  DatasetOptions opt;
  opt.n_per_class = 1;
  opt.seed = 21;
  const auto manifest = generate_dataset(dir.path(), opt);
  const std::array<io::CameraCalibration, 2> cams = {
      io::read_calibration(manifest.records[0].calibrations[0]),
      io::read_calibration(manifest.records[0].calibrations[1])};
  for (const auto& rec : manifest.records) {
    std::vector<geom::FramePair> frames;
    for (const auto& fm : rec.masks) {
      frames.push_back({io::read_pgm_mask(fm.per_camera[0]), io::read_pgm_mask(fm.per_camera[1])});
    }
    const auto est = geom::estimate_capacity_sequence(frames, cams, 1.0);
    EXPECT_FALSE(est.used_prior);
    EXPECT_LE(std::abs(est.capacity_ml - rec.labels->capacity_ml), 0.15 * rec.labels->capacity_ml)
        << rec.sequence_id;
  }
}

TEST(Dataset, UnwritableTargetIsIoError) {
  testing::TempDir dir;
  std::ofstream(dir / "file") << "x";
  DatasetOptions opt;
  EXPECT_THROW(generate_dataset(dir / "file" / "sub", opt), IoError);
}

}  // namespace
}  // namespace fillmass::synth
