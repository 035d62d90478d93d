// SPDX-License-Identifier: Apache-2.0
#include "fillmass/synth_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "fillmass/capacity_geom.hpp"
#include "fillmass/errors.hpp"
#include "fillmass/fusion_mass.hpp"

namespace fillmass::synth {

namespace fs = std::filesystem;

io::CameraCalibration look_at_camera(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                                     double focal_px, int width, int height) {
  const Eigen::Vector3d forward = (target - position).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-9) throw GenerationError("camera cannot look straight along the z axis");
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  io::CameraCalibration cam;
  cam.fx = cam.fy = focal_px;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.R.row(0) = right.transpose();
  cam.R.row(1) = down.transpose();
  cam.R.row(2) = forward.transpose();
  cam.t = -cam.R * position;
  return cam;
}

std::array<io::CameraCalibration, 2> camera_rig(const Eigen::Vector3d& target,
                                                const CameraRigSpec& spec) {
  const double deg = std::numbers::pi / 180.0;
  const double elev = spec.elevation_deg * deg;
  std::array<io::CameraCalibration, 2> out;
  for (int c = 0; c < 2; ++c) {
    const double az = (spec.azimuth_offset_deg + (c == 0 ? -0.5 : 0.5) * spec.separation_deg) * deg;
    const Eigen::Vector3d pos =
        target + spec.distance * Eigen::Vector3d(std::cos(elev) * std::cos(az),
                                                 std::cos(elev) * std::sin(az), std::sin(elev));
    out[c] = look_at_camera(pos, target, spec.focal_px, spec.width, spec.height);
  }
  return out;
}

namespace {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool empty() const { return !(lo <= hi); }
};

bool ray_hits_cylinder(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Cylinder& cyl) {
  const double zmin = cyl.center.z() - cyl.height / 2;
  const double zmax = cyl.center.z() + cyl.height / 2;
  Interval slab;
  if (d.z() != 0) {
    const double a = (zmin - o.z()) / d.z();
    const double b = (zmax - o.z()) / d.z();
    slab = {std::min(a, b), std::max(a, b)};
  } else if (o.z() < zmin || o.z() > zmax) {
    return false;
  }
  const double px = o.x() - cyl.center.x();
  const double py = o.y() - cyl.center.y();
  const double a = d.x() * d.x() + d.y() * d.y();
  const double b = 2 * (px * d.x() + py * d.y());
  const double c = px * px + py * py - cyl.radius * cyl.radius;
  Interval side;
  if (a == 0) {
    if (c > 0) return false;
  } else {
    const double disc = b * b - 4 * a * c;
    if (disc < 0) return false;
    const double sq = std::sqrt(disc);
    side = {(-b - sq) / (2 * a), (-b + sq) / (2 * a)};
  }
  const double lo = std::max({slab.lo, side.lo, 0.0});
  const double hi = std::min(slab.hi, side.hi);
  return lo <= hi;
}

void check_scene(const Cylinder& cyl, const io::CameraCalibration& cam) {
  if (!(cyl.radius > 0 && cyl.height > 0)) {
    throw GenerationError("cylinder radius and height must be positive");
  }
  const Eigen::Vector3d p = cam.R * cyl.center + cam.t;
  if (!(p.z() > 0)) throw GenerationError("cylinder is behind a camera");
}

}  // namespace

io::MaskImage render_cylinder_mask(const Cylinder& cyl, const io::CameraCalibration& cam,
                                   int width, int height) {
  check_scene(cyl, cam);
  if (width < 1 || height < 1) throw GenerationError("image size must be positive");
  io::MaskImage mask(width, height);
  const Eigen::Vector3d origin = cam.center();
  const Eigen::Matrix3d Rt = cam.R.transpose();
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const Eigen::Vector3d ray_cam((col + 0.5 - cam.cx) / cam.fx, (row + 0.5 - cam.cy) / cam.fy,
                                    1.0);
      if (ray_hits_cylinder(origin, Rt * ray_cam, cyl)) mask.set(col, row, true);
    }
  }
  return mask;
}

std::array<io::MaskImage, 2> render_cylinder_masks(const SceneSpec& scene) {
  return {render_cylinder_mask(scene.cylinder, scene.cameras[0], scene.width, scene.height),
          render_cylinder_mask(scene.cylinder, scene.cameras[1], scene.width, scene.height)};
}

void occlude_rectangle(io::MaskImage& mask, int col0, int row0, int cols, int rows) {
  const int c1 = std::min(mask.width(), col0 + cols);
  const int r1 = std::min(mask.height(), row0 + rows);
  for (int r = std::max(0, row0); r < r1; ++r) {
    for (int c = std::max(0, col0); c < c1; ++c) mask.set(c, r, false);
  }
}

// ---------------------------------------------------------------------------
// Audio

namespace {

/// Butterworth low-pass biquad, direct form I.
std::vector<double> lowpass(const std::vector<double>& x, double cutoff, double fs) {
  const double w0 = 2 * std::numbers::pi * cutoff / fs;
  const double alpha = std::sin(w0) / (2 * std::numbers::sqrt2 / 2);
  const double cw = std::cos(w0);
  const double a0 = 1 + alpha;
  const double b0 = (1 - cw) / 2 / a0, b1 = (1 - cw) / a0, b2 = b0;
  const double a1 = -2 * cw / a0, a2 = (1 - alpha) / a0;
  std::vector<double> y(x.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double v = b0 * x[n] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x[n];
    y2 = y1;
    y1 = v;
    y[n] = v;
  }
  return y;
}

void add_bursts(std::vector<double>& out, Rng& rng, double fs, double rate, double decay,
                double amplitude, bool tonal) {
  const double duration = static_cast<double>(out.size()) / fs;
  const std::size_t tail = static_cast<std::size_t>(std::ceil(8 * decay * fs));
  for (double t = rng.exponential(rate); t < duration; t += rng.exponential(rate)) {
    const std::size_t start = static_cast<std::size_t>(t * fs);
    const double freq = rng.uniform(300.0, 900.0);
    const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
    for (std::size_t k = 0; k < tail && start + k < out.size(); ++k) {
      const double tau = static_cast<double>(k) / fs;
      const double carrier =
          tonal ? std::sin(2 * std::numbers::pi * freq * tau + phase) : rng.uniform(-1.0, 1.0);
      out[start + k] += amplitude * std::exp(-tau / decay) * carrier;
    }
  }
}

}  // namespace

io::AudioClip synth_audio(const AudioSpec& spec) {
  if (!(spec.duration >= 0.5)) throw GenerationError("audio duration must be at least 0.5 s");
  if (spec.sample_rate <= 0) throw GenerationError("sample rate must be positive");
  if (!(spec.gain > 0 && spec.gain <= 1)) throw GenerationError("gain must lie in (0, 1]");
  const double fs = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(spec.duration * fs));
  Rng rng(mix_seed(spec.seed, 0xa0d10));
  std::vector<double> x(n, 0.0);
  switch (spec.filling) {
    case FillingType::empty:
      for (auto& v : x) v = rng.uniform(-1e-4, 1e-4);
      break;
    case FillingType::water: {
      std::vector<double> noise(n);
      for (auto& v : noise) v = rng.normal();
      x = lowpass(noise, 1000.0, fs);
      double sq = 0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] *= 1.0 + 0.5 * std::sin(2 * std::numbers::pi * 2.0 * static_cast<double>(i) / fs);
        sq += x[i] * x[i];
      }
      const double rms = std::sqrt(sq / static_cast<double>(n));
      if (rms > 0) {
        for (auto& v : x) v *= 0.1 / rms;
      }
      break;
    }
    case FillingType::rice:
      add_bursts(x, rng, fs, 200.0, 0.003, 0.5, false);
      break;
    case FillingType::pasta:
      add_bursts(x, rng, fs, 30.0, 0.010, 0.8, true);
      break;
  }
  if (spec.filling != FillingType::empty) {
    for (auto& v : x) v = std::clamp(v * spec.gain, -1.0, 1.0);
  }
  return io::AudioClip(std::move(x), spec.sample_rate);
}

// ---------------------------------------------------------------------------
// Embeddings

Eigen::VectorXd class_mean(int class_id, int dim) {
  if (class_id < 0) throw GenerationError("class id must be non-negative");
  if (dim < 1) throw GenerationError("embedding dimension must be positive");
  Rng rng(mix_seed(0x6d65616e5f766563ULL,
                   static_cast<std::uint64_t>(class_id) * 4096 + static_cast<std::uint64_t>(dim)));
  Eigen::VectorXd mu(dim);
  for (int i = 0; i < dim; ++i) mu[i] = rng.normal();
  return 2.0 * mu.normalized();
}

io::EmbeddingSequence synth_embedding_sequence(int class_id, int length, int dim,
                                               std::uint64_t seed, double noise_scale,
                                               std::optional<int> camera_id) {
  if (length < 1) throw GenerationError("embedding sequence needs at least one step");
  if (dim != io::kAudioEmbeddingDim && dim != io::kVideoEmbeddingDim) {
    throw DimensionError("embedding dimension must be 128 or 512");
  }
  if (!(noise_scale >= 0)) throw GenerationError("noise scale must be non-negative");
  const Eigen::VectorXd mu = class_mean(class_id, dim);
  Rng rng(seed);
  Eigen::MatrixXd data(length, dim);
  for (int t = 0; t < length; ++t) {
    for (int j = 0; j < dim; ++j) data(t, j) = mu[j] + noise_scale * rng.normal();
  }
  return io::EmbeddingSequence(std::move(data), camera_id);
}

// ---------------------------------------------------------------------------
// Datasets

int audio_embedding_class(FillingType type, FillingLevel level) {
  return 100 + index_of(type) * kNumFillingLevels + index_of(level);
}

int video_embedding_class(ContainerType container, FillingLevel level) {
  // An opaque box hides its content, so every level shares one mean.
  if (container == ContainerType::box) return 299;
  return 200 + index_of(level);
}

double level_gain(FillingLevel level) {
  switch (level) {
    case FillingLevel::percent0: return 0.35;
    case FillingLevel::percent50: return 0.65;
    case FillingLevel::percent90: return 1.0;
  }
  return 1.0;
}

std::array<ObjectSpec, kNumObjects> dataset_objects(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x0b1ec7));
  std::array<ObjectSpec, kNumObjects> objects;
  for (int i = 0; i < kNumObjects; ++i) {
    objects[i].id = i;
    objects[i].type = container_type_from_index(i / 3);
    objects[i].radius = rng.uniform(0.025, 0.045);
    objects[i].height = rng.uniform(0.08, 0.18);
  }
  return objects;
}

namespace {

std::string padded(const char* fmt, int v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

io::DatasetManifest generate_dataset(const fs::path& target, const DatasetOptions& options) {
  const fs::path out_dir = fs::absolute(target);
  if (options.n_per_class < 1) throw GenerationError("n_per_class must be at least 1");
  const auto objects = dataset_objects(options.seed);

  CameraRigSpec rig;
  rig.separation_deg = 75.0;
  rig.distance = 1.0;
  rig.elevation_deg = 5.0;
  rig.width = options.width;
  rig.height = options.height;
  rig.focal_px = 700.0 * options.width / 640.0;
  const auto cameras = camera_rig(Eigen::Vector3d(0, 0, 0.09), rig);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::array<fs::path, 2> calib_paths = {out_dir / "calib" / "c1.json",
                                               out_dir / "calib" / "c2.json"};
  for (int c = 0; c < 2; ++c) io::write_calibration(calib_paths[c], cameras[c]);

  io::DatasetManifest manifest;
  int index = 0;
  for (int rep = 0; rep < options.n_per_class; ++rep) {
    for (int type = 0; type < kNumFillingTypes; ++type) {
      for (int slot = 0; slot < kNumFillingLevels; ++slot, ++index) {
        const auto ftype = filling_type_from_index(type);
        const auto level =
            ftype == FillingType::empty ? FillingLevel::percent0 : filling_level_from_index(slot);
        // Rotating by rep spreads every (type, level) combination over all objects.
        const ObjectSpec& obj = objects[(rep + type * kNumFillingLevels + slot) % kNumObjects];
        Rng rng(mix_seed(options.seed, static_cast<std::uint64_t>(index) + 1));
        const std::uint64_t seq_seed = rng.next_u64();

        io::SequenceRecord rec;
        rec.sequence_id = padded("s%05d", index);
        rec.container_id = obj.id;
        rec.container_type = obj.type;
        rec.num_frames = static_cast<int>(64 + rng.below(97));
        rec.calibrations = {calib_paths[0], calib_paths[1]};
        const fs::path seq_dir = out_dir / "sequences" / rec.sequence_id;

        const double duration = rng.uniform(2.0, 3.0);
        rec.audio = seq_dir / "audio.wav";
        io::write_wav(rec.audio, synth_audio({ftype, duration, options.sample_rate,
                                              mix_seed(seq_seed, 1), level_gain(level)}));

        const auto frames = geom::select_frames(rec.num_frames);
        for (int f : {frames.first, frames.second}) {
          Cylinder cyl{obj.radius, obj.height,
                       Eigen::Vector3d(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                                       obj.height / 2 + rng.uniform(0.0, 0.03))};
          io::FrameMasks fm;
          fm.frame = f;
          for (int c = 0; c < 2; ++c) {
            const fs::path p = seq_dir / "masks" / (padded("c%d_", c + 1) + padded("%04d.pgm", f));
            io::write_pgm_mask(p, render_cylinder_mask(cyl, cameras[c], options.width,
                                                       options.height));
            fm.per_camera.push_back(p);
          }
          rec.masks.push_back(std::move(fm));
        }

        const auto lengths = io::expected_sequence_lengths(
            static_cast<double>(static_cast<long long>(std::lround(duration * options.sample_rate))) /
                options.sample_rate,
            rec.num_frames);
        rec.audio_embedding = seq_dir / "vggish.csv";
        io::write_embedding_sequence(
            *rec.audio_embedding,
            synth_embedding_sequence(audio_embedding_class(ftype, level),
                                     static_cast<int>(lengths.audio_steps), io::kAudioEmbeddingDim,
                                     mix_seed(seq_seed, 2), options.embedding_noise));
        for (int c = 0; c < 2; ++c) {
          const fs::path p = seq_dir / padded("r21d_c%d.csv", c + 1);
          io::write_embedding_sequence(
              p, synth_embedding_sequence(video_embedding_class(obj.type, level),
                                          static_cast<int>(lengths.video_steps),
                                          io::kVideoEmbeddingDim, mix_seed(seq_seed, 3 + c),
                                          options.embedding_noise, c));
          rec.video_embeddings.push_back(p);
        }

        io::SequenceLabels labels;
        labels.filling_type = ftype;
        labels.filling_level = level;
        labels.capacity_ml = obj.radius * obj.radius * obj.height * std::numbers::pi * 1e6;
        labels.mass_g = fusion::filling_mass(labels.capacity_ml, level, ftype);
        rec.labels = labels;
        manifest.records.push_back(std::move(rec));
      }
    }
  }
  io::write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace fillmass::synth
