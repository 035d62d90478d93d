// SPDX-License-Identifier: Apache-2.0
//
// Synthetic data with exact ground truth: analytically rendered cylinder
// silhouettes in two calibrated views, class-conditioned audio and
// class-conditioned embedding sequences, and whole labelled datasets on disk.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include <Eigen/Core>

#include "fillmass/labels.hpp"
#include "fillmass/media_io.hpp"
#include "fillmass/random.hpp"

namespace fillmass::synth {

struct Cylinder {
  double radius = 0.03;  ///< m
  double height = 0.10;  ///< m
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  ///< world, axis along +z
};

struct SceneSpec {
  Cylinder cylinder;
  std::array<io::CameraCalibration, 2> cameras;
  int width = 640;
  int height = 480;
  std::uint64_t seed = 0;
};

/// Camera at `position` looking at `target` with world +z as up (image y points down).
io::CameraCalibration look_at_camera(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                                     double focal_px, int width, int height);

struct CameraRigSpec {
  double separation_deg = 75.0;  ///< azimuth difference between the two cameras
  double distance = 1.0;         ///< m from target
  double elevation_deg = 5.0;
  double azimuth_offset_deg = 0.0;
  double focal_px = 700.0;
  int width = 640;
  int height = 480;
};

/// Two cameras placed symmetrically about the azimuth offset.
std::array<io::CameraCalibration, 2> camera_rig(const Eigen::Vector3d& target,
                                                const CameraRigSpec& spec);

/// Foreground where the pixel-centre ray meets the solid cylinder. Throws
/// GenerationError when r or h is not positive or the cylinder centre is not
/// in front of a camera.
std::array<io::MaskImage, 2> render_cylinder_masks(const SceneSpec& scene);

/// Per-camera mask at an arbitrary size.
io::MaskImage render_cylinder_mask(const Cylinder& cyl, const io::CameraCalibration& cam,
                                   int width, int height);

/// Clears a rectangle of the mask (hand occlusion fixture).
void occlude_rectangle(io::MaskImage& mask, int col0, int row0, int cols, int rows);

struct AudioSpec {
  FillingType filling = FillingType::empty;
  double duration = 2.0;  ///< s, at least 0.5
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  /// Overall loudness multiplier in (0, 1]; the dataset generator ties it to the fill level.
  double gain = 1.0;
};

/// empty: uniform noise of amplitude 1e-4; water: 1 kHz low-passed noise with
/// 2 Hz amplitude modulation at rms 0.1; rice: Poisson bursts at 200/s, 3 ms
/// decay, amplitude 0.5; pasta: Poisson knocks at 30/s, 10 ms decay, amplitude 0.8.
io::AudioClip synth_audio(const AudioSpec& spec);

/// Fixed unit direction scaled to norm 2 for a class id, identical on every platform.
Eigen::VectorXd class_mean(int class_id, int dim);

/// Rows = class_mean(class_id, dim) + noise_scale * N(0, 1).
io::EmbeddingSequence synth_embedding_sequence(int class_id, int length, int dim,
                                               std::uint64_t seed, double noise_scale = 0.5,
                                               std::optional<int> camera_id = std::nullopt);

struct DatasetOptions {
  int n_per_class = 1;
  std::uint64_t seed = 0;
  int width = 640;
  int height = 480;
  int sample_rate = 16000;
  double embedding_noise = 0.5;
};

/// Number of container objects in a generated dataset (3 per container type).
inline constexpr int kNumObjects = 9;

/// Embedding class ids used by generate_dataset.
int audio_embedding_class(FillingType type, FillingLevel level);
int video_embedding_class(ContainerType container, FillingLevel level);

/// Loudness multiplier applied to the pouring audio of each fill level.
double level_gain(FillingLevel level);

struct ObjectSpec {
  int id = 0;
  ContainerType type = ContainerType::cup;
  double radius = 0;
  double height = 0;
};

std::array<ObjectSpec, kNumObjects> dataset_objects(std::uint64_t seed);

/// Writes 12 * n_per_class labelled sequences (every filling type crossed with
/// three level slots; an empty container always has level 0) plus
/// manifest.json under `out_dir`, and returns the manifest.
io::DatasetManifest generate_dataset(const std::filesystem::path& out_dir,
                                     const DatasetOptions& options);

}  // namespace fillmass::synth
