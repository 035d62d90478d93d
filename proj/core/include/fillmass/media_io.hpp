// SPDX-License-Identifier: Apache-2.0
//
// Ingestion and serialization of every external artifact the pipeline
// consumes: PCM audio, binary silhouettes, pinhole calibrations, precomputed
// embedding sequences and dataset manifests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fillmass/labels.hpp"

namespace fillmass::io {

/// Mono audio, samples in [-1, 1].
class AudioClip {
 public:
  /// Throws ValidationError on a non-positive rate or non-finite/out-of-range samples.
  AudioClip(std::vector<double> samples, int sample_rate);

  const std::vector<double>& samples() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  std::size_t size() const { return samples_.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  friend bool operator==(const AudioClip&, const AudioClip&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_;
};

/// Binary silhouette, row-major.
class MaskImage {
 public:
  MaskImage(int width, int height);
  MaskImage(int width, int height, std::vector<std::uint8_t> foreground);

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int col, int row) const {
    return fg_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(int col, int row, bool value) {
    fg_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }
  /// Out-of-bounds coordinates read as background.
  bool contains_foreground(double u, double v) const;

  std::size_t foreground_count() const;
  bool empty() const { return foreground_count() == 0; }
  const std::vector<std::uint8_t>& data() const { return fg_; }

  friend bool operator==(const MaskImage&, const MaskImage&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> fg_;
};

/// Pinhole camera; R and t map world points into the camera frame
/// (x_cam = R * x_world + t), camera looks along +z.
struct CameraCalibration {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  /// Throws ValidationError when fx/fy are not positive or R is not a rotation.
  void validate(double tolerance = 1e-6) const;

  Eigen::Vector3d center() const { return -R.transpose() * t; }
};

enum class EmbeddingSource { audio, video };

inline constexpr int kAudioEmbeddingDim = 128;
inline constexpr int kVideoEmbeddingDim = 512;

/// T x D feature sequence standing in for a pretrained network's output.
class EmbeddingSequence {
 public:
  /// Source is implied by the column count (128 audio, 512 video).
  explicit EmbeddingSequence(Eigen::MatrixXd data, std::optional<int> camera_id = std::nullopt);

  const Eigen::MatrixXd& data() const { return data_; }
  int length() const { return static_cast<int>(data_.rows()); }
  int dim() const { return static_cast<int>(data_.cols()); }
  EmbeddingSource source() const { return source_; }
  std::optional<int> camera_id() const { return camera_id_; }

 private:
  Eigen::MatrixXd data_;
  EmbeddingSource source_;
  std::optional<int> camera_id_;
};

// ---------------------------------------------------------------------------
// Dataset manifest

struct FrameMasks {
  int frame = 0;
  std::vector<std::filesystem::path> per_camera;
};

struct SequenceLabels {
  FillingType filling_type = FillingType::empty;
  FillingLevel filling_level = FillingLevel::percent0;
  double capacity_ml = 0;
  double mass_g = 0;
};

struct SequenceRecord {
  std::string sequence_id;
  int container_id = 0;
  ContainerType container_type = ContainerType::cup;
  int num_frames = 0;
  std::filesystem::path audio;
  std::vector<FrameMasks> masks;
  std::vector<std::filesystem::path> calibrations;
  std::optional<std::filesystem::path> audio_embedding;
  std::vector<std::filesystem::path> video_embeddings;
  std::optional<SequenceLabels> labels;
};

/// Paths inside records are absolute after load; write_manifest stores them
/// relative to the manifest's directory when possible.
struct DatasetManifest {
  std::vector<SequenceRecord> records;
};

// ---------------------------------------------------------------------------
// Readers

/// PCM WAV, 8/16/32-bit integer or 32-bit float, 1-8 channels, downmixed by channel mean.
AudioClip read_wav(const std::filesystem::path& path);
AudioClip parse_wav(std::span<const std::uint8_t> bytes);

/// P2 or P5. Foreground where value >= threshold; default threshold is maxval / 2.
MaskImage read_pgm_mask(const std::filesystem::path& path,
                        std::optional<double> threshold = std::nullopt);
MaskImage parse_pgm_mask(std::span<const std::uint8_t> bytes,
                         std::optional<double> threshold = std::nullopt);

CameraCalibration read_calibration(const std::filesystem::path& path);
CameraCalibration parse_calibration(const std::string& json_text);

/// Headerless CSV, one row per timestep, 128 or 512 columns.
EmbeddingSequence read_embedding_sequence(const std::filesystem::path& path,
                                          std::optional<int> camera_id = std::nullopt);
EmbeddingSequence parse_embedding_sequence(std::string_view csv,
                                           std::optional<int> camera_id = std::nullopt);

/// JSON array of records; checks id uniqueness and that every path exists.
DatasetManifest read_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Writers

enum class WavEncoding { pcm8, pcm16, pcm32, float32 };

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::pcm16);
std::vector<std::uint8_t> encode_wav(std::span<const double> interleaved, int channels,
                                     int sample_rate, WavEncoding encoding);

/// Writes P5 with maxval 255 (foreground 255, background 0).
void write_pgm_mask(const std::filesystem::path& path, const MaskImage& mask);
std::vector<std::uint8_t> encode_pgm_mask(const MaskImage& mask);

void write_calibration(const std::filesystem::path& path, const CameraCalibration& calib);
std::string format_calibration(const CameraCalibration& calib);

/// Values use the shortest representation that round-trips exactly.
void write_embedding_sequence(const std::filesystem::path& path, const EmbeddingSequence& seq);
std::string format_embedding_sequence(const EmbeddingSequence& seq);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// ---------------------------------------------------------------------------

struct SequenceLengths {
  long long audio_steps = 0;  ///< one per 0.96 s audio window
  long long video_steps = 0;  ///< one per 16-frame clip
};

/// floor(T_sec / 0.96) and floor(T_f / 16). Negative inputs throw DomainError.
SequenceLengths expected_sequence_lengths(double duration_seconds, long long num_frames);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace fillmass::io
