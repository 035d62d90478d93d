// SPDX-License-Identifier: Apache-2.0
//
// "Classical" audio descriptors: 34 short-term features per window plus their
// backward deltas, summarized over the clip by mean and standard deviation
// into a 136-d long-term vector.
#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fillmass/media_io.hpp"

namespace fillmass::audio {

inline constexpr int kNumShortTerm = 34;
inline constexpr int kNumMfcc = 13;
inline constexpr int kNumChroma = 12;
inline constexpr int kNumMelFilters = 40;
inline constexpr int kFrameDim = 2 * kNumShortTerm;  // base || delta
inline constexpr int kLongTermDim = 2 * kFrameDim;   // mean || std

/// Positions inside ShortTermFrame::base.
namespace feature {
inline constexpr int zcr = 0;
inline constexpr int energy = 1;
inline constexpr int energy_entropy = 2;
inline constexpr int spectral_centroid = 3;
inline constexpr int spectral_spread = 4;
inline constexpr int spectral_entropy = 5;
inline constexpr int spectral_flux = 6;
inline constexpr int spectral_rolloff = 7;
inline constexpr int mfcc_first = 8;
inline constexpr int chroma_first = mfcc_first + kNumMfcc;  // 21
inline constexpr int chroma_std = chroma_first + kNumChroma;  // 33
}  // namespace feature

using FeatureArray = std::array<double, kNumShortTerm>;

struct ShortTermFrame {
  FeatureArray base{};
  FeatureArray delta{};
};

struct LongTermVector {
  std::array<double, kLongTermDim> values{};
};

struct FrameConfig {
  double window_seconds = 0.050;
  double hop_seconds = 0.025;
  int energy_subframes = 10;
  int entropy_subbands = 10;
  double rolloff_fraction = 0.90;
};

/// Names of the 34 base features in storage order.
const std::array<std::string, kNumShortTerm>& short_term_feature_names();

/// Window/hop lengths in samples for a given rate.
int window_length(double seconds, int sample_rate);

/// 1 + floor((len - win) / hop). Throws TooShortError when len < win.
std::size_t frame_count(std::size_t length, std::size_t window, std::size_t hop);

/// Per-window features with backward-difference deltas (first delta is zero).
std::vector<ShortTermFrame> short_term_features(const io::AudioClip& clip,
                                                const FrameConfig& cfg = {});

/// Mean then population std of (base || delta) across frames.
LongTermVector aggregate_long_term(std::span<const ShortTermFrame> frames);

LongTermVector classical_features(const io::AudioClip& clip, const FrameConfig& cfg = {});

/// One row per frame, 68 columns (base then delta), with a header row.
std::string format_frames_csv(std::span<const ShortTermFrame> frames);

/// mean_<f>, mean_delta_<f>, std_<f>, std_delta_<f> in LongTermVector order.
std::vector<std::string> long_term_feature_names();

// Building blocks, exposed for testing and benchmarking.

/// |DFT| of the Hamming-windowed frame, bins 0..N/2.
std::vector<double> magnitude_spectrum(std::span<const double> frame);

/// Triangular mel filters over bins 0..N/2 spanning 0..sample_rate/2.
std::vector<std::vector<double>> mel_filterbank(int fft_length, int sample_rate,
                                                int num_filters = kNumMelFilters);

}  // namespace fillmass::audio
