// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "fillmass/audio_features.hpp"
#include "fillmass/errors.hpp"
#include "fillmass/random.hpp"
#include "fillmass/synth_harness.hpp"

namespace fillmass::audio {
namespace {

constexpr int kRate = 16000;

io::AudioClip sine(double freq, double seconds, double amp = 0.5) {
  std::vector<double> x(static_cast<std::size_t>(seconds * kRate));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = amp * std::sin(2 * std::numbers::pi * freq * static_cast<double>(i) / kRate);
  }
  return io::AudioClip(std::move(x), kRate);
}

io::AudioClip noise(double seconds, double amp, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(seconds * kRate));
  for (auto& v : x) v = rng.uniform(-amp, amp);
  return io::AudioClip(std::move(x), kRate);
}

/// Direct O(N^2) DFT of the Hamming-windowed frame, |X_k| / N for k <= N/2.
std::vector<double> dft_magnitudes(std::span<const double> frame) {
  const int n = static_cast<int>(frame.size());
  std::vector<double> mag(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0;
    for (int i = 0; i < n; ++i) {
      const double w = 0.54 - 0.46 * std::cos(2 * std::numbers::pi * i / (n - 1));
      acc += frame[i] * w * std::polar(1.0, -2 * std::numbers::pi * k * i / n);
    }
    mag[k] = std::abs(acc) / n;
  }
  return mag;
}

TEST(FrameCount, FormulaIsExact) {
  for (std::size_t len = 10; len < 400; len += 7) {
    for (std::size_t win = 1; win <= 10; ++win) {
      for (std::size_t hop = 1; hop <= 6; ++hop) {
        std::size_t brute = 0;
        for (std::size_t s = 0; s + win <= len; s += hop) ++brute;
        EXPECT_EQ(frame_count(len, win, hop), brute);
      }
    }
  }
  EXPECT_THROW(frame_count(5, 6, 1), TooShortError);
}

TEST(ShortTerm, ZeroClipGivesZeroFeatures) {
  const io::AudioClip zero(std::vector<double>(kRate, 0.0), kRate);
  const auto frames = short_term_features(zero);
  EXPECT_EQ(frames.size(), 1 + (16000u - 800u) / 400u);
  for (const auto& f : frames) {
    for (int d = 0; d < feature::mfcc_first; ++d) EXPECT_EQ(f.base[d], 0.0) << d;
    for (int d = feature::chroma_first; d < kNumShortTerm; ++d) EXPECT_EQ(f.base[d], 0.0) << d;
    for (double v : f.delta) EXPECT_EQ(v, 0.0);
  }
}

TEST(ShortTerm, AlternatingSignalHasUnitZcr) {
  std::vector<double> x(1600);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 ? -1.0 : 1.0;
  for (const auto& f : short_term_features(io::AudioClip(x, kRate))) {
    EXPECT_DOUBLE_EQ(f.base[feature::zcr], 1.0);
  }
}

TEST(ShortTerm, SineZcrAndCentroidMatchDftOracle) {
  const auto clip = sine(1000.0, 0.05);
  const auto frames = short_term_features(clip);
  ASSERT_EQ(frames.size(), 1u);
  const auto& f = frames[0].base;
  EXPECT_NEAR(f[feature::zcr], 0.125, 0.01);
  EXPECT_NEAR(f[feature::spectral_centroid], 0.0625, 0.005);

  const auto mag = dft_magnitudes(clip.samples());
  double num = 0, den = 0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    num += (static_cast<double>(k) / 800.0) * mag[k];
    den += mag[k];
  }
  EXPECT_NEAR(f[feature::spectral_centroid], num / den, 1e-9);
  const auto fast = magnitude_spectrum(clip.samples());
  for (std::size_t k = 0; k < mag.size(); ++k) EXPECT_NEAR(fast[k], mag[k], 1e-12);
}

TEST(ShortTerm, DeltasAreBackwardDifferences) {
  const auto frames = short_term_features(noise(0.3, 0.4, 1));
  for (double v : frames[0].delta) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    for (int d = 0; d < kNumShortTerm; ++d) {
      EXPECT_EQ(frames[i].delta[d], frames[i].base[d] - frames[i - 1].base[d]);
    }
  }
}

TEST(ShortTerm, ChromaIsNormalized) {
  for (const auto& f : short_term_features(noise(0.2, 0.3, 2))) {
    double s = 0;
    for (int i = 0; i < kNumChroma; ++i) s += f.base[feature::chroma_first + i];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(ShortTerm, ClipShorterThanWindowThrows) {
  EXPECT_THROW(short_term_features(io::AudioClip(std::vector<double>(799, 0.1), kRate)),
               TooShortError);
}

TEST(ShortTerm, AmplitudeScalingInvariances) {
  const auto base = noise(0.3, 0.1, 3);
  for (double c : {0.25, 3.0, 9.0}) {
    std::vector<double> y = base.samples();
    for (auto& v : y) v *= c;
    const auto a = short_term_features(base);
    const auto b = short_term_features(io::AudioClip(y, kRate));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (int d : {feature::zcr, feature::spectral_centroid, feature::spectral_spread,
                    feature::spectral_entropy, feature::spectral_rolloff, feature::energy_entropy,
                    feature::spectral_flux}) {
        EXPECT_NEAR(a[i].base[d], b[i].base[d], 1e-9) << d;
      }
      for (int k = 0; k <= kNumChroma; ++k) {
        EXPECT_NEAR(a[i].base[feature::chroma_first + k], b[i].base[feature::chroma_first + k],
                    1e-9);
      }
      EXPECT_NEAR(b[i].base[feature::energy], c * c * a[i].base[feature::energy],
                  1e-12 * c * c);
      // Log-mel energies shift by 2 ln c, which the orthonormal DCT sends to
      // the first coefficient alone: 2 ln c * sqrt(40).
      EXPECT_NEAR(b[i].base[feature::mfcc_first],
                  a[i].base[feature::mfcc_first] + 2 * std::log(c) * std::sqrt(40.0), 1e-6);
      for (int k = 1; k < kNumMfcc; ++k) {
        EXPECT_NEAR(b[i].base[feature::mfcc_first + k], a[i].base[feature::mfcc_first + k], 1e-6);
      }
    }
  }
}

TEST(LongTerm, ConstantFramesHaveZeroSpread) {
  ShortTermFrame f;
  for (int d = 0; d < kNumShortTerm; ++d) {
    f.base[d] = 0.1 * d + 1.0 / 3.0;
    f.delta[d] = -0.7 * d;
  }
  const std::vector<ShortTermFrame> frames(5, f);
  const auto lt = aggregate_long_term(frames);
  for (int d = 0; d < kNumShortTerm; ++d) {
    EXPECT_EQ(lt.values[d], f.base[d]);
    EXPECT_EQ(lt.values[kNumShortTerm + d], f.delta[d]);
  }
  for (int d = kFrameDim; d < kLongTermDim; ++d) EXPECT_EQ(lt.values[d], 0.0);
  const auto one = aggregate_long_term(std::span(frames).first(1));
  EXPECT_EQ(one.values, lt.values);
}

TEST(LongTerm, TwoPointStatistics) {
  ShortTermFrame a, b;
  b.base.fill(2.0);
  const std::vector<ShortTermFrame> frames = {a, b};
  const auto lt = aggregate_long_term(frames);
  for (int d = 0; d < kNumShortTerm; ++d) {
    EXPECT_DOUBLE_EQ(lt.values[d], 1.0);
    EXPECT_DOUBLE_EQ(lt.values[kFrameDim + d], 1.0);
  }
  EXPECT_THROW(aggregate_long_term(std::span<const ShortTermFrame>{}), DomainError);
}

TEST(Classical, OutputsAreFiniteAndNamed) {
  EXPECT_EQ(long_term_feature_names().size(), static_cast<std::size_t>(kLongTermDim));
  for (const auto& clip : {noise(0.05, 0.5, 4), sine(440, 1.0), noise(2.0, 1e-6, 5),
                           io::AudioClip(std::vector<double>(4000, 0.0), kRate)}) {
    const auto v = classical_features(clip);
    for (double x : v.values) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(Classical, ZeroClipIsTheKnownConstant) {
  const auto v = classical_features(io::AudioClip(std::vector<double>(4000, 0.0), kRate));
  // Every mel energy sits at the 1e-10 floor: mfcc_1 = sqrt(40) ln 1e-10, the rest vanish.
  for (int d = 0; d < kLongTermDim; ++d) {
    if (d == feature::mfcc_first) {
      EXPECT_NEAR(v.values[d], std::sqrt(40.0) * std::log(1e-10), 1e-9);
    } else {
      EXPECT_NEAR(v.values[d], 0.0, 1e-12) << d;
    }
  }
}

TEST(Classical, RiceAndWaterDiffer) {
  const auto rice = classical_features(synth::synth_audio({FillingType::rice, 1.0, kRate, 11}));
  const auto water = classical_features(synth::synth_audio({FillingType::water, 1.0, kRate, 11}));
  double dist = 0;
  for (int d = 0; d < kLongTermDim; ++d) dist += std::pow(rice.values[d] - water.values[d], 2);
  EXPECT_GT(std::sqrt(dist), 0.0);
  // Bursty broadband clicks cross zero far more often than 1 kHz low-passed noise.
  EXPECT_GT(rice.values[feature::zcr], water.values[feature::zcr]);
}

TEST(MelBank, FiltersAreTrianglesInsideNyquist) {
  const auto bank = mel_filterbank(800, kRate, kNumMelFilters);
  ASSERT_EQ(bank.size(), static_cast<std::size_t>(kNumMelFilters));
  for (const auto& f : bank) {
    double peak = 0;
    for (double w : f) {
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
      peak = std::max(peak, w);
    }
    EXPECT_GT(peak, 0.0);
  }
}

}  // namespace
}  // namespace fillmass::audio
