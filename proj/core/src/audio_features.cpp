// SPDX-License-Identifier: Apache-2.0
#include "fillmass/audio_features.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "fillmass/errors.hpp"

namespace fillmass::audio {

namespace {

constexpr double kLogFloor = 1e-10;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Entropy (bits) of the block-energy distribution over `blocks` equal blocks.
double block_entropy(std::span<const double> energies, int blocks) {
  const std::size_t len = energies.size() / static_cast<std::size_t>(blocks);
  if (len == 0) return 0.0;
  std::vector<double> e(blocks, 0.0);
  double total = 0;
  for (int b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < len; ++i) e[b] += energies[b * len + i];
    total += e[b];
  }
  if (!(total > 0)) return 0.0;
  double h = 0;
  for (double v : e) {
    const double p = v / total;
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

/// Per-clip constants: window, filterbank, chroma bin assignment.
struct Analyzer {
  int n;
  int sample_rate;
  std::vector<double> hamming;
  std::vector<std::vector<double>> mel;
  std::vector<int> chroma_bin;  // -1 for DC
  Eigen::FFT<double> fft;

  Analyzer(int length, int rate)
      : n(length), sample_rate(rate), mel(mel_filterbank(length, rate)) {
    hamming.resize(n);
    for (int i = 0; i < n; ++i) {
      hamming[i] = n == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    }
    const int bins = n / 2 + 1;
    chroma_bin.assign(bins, -1);
    for (int k = 1; k < bins; ++k) {
      const double f = static_cast<double>(k) * rate / n;
      const double midi = 12.0 * std::log2(f / 440.0) + 69.0;
      const long pc = std::lround(midi) % 12;
      chroma_bin[k] = static_cast<int>(pc < 0 ? pc + 12 : pc);
    }
  }

  std::vector<double> spectrum(std::span<const double> frame) {
    std::vector<double> windowed(n);
    for (int i = 0; i < n; ++i) windowed[i] = frame[i] * hamming[i];
    std::vector<std::complex<double>> out;
    fft.fwd(out, windowed);
    const int bins = n / 2 + 1;
    std::vector<double> mag(bins);
    for (int k = 0; k < bins; ++k) mag[k] = std::abs(out[k]) / n;
    return mag;
  }
};

void time_domain(std::span<const double> x, int subframes, FeatureArray& f) {
  const std::size_t n = x.size();
  double crossings = 0;
  double energy = 0;
  std::vector<double> sq(n);
  auto sign = [](double v) { return (v > 0) - (v < 0); };
  for (std::size_t i = 0; i < n; ++i) {
    sq[i] = x[i] * x[i];
    energy += sq[i];
    if (i > 0) crossings += std::abs(sign(x[i]) - sign(x[i - 1])) / 2.0;
  }
  f[feature::zcr] = n > 1 ? crossings / static_cast<double>(n - 1) : 0.0;
  f[feature::energy] = energy / static_cast<double>(n);
  f[feature::energy_entropy] = block_entropy(sq, subframes);
}

void spectral(const Analyzer& a, std::span<const double> mag, std::span<const double> prev_mag,
              const FrameConfig& cfg, FeatureArray& f) {
  const std::size_t bins = mag.size();
  const double n = a.n;
  double sum = 0;
  double power_total = 0;
  std::vector<double> power(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    sum += mag[k];
    power[k] = mag[k] * mag[k];
    power_total += power[k];
  }

  if (sum > 0 && power_total > 0) {
    double centroid = 0;
    for (std::size_t k = 0; k < bins; ++k) centroid += (k / n) * mag[k];
    centroid /= sum;
    double spread = 0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double d = k / n - centroid;
      spread += d * d * mag[k];
    }
    f[feature::spectral_centroid] = centroid;
    f[feature::spectral_spread] = std::sqrt(spread / sum);
    f[feature::spectral_entropy] = block_entropy(power, cfg.entropy_subbands);

    double cum = 0;
    std::size_t k_roll = bins - 1;
    for (std::size_t k = 0; k < bins; ++k) {
      cum += power[k];
      if (cum >= cfg.rolloff_fraction * power_total) {
        k_roll = k;
        break;
      }
    }
    f[feature::spectral_rolloff] = k_roll / n;

    double prev_sum = 0;
    for (double v : prev_mag) prev_sum += v;
    if (!prev_mag.empty() && prev_sum > 0) {
      double flux = 0;
      for (std::size_t k = 0; k < bins; ++k) {
        const double d = mag[k] / sum - prev_mag[k] / prev_sum;
        flux += d * d;
      }
      f[feature::spectral_flux] = flux;
    }
  }

  // MFCC: log mel energies, orthonormal DCT-II.
  const int m_count = static_cast<int>(a.mel.size());
  std::vector<double> log_mel(m_count);
  for (int m = 0; m < m_count; ++m) {
    double e = 0;
    for (std::size_t k = 0; k < bins; ++k) e += a.mel[m][k] * power[k];
    log_mel[m] = std::log(std::max(e, kLogFloor));
  }
  for (int c = 0; c < kNumMfcc; ++c) {
    double acc = 0;
    for (int m = 0; m < m_count; ++m) {
      acc += log_mel[m] * std::cos(std::numbers::pi * c * (m + 0.5) / m_count);
    }
    const double scale = c == 0 ? std::sqrt(1.0 / m_count) : std::sqrt(2.0 / m_count);
    f[feature::mfcc_first + c] = scale * acc;
  }

  std::array<double, kNumChroma> chroma{};
  double chroma_total = 0;
  for (std::size_t k = 1; k < bins; ++k) {
    chroma[a.chroma_bin[k]] += power[k];
    chroma_total += power[k];
  }
  double mean = 0;
  for (int i = 0; i < kNumChroma; ++i) {
    const double v = chroma_total > 0 ? chroma[i] / chroma_total : 0.0;
    f[feature::chroma_first + i] = v;
    mean += v;
  }
  mean /= kNumChroma;
  double var = 0;
  for (int i = 0; i < kNumChroma; ++i) {
    const double d = f[feature::chroma_first + i] - mean;
    var += d * d;
  }
  f[feature::chroma_std] = chroma_total > 0 ? std::sqrt(var / kNumChroma) : 0.0;
}

}  // namespace

const std::array<std::string, kNumShortTerm>& short_term_feature_names() {
  static const std::array<std::string, kNumShortTerm> names = [] {
    std::array<std::string, kNumShortTerm> n;
    n[feature::zcr] = "zcr";
    n[feature::energy] = "energy";
    n[feature::energy_entropy] = "energy_entropy";
    n[feature::spectral_centroid] = "spectral_centroid";
    n[feature::spectral_spread] = "spectral_spread";
    n[feature::spectral_entropy] = "spectral_entropy";
    n[feature::spectral_flux] = "spectral_flux";
    n[feature::spectral_rolloff] = "spectral_rolloff";
    for (int i = 0; i < kNumMfcc; ++i) n[feature::mfcc_first + i] = "mfcc_" + std::to_string(i + 1);
    for (int i = 0; i < kNumChroma; ++i)
      n[feature::chroma_first + i] = "chroma_" + std::to_string(i + 1);
    n[feature::chroma_std] = "chroma_std";
    return n;
  }();
  return names;
}

int window_length(double seconds, int sample_rate) {
  return static_cast<int>(std::lround(seconds * sample_rate));
}

std::size_t frame_count(std::size_t length, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0) throw DomainError("window and hop must be at least one sample");
  if (length < window) throw TooShortError("clip shorter than one analysis window");
  return 1 + (length - window) / hop;
}

std::vector<std::vector<double>> mel_filterbank(int fft_length, int sample_rate, int num_filters) {
  const int bins = fft_length / 2 + 1;
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(num_filters + 2);
  for (int i = 0; i < num_filters + 2; ++i) {
    edges[i] = mel_to_hz(mel_max * i / (num_filters + 1));
  }
  std::vector<std::vector<double>> bank(num_filters, std::vector<double>(bins, 0.0));
  for (int m = 0; m < num_filters; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_length;
      if (f >= lo && f <= mid && mid > lo) {
        bank[m][k] = (f - lo) / (mid - lo);
      } else if (f > mid && f <= hi && hi > mid) {
        bank[m][k] = (hi - f) / (hi - mid);
      }
    }
  }
  return bank;
}

std::vector<double> magnitude_spectrum(std::span<const double> frame) {
  Analyzer a(static_cast<int>(frame.size()), 16000);
  return a.spectrum(frame);
}

std::vector<ShortTermFrame> short_term_features(const io::AudioClip& clip, const FrameConfig& cfg) {
  if (!(cfg.window_seconds > 0) || !(cfg.hop_seconds > 0)) {
    throw DomainError("window and hop durations must be positive");
  }
  const int win = window_length(cfg.window_seconds, clip.sample_rate());
  const int hop = window_length(cfg.hop_seconds, clip.sample_rate());
  const std::size_t count = frame_count(clip.size(), static_cast<std::size_t>(win),
                                        static_cast<std::size_t>(hop));
  Analyzer analyzer(win, clip.sample_rate());
  std::vector<ShortTermFrame> frames(count);
  std::vector<double> prev_mag;
  const std::span<const double> samples(clip.samples());
  for (std::size_t i = 0; i < count; ++i) {
    const auto frame = samples.subspan(i * hop, win);
    auto& f = frames[i].base;
    time_domain(frame, cfg.energy_subframes, f);
    std::vector<double> mag = analyzer.spectrum(frame);
    spectral(analyzer, mag, prev_mag, cfg, f);
    prev_mag = std::move(mag);
    if (i > 0) {
      for (int d = 0; d < kNumShortTerm; ++d) frames[i].delta[d] = f[d] - frames[i - 1].base[d];
    }
  }
  return frames;
}

LongTermVector aggregate_long_term(std::span<const ShortTermFrame> frames) {
  if (frames.empty()) throw DomainError("cannot aggregate an empty frame sequence");
  auto value = [&](std::size_t i, int d) {
    return d < kNumShortTerm ? frames[i].base[d] : frames[i].delta[d - kNumShortTerm];
  };
  const double n = static_cast<double>(frames.size());
  LongTermVector out;
  for (int d = 0; d < kFrameDim; ++d) {
    // Shifted by the first frame so constant sequences give exactly zero spread.
    const double shift = value(0, d);
    double sum = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) sum += value(i, d) - shift;
    const double mean_shifted = sum / n;
    double sq = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const double dev = value(i, d) - shift - mean_shifted;
      sq += dev * dev;
    }
    out.values[d] = shift + mean_shifted;
    out.values[kFrameDim + d] = std::sqrt(sq / n);
  }
  return out;
}

LongTermVector classical_features(const io::AudioClip& clip, const FrameConfig& cfg) {
  const auto frames = short_term_features(clip, cfg);
  return aggregate_long_term(frames);
}

std::vector<std::string> long_term_feature_names() {
  std::vector<std::string> out;
  const auto& names = short_term_feature_names();
  for (const char* stat : {"mean_", "std_"}) {
    for (const char* part : {"", "delta_"}) {
      for (const auto& n : names) out.push_back(std::string(stat) + part + n);
    }
  }
  return out;
}

std::string format_frames_csv(std::span<const ShortTermFrame> frames) {
  std::string out;
  const auto& names = short_term_feature_names();
  for (int d = 0; d < kNumShortTerm; ++d) out += (d ? "," : "") + names[d];
  for (int d = 0; d < kNumShortTerm; ++d) out += ",delta_" + names[d];
  out += '\n';
  char buf[32];
  for (const auto& f : frames) {
    for (int d = 0; d < kFrameDim; ++d) {
      if (d) out.push_back(',');
      const double v = d < kNumShortTerm ? f.base[d] : f.delta[d - kNumShortTerm];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace fillmass::audio
