// SPDX-License-Identifier: Apache-2.0
#include "fillmass/media_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fillmass/errors.hpp"

namespace fillmass::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Domain types

AudioClip::AudioClip(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0) throw ValidationError("sample rate must be positive");
  for (double s : samples_) {
    if (!std::isfinite(s) || s < -1.0 || s > 1.0) {
      throw ValidationError("audio samples must be finite and within [-1, 1]");
    }
  }
}

MaskImage::MaskImage(int width, int height) : MaskImage(width, height, {}) {}

MaskImage::MaskImage(int width, int height, std::vector<std::uint8_t> foreground)
    : width_(width), height_(height), fg_(std::move(foreground)) {
  if (width_ <= 0 || height_ <= 0) throw ValidationError("mask dimensions must be positive");
  const auto n = static_cast<std::size_t>(width_) * height_;
  if (fg_.empty()) fg_.assign(n, 0);
  if (fg_.size() != n) throw ValidationError("mask payload does not match width*height");
  for (auto& v : fg_) v = v ? 1 : 0;
}

bool MaskImage::contains_foreground(double u, double v) const {
  if (!(u >= 0.0) || !(v >= 0.0)) return false;  // also rejects NaN
  const double col = std::floor(u);
  const double row = std::floor(v);
  if (col >= width_ || row >= height_) return false;
  return at(static_cast<int>(col), static_cast<int>(row));
}

std::size_t MaskImage::foreground_count() const {
  return static_cast<std::size_t>(std::count(fg_.begin(), fg_.end(), std::uint8_t{1}));
}

void CameraCalibration::validate(double tolerance) const {
  if (!(fx > 0) || !(fy > 0)) throw ValidationError("focal lengths must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy) || !R.allFinite() || !t.allFinite()) {
    throw ValidationError("calibration entries must be finite");
  }
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tolerance) throw ValidationError("rotation matrix is not orthonormal");
  if (std::abs(R.determinant() - 1.0) > tolerance) {
    throw ValidationError("rotation matrix determinant is not +1");
  }
}

EmbeddingSequence::EmbeddingSequence(Eigen::MatrixXd data, std::optional<int> camera_id)
    : data_(std::move(data)), camera_id_(camera_id) {
  if (data_.rows() < 1) throw ValidationError("embedding sequence needs at least one timestep");
  if (data_.cols() == kAudioEmbeddingDim) {
    source_ = EmbeddingSource::audio;
  } else if (data_.cols() == kVideoEmbeddingDim) {
    source_ = EmbeddingSource::video;
  } else {
    throw DimensionError("embedding dimension must be 128 or 512, got " +
                         std::to_string(data_.cols()));
  }
  if (!data_.allFinite()) throw ValidationError("embedding contains non-finite entries");
  if (source_ == EmbeddingSource::audio && camera_id_) {
    throw ValidationError("audio embeddings carry no camera id");
  }
}

// ---------------------------------------------------------------------------
// File helpers

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

// ---------------------------------------------------------------------------
// WAV

namespace {

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back(v >> 8);
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip parse_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || !tag_is(b, 0, "RIFF") || !tag_is(b, 8, "WAVE")) {
    throw FormatError("not a RIFF/WAVE file");
  }
  std::optional<std::span<const std::uint8_t>> fmt;
  std::optional<std::span<const std::uint8_t>> data;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (size > b.size() - body) {
      if (tag_is(b, pos, "data")) throw FormatError("truncated data chunk");
      throw FormatError("truncated chunk");
    }
    if (tag_is(b, pos, "fmt ")) fmt = b.subspan(body, size);
    if (tag_is(b, pos, "data")) data = b.subspan(body, size);
    pos = body + size + (size & 1u);
  }
  if (!fmt || fmt->size() < 16) throw FormatError("missing or short fmt chunk");
  if (!data) throw FormatError("missing data chunk");

  std::uint16_t format = le16(*fmt, 0);
  const int channels = le16(*fmt, 2);
  const std::uint32_t rate = le32(*fmt, 4);
  const int bits = le16(*fmt, 14);
  if (format == kFormatExtensible) {
    if (fmt->size() < 26) throw FormatError("short WAVE_FORMAT_EXTENSIBLE header");
    format = le16(*fmt, 24);
  }
  if (channels == 0) throw FormatError("zero channels");
  if (rate == 0 || rate > static_cast<std::uint32_t>(INT32_MAX)) {
    throw FormatError("bad sample rate");
  }
  if (channels > 8) throw UnsupportedError("more than 8 channels");
  const bool is_int = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 32);
  const bool is_float = format == kFormatFloat && bits == 32;
  if (!is_int && !is_float) {
    throw UnsupportedError("unsupported WAV encoding (format " + std::to_string(format) +
                           ", " + std::to_string(bits) + " bits)");
  }

  const std::size_t bytes_per_sample = static_cast<std::size_t>(bits) / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data->size() / frame_bytes;
  std::vector<double> mono(frames);
  std::vector<double> frame_values(channels);
  for (std::size_t f = 0; f < frames; ++f) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t at = f * frame_bytes + c * bytes_per_sample;
      double v = 0;
      if (is_float) {
        const std::uint32_t raw = le32(*data, at);
        float fv;
        std::memcpy(&fv, &raw, sizeof fv);
        v = fv;
      } else if (bits == 8) {
        v = (static_cast<int>((*data)[at]) - 128) / 127.0;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(le16(*data, at)) / 32767.0;
      } else {
        v = static_cast<std::int32_t>(le32(*data, at)) / 2147483647.0;
      }
      if (!std::isfinite(v)) throw ValidationError("non-finite sample in WAV data");
      frame_values[c] = std::clamp(v, -1.0, 1.0);
    }
    const bool identical = std::all_of(frame_values.begin(), frame_values.end(),
                                       [&](double x) { return x == frame_values[0]; });
    if (identical) {
      mono[f] = frame_values[0];
    } else {
      double sum = 0;
      for (double x : frame_values) sum += x;
      mono[f] = std::clamp(sum / channels, -1.0, 1.0);
    }
  }
  return AudioClip(std::move(mono), static_cast<int>(rate));
}

AudioClip read_wav(const fs::path& path) { return parse_wav(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_wav(std::span<const double> interleaved, int channels,
                                     int sample_rate, WavEncoding encoding) {
  if (channels < 1 || channels > 8) throw DomainError("channel count must be 1-8");
  if (interleaved.size() % channels != 0) throw DomainError("interleaved length not divisible");
  int bits = 16;
  std::uint16_t format = kFormatPcm;
  switch (encoding) {
    case WavEncoding::pcm8: bits = 8; break;
    case WavEncoding::pcm16: bits = 16; break;
    case WavEncoding::pcm32: bits = 32; break;
    case WavEncoding::float32: bits = 32; format = kFormatFloat; break;
  }
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, format);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate * channels * (bits / 8)));
  put16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  put16(out, static_cast<std::uint16_t>(bits));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (double x : interleaved) {
    const double s = std::clamp(x, -1.0, 1.0);
    switch (encoding) {
      case WavEncoding::pcm8:
        out.push_back(static_cast<std::uint8_t>(std::lround(s * 127.0) + 128));
        break;
      case WavEncoding::pcm16:
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(s * 32767.0))));
        break;
      case WavEncoding::pcm32:
        put32(out, static_cast<std::uint32_t>(
                       static_cast<std::int32_t>(std::llround(s * 2147483647.0))));
        break;
      case WavEncoding::float32: {
        const float f = static_cast<float>(s);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        put32(out, raw);
        break;
      }
    }
  }
  return out;
}

void write_wav(const fs::path& path, const AudioClip& clip, WavEncoding encoding) {
  write_file_bytes(path, encode_wav(clip.samples(), 1, clip.sample_rate(), encoding));
}

// ---------------------------------------------------------------------------
// PGM

namespace {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> b) : b_(b) {}

  long long next_int() {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw FormatError("malformed PGM header");
    long long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > (1LL << 40)) throw FormatError("PGM header value too large");
    }
    return v;
  }

  /// Binary payload starts after exactly one whitespace byte.
  std::size_t payload_offset() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw FormatError("malformed PGM header");
    return pos_ + 1;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 2;
};

}  // namespace

MaskImage parse_pgm_mask(std::span<const std::uint8_t> b, std::optional<double> threshold) {
  if (b.size() < 2 || b[0] != 'P' || (b[1] != '2' && b[1] != '5')) {
    throw FormatError("not a PGM file (expected P2 or P5)");
  }
  const bool binary = b[1] == '5';
  PgmHeaderReader header(b);
  const long long width = header.next_int();
  const long long height = header.next_int();
  const long long maxval = header.next_int();
  if (width <= 0 || height <= 0 || width > (1 << 16) || height > (1 << 16)) {
    throw FormatError("bad PGM dimensions");
  }
  if (maxval <= 0 || maxval > 65535) throw FormatError("PGM maxval must be in [1, 65535]");
  const double thr = threshold.value_or(static_cast<double>(maxval) / 2.0);
  if (!(thr > 0.0) || !(thr < static_cast<double>(maxval))) {
    throw DomainError("threshold must lie in (0, maxval)");
  }

  const auto n = static_cast<std::size_t>(width * height);
  std::vector<std::uint8_t> fg(n);
  if (binary) {
    const std::size_t off = header.payload_offset();
    const std::size_t bps = maxval > 255 ? 2 : 1;
    if (b.size() < off + n * bps) throw FormatError("truncated PGM payload");
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bps == 1 ? b[off + i] : (b[off + 2 * i] << 8) | b[off + 2 * i + 1];
      fg[i] = static_cast<double>(v) >= thr ? 1 : 0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      long long v = 0;
      try {
        v = header.next_int();
      } catch (const FormatError&) {
        throw FormatError("truncated PGM payload");
      }
      if (v > maxval) throw FormatError("PGM pixel exceeds maxval");
      fg[i] = static_cast<double>(v) >= thr ? 1 : 0;
    }
  }
  return MaskImage(static_cast<int>(width), static_cast<int>(height), std::move(fg));
}

MaskImage read_pgm_mask(const fs::path& path, std::optional<double> threshold) {
  return parse_pgm_mask(read_file_bytes(path), threshold);
}

std::vector<std::uint8_t> encode_pgm_mask(const MaskImage& mask) {
  const std::string header = "P5\n" + std::to_string(mask.width()) + " " +
                             std::to_string(mask.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + mask.data().size());
  for (auto v : mask.data()) out.push_back(v ? 255 : 0);
  return out;
}

void write_pgm_mask(const fs::path& path, const MaskImage& mask) {
  write_file_bytes(path, encode_pgm_mask(mask));
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

double require_number(const json& obj, const char* key) {
  if (!obj.contains(key)) throw FormatError(std::string("calibration missing key '") + key + "'");
  if (!obj[key].is_number()) throw FormatError(std::string("calibration key '") + key + "' is not a number");
  return obj[key].get<double>();
}

std::vector<double> require_array(const json& obj, const char* key, std::size_t n) {
  if (!obj.contains(key)) throw FormatError(std::string("calibration missing key '") + key + "'");
  const json& arr = obj[key];
  if (!arr.is_array() || arr.size() != n) {
    throw FormatError(std::string("calibration key '") + key + "' must hold " +
                      std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw FormatError(std::string("non-numeric entry in '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

CameraCalibration parse_calibration(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("calibration is not valid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw FormatError("calibration must be a JSON object");
  CameraCalibration c;
  c.fx = require_number(obj, "fx");
  c.fy = require_number(obj, "fy");
  c.cx = require_number(obj, "cx");
  c.cy = require_number(obj, "cy");
  const auto r = require_array(obj, "R", 9);
  const auto t = require_array(obj, "t", 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c.R(i, j) = r[3 * i + j];
    c.t(i) = t[i];
  }
  c.validate(1e-6);
  return c;
}

CameraCalibration read_calibration(const fs::path& path) {
  return parse_calibration(read_text_file(path));
}

std::string format_calibration(const CameraCalibration& c) {
  json obj;
  obj["fx"] = c.fx;
  obj["fy"] = c.fy;
  obj["cx"] = c.cx;
  obj["cy"] = c.cy;
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(c.R(i, j));
  obj["R"] = r;
  obj["t"] = {c.t(0), c.t(1), c.t(2)};
  return obj.dump(2) + "\n";
}

void write_calibration(const fs::path& path, const CameraCalibration& calib) {
  write_text_file(path, format_calibration(calib));
}

// ---------------------------------------------------------------------------
// Embedding CSV

EmbeddingSequence parse_embedding_sequence(std::string_view csv, std::optional<int> camera_id) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    std::string_view line = csv.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view tok = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
      while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
      double v = 0;
      const auto lower = std::string(tok);
      if (lower == "nan" || lower == "NaN" || lower == "-nan" || lower == "NAN") {
        throw ValidationError("NaN entry in embedding row " + std::to_string(rows + 1));
      }
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw FormatError("unparseable embedding value '" + std::string(tok) + "' in row " +
                          std::to_string(rows + 1));
      }
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite entry in embedding row " + std::to_string(rows + 1));
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw FormatError("ragged embedding CSV: row " + std::to_string(rows + 1) + " has " +
                        std::to_string(count) + " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("empty embedding CSV");
  if (cols != kAudioEmbeddingDim && cols != kVideoEmbeddingDim) {
    throw DimensionError("embedding dimension must be 128 or 512, got " + std::to_string(cols));
  }
  Eigen::MatrixXd data(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) data(r, c) = values[r * cols + c];
  if (cols == kAudioEmbeddingDim) camera_id.reset();
  return EmbeddingSequence(std::move(data), camera_id);
}

EmbeddingSequence read_embedding_sequence(const fs::path& path, std::optional<int> camera_id) {
  return parse_embedding_sequence(read_text_file(path), camera_id);
}

std::string format_embedding_sequence(const EmbeddingSequence& seq) {
  std::string out;
  char buf[32];
  const auto& m = seq.data();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out.push_back(',');
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m(r, c));
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

void write_embedding_sequence(const fs::path& path, const EmbeddingSequence& seq) {
  write_text_file(path, format_embedding_sequence(seq));
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relativize(const fs::path& base, const fs::path& p) {
  if (p.is_relative()) return p.generic_string();
  const fs::path rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

void require_exists(const fs::path& p, const std::string& id) {
  if (!fs::exists(p)) {
    throw ValidationError("sequence '" + id + "' references missing file " + p.string());
  }
}

template <typename T>
T get_required(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key)) throw FormatError(context + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(context + ": bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

DatasetManifest read_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw FormatError("manifest must be a JSON array of records");
  const fs::path base = fs::absolute(path).parent_path();
  DatasetManifest manifest;
  std::set<std::string> seen;
  for (const auto& rec : doc) {
    if (!rec.is_object()) throw FormatError("manifest record must be an object");
    SequenceRecord r;
    r.sequence_id = get_required<std::string>(rec, "sequence_id", "manifest record");
    const std::string ctx = "sequence '" + r.sequence_id + "'";
    if (!seen.insert(r.sequence_id).second) {
      throw ValidationError("duplicate sequence_id '" + r.sequence_id + "'");
    }
    r.container_id = get_required<int>(rec, "container_id", ctx);
    const auto ctype = parse_container_type(get_required<std::string>(rec, "container_type", ctx));
    if (!ctype) throw ValidationError(ctx + ": container_type must be cup, glass or box");
    r.container_type = *ctype;
    r.num_frames = rec.value("num_frames", 0);
    r.audio = resolve(base, get_required<std::string>(rec, "audio", ctx));
    require_exists(r.audio, r.sequence_id);
    if (rec.contains("masks")) {
      for (const auto& fm : rec["masks"]) {
        FrameMasks frame;
        frame.frame = get_required<int>(fm, "frame", ctx);
        for (const auto& p : get_required<std::vector<std::string>>(fm, "paths", ctx)) {
          frame.per_camera.push_back(resolve(base, p));
          require_exists(frame.per_camera.back(), r.sequence_id);
        }
        r.masks.push_back(std::move(frame));
      }
    }
    if (rec.contains("calibrations")) {
      for (const auto& p : rec["calibrations"].get<std::vector<std::string>>()) {
        r.calibrations.push_back(resolve(base, p));
        require_exists(r.calibrations.back(), r.sequence_id);
      }
    }
    if (rec.contains("embeddings")) {
      const auto& emb = rec["embeddings"];
      if (emb.contains("audio") && !emb["audio"].is_null()) {
        r.audio_embedding = resolve(base, emb["audio"].get<std::string>());
        require_exists(*r.audio_embedding, r.sequence_id);
      }
      if (emb.contains("video")) {
        for (const auto& p : emb["video"].get<std::vector<std::string>>()) {
          r.video_embeddings.push_back(resolve(base, p));
          require_exists(r.video_embeddings.back(), r.sequence_id);
        }
      }
    }
    if (rec.contains("labels") && !rec["labels"].is_null()) {
      const auto& lab = rec["labels"];
      SequenceLabels l;
      const auto type = parse_filling_type(get_required<std::string>(lab, "filling_type", ctx));
      if (!type) throw ValidationError(ctx + ": unknown filling_type");
      const auto level = level_from_percent(get_required<int>(lab, "filling_level", ctx));
      if (!level) throw ValidationError(ctx + ": filling_level must be 0, 50 or 90");
      l.filling_type = *type;
      l.filling_level = *level;
      l.capacity_ml = get_required<double>(lab, "capacity_ml", ctx);
      l.mass_g = get_required<double>(lab, "mass_g", ctx);
      r.labels = l;
    }
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  const fs::path base = fs::absolute(path).parent_path();
  json doc = json::array();
  for (const auto& r : manifest.records) {
    json rec;
    rec["sequence_id"] = r.sequence_id;
    rec["container_id"] = r.container_id;
    rec["container_type"] = std::string(name_of(r.container_type));
    rec["num_frames"] = r.num_frames;
    rec["audio"] = relativize(base, r.audio);
    json masks = json::array();
    for (const auto& fm : r.masks) {
      json paths = json::array();
      for (const auto& p : fm.per_camera) paths.push_back(relativize(base, p));
      masks.push_back({{"frame", fm.frame}, {"paths", paths}});
    }
    rec["masks"] = masks;
    json calibs = json::array();
    for (const auto& p : r.calibrations) calibs.push_back(relativize(base, p));
    rec["calibrations"] = calibs;
    json emb;
    emb["audio"] = r.audio_embedding ? json(relativize(base, *r.audio_embedding)) : json(nullptr);
    json video = json::array();
    for (const auto& p : r.video_embeddings) video.push_back(relativize(base, p));
    emb["video"] = video;
    rec["embeddings"] = emb;
    if (r.labels) {
      rec["labels"] = {{"filling_type", std::string(name_of(r.labels->filling_type))},
                       {"filling_level", percent_of(r.labels->filling_level)},
                       {"capacity_ml", r.labels->capacity_ml},
                       {"mass_g", r.labels->mass_g}};
    } else {
      rec["labels"] = nullptr;
    }
    doc.push_back(std::move(rec));
  }
  write_text_file(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

SequenceLengths expected_sequence_lengths(double duration_seconds, long long num_frames) {
  if (!(duration_seconds >= 0.0) || num_frames < 0) {
    throw DomainError("sequence length inputs must be non-negative");
  }
  // The relative nudge keeps exact multiples of 0.96 (e.g. 9.6 s) from
  // flooring one step short through representation error.
  const double windows = duration_seconds / 0.96;
  const auto audio = static_cast<long long>(std::floor(windows * (1.0 + 1e-12)));
  return {audio, num_frames / 16};
}

}  // namespace fillmass::io
