// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <numbers>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "fillmass/errors.hpp"
#include "fillmass/media_io.hpp"
#include "fillmass/random.hpp"
#include "test_support.hpp"

namespace fillmass::io {
namespace {

using fillmass::testing::TempDir;

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// --- WAV -------------------------------------------------------------------

TEST(Wav, SilentSecondDecodesToZeros) {
  const std::vector<double> zeros(44100, 0.0);
  const auto clip = parse_wav(encode_wav(zeros, 1, 44100, WavEncoding::pcm16));
  EXPECT_EQ(clip.size(), 44100u);
  EXPECT_EQ(clip.sample_rate(), 44100);
  for (double v : clip.samples()) EXPECT_EQ(v, 0.0);
}

TEST(Wav, FullScale16BitIsExactlyOne) {
  const std::vector<double> one = {1.0, -1.0};
  const auto clip = parse_wav(encode_wav(one, 1, 8000, WavEncoding::pcm16));
  EXPECT_EQ(clip.samples()[0], 1.0);
  EXPECT_EQ(clip.samples()[1], -1.0);
}

TEST(Wav, OppositeStereoChannelsCancel) {
  std::vector<double> inter;
  for (int i = 0; i < 100; ++i) {
    inter.push_back(0.5);
    inter.push_back(-0.5);
  }
  for (auto enc : {WavEncoding::pcm16, WavEncoding::pcm32, WavEncoding::float32}) {
    const auto clip = parse_wav(encode_wav(inter, 2, 16000, enc));
    ASSERT_EQ(clip.size(), 100u);
    for (double v : clip.samples()) EXPECT_NEAR(v, 0.0, 1e-9);
  }
}

TEST(Wav, IdenticalChannelsDownmixToEitherChannel) {
  Rng rng(4);
  std::vector<double> mono(300), inter;
  for (auto& v : mono) {
    v = rng.uniform(-1, 1);
    for (int c = 0; c < 3; ++c) inter.push_back(v);
  }
  const auto one = parse_wav(encode_wav(mono, 1, 16000, WavEncoding::pcm16));
  const auto three = parse_wav(encode_wav(inter, 3, 16000, WavEncoding::pcm16));
  EXPECT_EQ(one.samples(), three.samples());
}

TEST(Wav, EveryEncodingRoundTripsWithinQuantization) {
  Rng rng(8);
  std::vector<double> x(500);
  for (auto& v : x) v = rng.uniform(-1, 1);
  const std::pair<WavEncoding, double> cases[] = {{WavEncoding::pcm8, 1.0 / 127},
                                                  {WavEncoding::pcm16, 1.0 / 32767},
                                                  {WavEncoding::pcm32, 1e-9},
                                                  {WavEncoding::float32, 1e-7}};
  for (auto [enc, tol] : cases) {
    const auto clip = parse_wav(encode_wav(x, 1, 22050, enc));
    ASSERT_EQ(clip.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(clip.samples()[i], x[i], tol);
  }
}

TEST(Wav, DecodingIsIdempotent) {
  TempDir dir;
  Rng rng(2);
  std::vector<double> x(1000);
  for (auto& v : x) v = rng.uniform(-1, 1);
  write_wav(dir / "a.wav", AudioClip(x, 16000));
  const auto a = read_wav(dir / "a.wav");
  write_wav(dir / "b.wav", a);
  EXPECT_EQ(read_wav(dir / "b.wav"), a);
  EXPECT_EQ(read_wav(dir / "a.wav"), a);
}

TEST(Wav, MalformedHeadersAreFormatErrors) {
  EXPECT_THROW(parse_wav(bytes_of("RIFX0000WAVE")), FormatError);
  EXPECT_THROW(parse_wav(bytes_of("RIFF")), FormatError);
  auto good = encode_wav(std::vector<double>(10, 0.0), 1, 8000, WavEncoding::pcm16);
  good.resize(30);
  EXPECT_THROW(parse_wav(good), FormatError);
}

TEST(Wav, UnsupportedEncodingsAreRejected) {
  auto bytes = encode_wav(std::vector<double>(10, 0.0), 1, 8000, WavEncoding::pcm16);
  // fmt chunk starts at byte 12; audio format code sits at offset 20.
  bytes[20] = 2;  // ADPCM
  EXPECT_THROW(parse_wav(bytes), UnsupportedError);
  auto bits = encode_wav(std::vector<double>(10, 0.0), 1, 8000, WavEncoding::pcm16);
  bits[34] = 24;
  EXPECT_THROW(parse_wav(bits), UnsupportedError);
}

TEST(AudioClip, RejectsInvalidSamples) {
  EXPECT_THROW(AudioClip({0.0}, 0), ValidationError);
  EXPECT_THROW(AudioClip({1.5}, 8000), ValidationError);
  EXPECT_THROW(AudioClip({std::nan("")}, 8000), ValidationError);
}

// --- PGM -------------------------------------------------------------------

TEST(Pgm, ThresholdDefinesForeground) {
  std::string p5 = "P5\n2 2\n255\n";
  p5 += std::string{'\0', '\0', '\xff', '\xff'};
  const auto m = parse_pgm_mask(bytes_of(p5), 128.0);
  EXPECT_FALSE(m.at(0, 0));
  EXPECT_FALSE(m.at(1, 0));
  EXPECT_TRUE(m.at(0, 1));
  EXPECT_TRUE(m.at(1, 1));
}

TEST(Pgm, AllZeroAndAllMaxval) {
  const auto zero = parse_pgm_mask(bytes_of("P2\n3 2\n255\n0 0 0\n0 0 0\n"));
  EXPECT_EQ(zero.foreground_count(), 0u);
  const auto full = parse_pgm_mask(bytes_of("P2\n# comment\n3 2\n255\n255 255 255 255 255 255\n"));
  EXPECT_EQ(full.foreground_count(), 6u);
}

TEST(Pgm, SixteenBitBinary) {
  std::string p5 = "P5 2 1 65535\n";
  p5 += std::string{'\x00', '\x10', '\xff', '\x00'};  // 16, 65280
  const auto m = parse_pgm_mask(bytes_of(p5));
  EXPECT_FALSE(m.at(0, 0));
  EXPECT_TRUE(m.at(1, 0));
}

TEST(Pgm, DefaultThresholdIsHalfMaxval) {
  const auto m = parse_pgm_mask(bytes_of("P2 3 1 100 49 50 51"));
  EXPECT_FALSE(m.at(0, 0));
  EXPECT_TRUE(m.at(1, 0));
  EXPECT_TRUE(m.at(2, 0));
}

TEST(Pgm, BadInputs) {
  EXPECT_THROW(parse_pgm_mask(bytes_of("P6\n1 1\n255\n\0\0\0")), FormatError);
  EXPECT_THROW(parse_pgm_mask(bytes_of("P5\n4 4\n255\nabc")), FormatError);
  EXPECT_THROW(parse_pgm_mask(bytes_of("P2\n2 1\n255\n1 2"), 0.0), DomainError);
  EXPECT_THROW(parse_pgm_mask(bytes_of("P2\n2 1\n255\n1 2"), 255.0), DomainError);
}

TEST(Pgm, MaskRoundTripIsExact) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(40)), h = 1 + static_cast<int>(rng.below(40));
    MaskImage m(w, h);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) m.set(c, r, rng.uniform() < 0.4);
    }
    EXPECT_EQ(parse_pgm_mask(encode_pgm_mask(m)), m);
  }
}

TEST(MaskImage, ContainsForegroundFloorsAndClips) {
  MaskImage m(3, 2);
  m.set(1, 1, true);
  EXPECT_TRUE(m.contains_foreground(1.0, 1.0));
  EXPECT_TRUE(m.contains_foreground(1.99, 1.5));
  EXPECT_FALSE(m.contains_foreground(2.0, 1.5));
  EXPECT_FALSE(m.contains_foreground(-0.1, 0));
  EXPECT_FALSE(m.contains_foreground(1.5, 7));
  EXPECT_FALSE(m.contains_foreground(std::nan(""), 1));
  EXPECT_THROW(MaskImage(0, 3), ValidationError);
}

// --- Calibration -----------------------------------------------------------

std::string calib_json(const std::string& fx, const std::string& R) {
  return R"({"fx": )" + fx + R"(, "fy": 500, "cx": 320, "cy": 320, "R": )" + R +
         R"(, "t": [0, 0, 0]})";
}

TEST(Calibration, IdentityIsValid) {
  const auto c = parse_calibration(calib_json("500", "[1,0,0, 0,1,0, 0,0,1]"));
  EXPECT_EQ(c.fx, 500);
  EXPECT_EQ(c.cx, 320);
  EXPECT_TRUE(c.R.isIdentity());
}

TEST(Calibration, ReflectionAndZeroFocalAreRejected) {
  EXPECT_THROW(parse_calibration(calib_json("500", "[1,0,0, 0,1,0, 0,0,-1]")), ValidationError);
  EXPECT_THROW(parse_calibration(calib_json("0", "[1,0,0, 0,1,0, 0,0,1]")), ValidationError);
  EXPECT_THROW(parse_calibration(calib_json("500", "[1,0.1,0, 0,1,0, 0,0,1]")), ValidationError);
}

TEST(Calibration, MissingKeyIsFormatError) {
  EXPECT_THROW(parse_calibration(R"({"fx": 1, "fy": 1, "cx": 0, "cy": 0, "t": [0,0,0]})"),
               FormatError);
  EXPECT_THROW(parse_calibration("not json"), FormatError);
}

TEST(Calibration, RoundTripsThroughJson) {
  CameraCalibration c;
  c.fx = 701.5;
  c.fy = 699.25;
  c.cx = 320.5;
  c.cy = 240;
  c.R = Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  c.t = Eigen::Vector3d(0.1, -0.2, 1.3);
  const auto back = parse_calibration(format_calibration(c));
  EXPECT_EQ(back.fx, c.fx);
  EXPECT_EQ(back.R, c.R);
  EXPECT_EQ(back.t, c.t);
}

// --- Embeddings ------------------------------------------------------------

std::string csv_of(int rows, int cols, double v = 0.25) {
  std::string out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out += (c ? "," : "") + std::to_string(v);
    out += "\n";
  }
  return out;
}

TEST(Embeddings, ShapesSelectSource) {
  const auto a = parse_embedding_sequence(csv_of(10, 128));
  EXPECT_EQ(a.length(), 10);
  EXPECT_EQ(a.dim(), 128);
  EXPECT_EQ(a.source(), EmbeddingSource::audio);
  const auto v = parse_embedding_sequence(csv_of(6, 512), 1);
  EXPECT_EQ(v.length(), 6);
  EXPECT_EQ(v.source(), EmbeddingSource::video);
  EXPECT_EQ(v.camera_id(), 1);
}

TEST(Embeddings, Errors) {
  EXPECT_THROW(parse_embedding_sequence(csv_of(3, 100)), DimensionError);
  std::string ragged = csv_of(2, 128);
  ragged += "1,2\n";
  EXPECT_THROW(parse_embedding_sequence(ragged), FormatError);
  std::string nan = csv_of(1, 127);
  nan.pop_back();
  nan += ",nan\n";
  EXPECT_THROW(parse_embedding_sequence(nan), ValidationError);
  EXPECT_THROW(parse_embedding_sequence(""), FormatError);
  EXPECT_THROW(EmbeddingSequence(Eigen::MatrixXd::Zero(2, 128), 0), ValidationError);
}

TEST(Embeddings, RoundTripIsBitExact) {
  Rng rng(10);
  Eigen::MatrixXd m(7, 512);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
  const EmbeddingSequence seq(m, 0);
  const auto back = parse_embedding_sequence(format_embedding_sequence(seq), 0);
  EXPECT_EQ(std::memcmp(back.data().data(), m.data(), sizeof(double) * m.size()), 0);
}

// --- Lengths -----------------------------------------------------------------

TEST(SequenceLengths, FloorFormulas) {
  EXPECT_EQ(expected_sequence_lengths(9.6, 0).audio_steps, 10);
  EXPECT_EQ(expected_sequence_lengths(0, 100).video_steps, 6);
  EXPECT_EQ(expected_sequence_lengths(0.5, 0).audio_steps, 0);
  EXPECT_THROW(expected_sequence_lengths(-1, 0), DomainError);
  EXPECT_THROW(expected_sequence_lengths(0, -1), DomainError);
}

TEST(SequenceLengths, MonotoneInEachArgument) {
  long long prev_a = 0, prev_v = 0;
  for (int i = 0; i <= 2000; ++i) {
    const auto l = expected_sequence_lengths(i * 0.01, i);
    EXPECT_GE(l.audio_steps, prev_a);
    EXPECT_GE(l.video_steps, prev_v);
    prev_a = l.audio_steps;
    prev_v = l.video_steps;
  }
}

// --- Manifest --------------------------------------------------------------

SequenceRecord record_in(const TempDir& dir, const std::string& id) {
  write_wav(dir / (id + ".wav"), AudioClip(std::vector<double>(800, 0.0), 8000));
  SequenceRecord r;
  r.sequence_id = id;
  r.container_id = 4;
  r.container_type = ContainerType::glass;
  r.num_frames = 80;
  r.audio = dir / (id + ".wav");
  return r;
}

TEST(Manifest, RoundTripsWithRelativePaths) {
  TempDir dir;
  DatasetManifest m;
  auto r = record_in(dir, "a");
  write_pgm_mask(dir / "m1.pgm", MaskImage(2, 2));
  write_pgm_mask(dir / "m2.pgm", MaskImage(2, 2));
  r.masks.push_back({0, {dir / "m1.pgm", dir / "m2.pgm"}});
  SequenceLabels lab;
  lab.filling_type = FillingType::rice;
  lab.filling_level = FillingLevel::percent90;
  lab.capacity_ml = 321.5;
  lab.mass_g = 245.9475;
  r.labels = lab;
  m.records.push_back(r);
  m.records.push_back(record_in(dir, "b"));
  write_manifest(dir / "manifest.json", m);
  EXPECT_EQ(read_text_file(dir / "manifest.json").find(dir.path().string()), std::string::npos);

  const auto back = read_manifest(dir / "manifest.json");
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0].audio, r.audio);
  EXPECT_EQ(back.records[0].masks[0].per_camera[1], dir / "m2.pgm");
  ASSERT_TRUE(back.records[0].labels);
  EXPECT_EQ(back.records[0].labels->filling_level, FillingLevel::percent90);
  EXPECT_EQ(back.records[0].labels->mass_g, 245.9475);
  EXPECT_FALSE(back.records[1].labels);
}

TEST(Manifest, DuplicateIdsAndMissingFilesAreRejected) {
  TempDir dir;
  DatasetManifest dup;
  dup.records = {record_in(dir, "a"), record_in(dir, "a")};
  write_manifest(dir / "dup.json", dup);
  EXPECT_THROW(read_manifest(dir / "dup.json"), ValidationError);

  DatasetManifest missing;
  missing.records = {record_in(dir, "c")};
  write_manifest(dir / "missing.json", missing);
  std::filesystem::remove(dir / "c.wav");
  EXPECT_THROW(read_manifest(dir / "missing.json"), ValidationError);
}

}  // namespace
}  // namespace fillmass::io
