// Copyright 2026 The xmodal Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "xmodal/dsp.hpp"
#include "xmodal/error.hpp"

namespace xmodal {
namespace {

constexpr double kPi = std::numbers::pi;

// HTK mel triangles spanning 0..8 kHz, unit weight sum, on 512-point bins.
std::vector<std::vector<double>> ReferenceMel() {
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> edges;
  for (int i = 0; i < 28; ++i) edges.push_back(hz(mel(8000.0) * i / 27.0));
  std::vector<std::vector<double>> fb(26, std::vector<double>(257, 0.0));
  for (int m = 0; m < 26; ++m) {
    double sum = 0.0;
    for (int k = 0; k < 257; ++k) {
      const double f = k * 16000.0 / 512.0;
      double w = 0.0;
      if (f > edges[m] && f <= edges[m + 1]) w = (f - edges[m]) / (edges[m + 1] - edges[m]);
      if (f > edges[m + 1] && f < edges[m + 2]) w = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
      fb[m][k] = w;
      sum += w;
    }
    for (double& w : fb[m]) w /= sum;
  }
  return fb;
}

std::vector<double> ReferenceMelEdges() {
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  std::vector<double> edges;
  for (int i = 0; i < 28; ++i) edges.push_back(700.0 * (std::pow(10.0, mel(8000.0) * i / 27.0 / 2595.0) - 1.0));
  return edges;
}

// Log mel energies of frame f by a naive complex DFT of the Hann-windowed,
// reflect-extended, zero-padded segment.
std::vector<double> ReferenceFrame(const std::vector<float>& x, int f) {
  static const auto fb = ReferenceMel();
  std::vector<double> seg(512, 0.0);
  const long n = static_cast<long>(x.size());
  for (int i = 0; i < 62; ++i) {
    long idx = long(f) * 31 + i;
    if (idx >= n) idx = 2 * (n - 1) - idx;
    seg[i] = x[idx] * 0.5 * (1.0 - std::cos(2.0 * kPi * i / 62.0));
  }
  std::vector<double> power(257);
  for (int k = 0; k < 257; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < 512; ++i) acc += seg[i] * std::polar(1.0, -2.0 * kPi * k * i / 512.0);
    power[k] = std::norm(acc);
  }
  std::vector<double> out(26);
  for (int m = 0; m < 26; ++m) {
    double e = 0.0;
    for (int k = 0; k < 257; ++k) e += fb[m][k] * power[k];
    out[m] = e > 1e-10 ? std::log(e) : std::log(1e-10);
  }
  return out;
}

std::vector<float> Tone(double hz, int active = 16000) {
  std::vector<float> x(16000, 0.0f);
  for (int i = 0; i < active; ++i) x[i] = static_cast<float>(std::sin(2.0 * kPi * hz * i / 16000.0));
  return x;
}

TEST(FilterbankTest, MatchesReferenceTriangles) {
  const Matrix fb = mel_filterbank(26, 512, 16000);
  const auto ref = ReferenceMel();
  ASSERT_EQ(fb.rows, 26);
  ASSERT_EQ(fb.cols, 257);
  for (int m = 0; m < 26; ++m)
    for (int k = 0; k < 257; ++k) EXPECT_NEAR(fb.at(m, k), ref[m][k], 1e-6);
}

TEST(StftTest, ShapeAndSilenceFloor) {
  const Matrix s = stft_descriptors(std::vector<float>(16000, 0.0f));
  ASSERT_EQ(s.rows, 512);
  ASSERT_EQ(s.cols, 26);
  for (float v : s.values) EXPECT_EQ(v, static_cast<float>(std::log(1e-10)));
  EXPECT_THROW(stft_descriptors(std::vector<float>(8000, 0.0f)), Error);
}

TEST(StftTest, MatchesNaiveDft) {
  std::vector<float> x = Tone(440.0);
  for (size_t i = 0; i < x.size(); ++i) x[i] += 0.3f * static_cast<float>(std::sin(0.37 * i * i / 16000.0));
  const Matrix s = stft_descriptors(x);
  for (int f : {0, 1, 100, 255, 510, 511}) {
    const auto ref = ReferenceFrame(x, f);
    for (int m = 0; m < 26; ++m) EXPECT_NEAR(s.at(f, m), ref[m], 1e-4 * std::max(1.0, std::abs(ref[m]))) << f << "," << m;
  }
}

TEST(StftTest, KilohertzToneLandsInItsBand) {
  const auto x = Tone(1000.0);
  const Matrix s = stft_descriptors(x);
  auto argmax = [&](int f) {
    int best = 0;
    for (int m = 1; m < 26; ++m)
      if (s.at(f, m) > s.at(f, best)) best = m;
    return best;
  };
  const int band = argmax(0);
  for (int f = 0; f < 512; ++f) ASSERT_EQ(argmax(f), band) << f;
  const auto edges = ReferenceMelEdges();
  EXPECT_LT(edges[band], 1000.0);
  EXPECT_GT(edges[band + 2], 1000.0);
  const auto ref = ReferenceFrame(x, 200);
  int ref_band = 0;
  for (int m = 1; m < 26; ++m)
    if (ref[m] > ref[ref_band]) ref_band = m;
  EXPECT_EQ(band, ref_band);
}

TEST(StftTest, EnergyScalesWithFrameCoverage) {
  auto total = [](const Matrix& s) {
    double e = 0.0;
    for (float v : s.values) e += std::exp(double(v));
    return e;
  };
  const double full = total(stft_descriptors(Tone(700.0)));
  const double half = total(stft_descriptors(Tone(700.0, 8000)));
  EXPECT_NEAR(2.0 * half / full, 1.0, 0.05);
}

TEST(StftTest, LinearDescriptorsAreSupported) {
  const Matrix s = stft_descriptors(Tone(3000.0), Descriptor::kLinear26);
  EXPECT_EQ(s.rows, 512);
  int best = 0;
  for (int m = 1; m < 26; ++m)
    if (s.at(100, m) > s.at(100, best)) best = m;
  EXPECT_EQ(best, static_cast<int>(3000.0 / 8000.0 * 26));
  EXPECT_EQ(parse_descriptor("linear26"), Descriptor::kLinear26);
  EXPECT_THROW(parse_descriptor("mfcc"), Error);
}

TEST(ImageTest, AreaDownscalePreservesMean) {
  Raster r(320, 240);
  double sum = 0.0;
  for (size_t i = 0; i < r.pixels.size(); ++i) {
    r.pixels[i] = static_cast<float>((i * 7919) % 1000) / 1000.0f;
    sum += r.pixels[i];
  }
  const Matrix m = area_downscale(r, 4);
  ASSERT_EQ(m.rows, 60);
  ASSERT_EQ(m.cols, 80);
  double msum = 0.0;
  for (float v : m.values) msum += v;
  EXPECT_NEAR(msum / m.values.size(), sum / r.pixels.size(), 1e-6);
  EXPECT_THROW(area_downscale(r, 7), Error);
}

TEST(ImageTest, BilinearResizeOfConstantAndIdentity) {
  Matrix c(60, 60, 0.4f);
  for (float v : bilinear_resize(c, 120, 120).values) EXPECT_FLOAT_EQ(v, 0.4f);
  Matrix g(5, 4);
  for (size_t i = 0; i < g.values.size(); ++i) g.values[i] = float(i);
  EXPECT_EQ(bilinear_resize(g, 5, 4), g);
}

TEST(AverageTest, BodyMeanOfTwoFrames) {
  FrameSequence seq;
  seq.frames = {Raster(320, 240, 0.0f), Raster(320, 240, 1.0f)};
  const Matrix b = average_body(seq);
  ASSERT_EQ(b.rows, 60);
  ASSERT_EQ(b.cols, 80);
  for (float v : b.values) EXPECT_FLOAT_EQ(v, 0.5f);
  EXPECT_THROW(average_body(FrameSequence{}), Error);
}

TEST(AverageTest, StaticSceneEqualsFirstFrame) {
  const auto seq = render_frames(TrialSpec{});
  EXPECT_EQ(average_body(seq), area_downscale(seq.frames[0], 4));
  const auto faces = average_faces(seq);
  for (int i = 0; i < kAvatarCount; ++i) {
    const Rect& r = face_regions()[i];
    Matrix crop(r.h, r.w);
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x) crop.at(y, x) = seq.frames[0].at(r.x + x, r.y + y);
    EXPECT_EQ(faces[i], bilinear_resize(crop, 120, 120)) << i;
    EXPECT_EQ(faces[i].rows, 120);
  }
}

TEST(AverageTest, AnimatedMouthDiffersFromStaticOnes) {
  TrialSpec t;
  t.condition = Condition::kLips;
  t.audio_pos = AvatarIndex(1);
  t.lips_pos = AvatarIndex(1);
  const auto faces = average_faces(render_frames(t));
  auto mouth_mean = [](const Matrix& f) {
    double s = 0.0;
    for (int y = 75; y < 95; ++y)
      for (int x = 40; x < 80; ++x) s += f.at(y, x);
    return s;
  };
  EXPECT_GT(std::abs(mouth_mean(faces[1]) - mouth_mean(faces[0])), 0.0);
  EXPECT_EQ(faces[0], faces[2]);
  EXPECT_EQ(faces[0], faces[3]);
}

TEST(PreprocessTest, RightSourceIsLouderOnTheRight) {
  TrialSpec t;
  t.audio_pos = AvatarIndex(3);
  const ModelInput in = preprocess(render_bundle(t));
  in.validate();
  double left = 0.0, right = 0.0;
  for (size_t i = 0; i < in.spec_left.values.size(); ++i) {
    left += std::exp(double(in.spec_left.values[i]));
    right += std::exp(double(in.spec_right.values[i]));
  }
  EXPECT_GT(right, left);
  for (float v : in.body.values) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(preprocess(render_bundle(t)), in);
}

TEST(ModelInputTest, ContainerRoundTripAndCorruption) {
  TrialSpec t;
  t.condition = Condition::kArm;
  t.arm_pos = AvatarIndex(2);
  const ModelInput in = preprocess(render_bundle(t));
  const std::string bytes = encode_model_input(in);
  EXPECT_EQ(bytes.substr(0, 4), "XMI1");
  EXPECT_EQ(decode_model_input(bytes), in);

  auto expect_format = [](std::string_view b) {
    try {
      decode_model_input(b);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormat);
    }
  };
  expect_format(bytes.substr(0, bytes.size() - 3));
  std::string bad = bytes;
  bad[0] = 'Y';
  expect_format(bad);
  std::string wrong_dims = bytes;
  wrong_dims[12] = 3;  // rows of the first tensor
  expect_format(wrong_dims);
}

}  // namespace
}  // namespace xmodal
