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

#include "xmodal/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xmodal/error.hpp"
#include "xmodal/media_io.hpp"

namespace xmodal {

namespace {

constexpr double kPi = std::numbers::pi;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix linear_filterbank(int bands, int fft_size, int sample_rate) {
  const int bins = fft_size / 2 + 1;
  Matrix fb(bands, bins);
  const double nyquist = sample_rate / 2.0;
  for (int k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / fft_size;
    int b = static_cast<int>(f / nyquist * bands);
    b = std::min(b, bands - 1);
    fb.at(b, k) = 1.0f;
  }
  for (int m = 0; m < bands; ++m) {
    float sum = 0.0f;
    for (int k = 0; k < bins; ++k) sum += fb.at(m, k);
    if (sum > 0.0f)
      for (int k = 0; k < bins; ++k) fb.at(m, k) /= sum;
  }
  return fb;
}

struct DftTables {
  std::vector<double> cos_t;
  std::vector<double> sin_t;
  std::vector<double> window;
};

const DftTables& dft_tables() {
  static const DftTables t = [] {
    DftTables d;
    const int bins = kStftFftSize / 2 + 1;
    d.cos_t.resize(size_t(bins) * kStftWindow);
    d.sin_t.resize(size_t(bins) * kStftWindow);
    for (int k = 0; k < bins; ++k) {
      for (int n = 0; n < kStftWindow; ++n) {
        const double a = 2.0 * kPi * k * n / kStftFftSize;
        d.cos_t[size_t(k) * kStftWindow + n] = std::cos(a);
        d.sin_t[size_t(k) * kStftWindow + n] = std::sin(a);
      }
    }
    d.window.resize(kStftWindow);
    for (int n = 0; n < kStftWindow; ++n) {
      d.window[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / kStftWindow));
    }
    return d;
  }();
  return t;
}

}  // namespace

Descriptor parse_descriptor(std::string_view s) {
  if (s == "mel26") return Descriptor::kMel26;
  if (s == "linear26") return Descriptor::kLinear26;
  fail(ErrorCode::kInvalidArgument, "unknown descriptor set: " + std::string(s));
}

std::string_view to_string(Descriptor d) {
  return d == Descriptor::kMel26 ? "mel26" : "linear26";
}

void ModelInput::validate() const {
  auto check = [](const Matrix& m, int r, int c, const char* what) {
    require(m.rows == r && m.cols == c && m.values.size() == size_t(r) * c,
            std::string("model input tensor has wrong shape: ") + what,
            ErrorCode::kShapeMismatch);
  };
  check(spec_left, kSpecFrames, kSpecBands, "spec_left");
  check(spec_right, kSpecFrames, kSpecBands, "spec_right");
  check(body, kBodyHeight, kBodyWidth, "body");
  for (const auto& f : faces) check(f, kFaceSize, kFaceSize, "face");
  for (const auto* m : {&spec_left, &spec_right}) {
    for (float v : m->values) require(std::isfinite(v), "spectrogram value is not finite");
  }
}

Matrix mel_filterbank(int bands, int fft_size, int sample_rate) {
  const int bins = fft_size / 2 + 1;
  Matrix fb(bands, bins);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(bands + 2);
  for (int i = 0; i < bands + 2; ++i) edges[i] = mel_to_hz(mel_hi * i / (bands + 1));
  for (int m = 0; m < bands; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    double sum = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb.at(m, k) = static_cast<float>(w);
      sum += w;
    }
    if (sum > 0.0)
      for (int k = 0; k < bins; ++k) fb.at(m, k) = static_cast<float>(fb.at(m, k) / sum);
  }
  return fb;
}

Matrix stft_descriptors(std::span<const float> channel, Descriptor d, int sample_rate) {
  require(channel.size() == static_cast<size_t>(sample_rate) && sample_rate == kDefaultSampleRate,
          "stft_descriptors expects 16000 samples at 16 kHz, got " +
              std::to_string(channel.size()));
  const DftTables& t = dft_tables();
  static const Matrix mel = mel_filterbank(kSpecBands, kStftFftSize, kDefaultSampleRate);
  static const Matrix lin = linear_filterbank(kSpecBands, kStftFftSize, kDefaultSampleRate);
  const Matrix& fb = d == Descriptor::kMel26 ? mel : lin;

  const int bins = kStftFftSize / 2 + 1;
  const long len = static_cast<long>(channel.size());
  const double floor_log = std::log(static_cast<double>(kLogFloorEnergy));
  Matrix out(kSpecFrames, kSpecBands);
  std::vector<double> frame(kStftWindow);
  std::vector<double> power(bins);
  for (int f = 0; f < kSpecFrames; ++f) {
    const long start = static_cast<long>(f) * kStftHop;
    for (int n = 0; n < kStftWindow; ++n) {
      long idx = start + n;
      if (idx >= len) idx = 2 * (len - 1) - idx;  // reflect the tail
      frame[n] = channel[std::clamp(idx, 0L, len - 1)] * t.window[n];
    }
    for (int k = 0; k < bins; ++k) {
      const double* c = &t.cos_t[size_t(k) * kStftWindow];
      const double* s = &t.sin_t[size_t(k) * kStftWindow];
      double re = 0.0, im = 0.0;
      for (int n = 0; n < kStftWindow; ++n) {
        re += frame[n] * c[n];
        im -= frame[n] * s[n];
      }
      power[k] = re * re + im * im;
    }
    for (int m = 0; m < kSpecBands; ++m) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k) e += fb.at(m, k) * power[k];
      out.at(f, m) = static_cast<float>(e > kLogFloorEnergy ? std::log(e) : floor_log);
    }
  }
  return out;
}

Matrix area_downscale(const Raster& r, int factor) {
  require(factor > 0 && r.width % factor == 0 && r.height % factor == 0,
          "raster size is not a multiple of the downscale factor");
  Matrix out(r.height / factor, r.width / factor);
  const double norm = 1.0 / (factor * factor);
  for (int y = 0; y < out.rows; ++y) {
    for (int x = 0; x < out.cols; ++x) {
      double s = 0.0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) s += r.at(x * factor + dx, y * factor + dy);
      out.at(y, x) = static_cast<float>(s * norm);
    }
  }
  return out;
}

Matrix bilinear_resize(const Matrix& m, int rows, int cols) {
  Matrix out(rows, cols);
  const double sy = static_cast<double>(m.rows) / rows;
  const double sx = static_cast<double>(m.cols) / cols;
  for (int y = 0; y < rows; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, m.rows - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, m.rows - 1);
    const double wy = fy - y0;
    for (int x = 0; x < cols; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, m.cols - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, m.cols - 1);
      const double wx = fx - x0;
      const double top = m.at(y0, x0) * (1.0 - wx) + m.at(y0, x1) * wx;
      const double bot = m.at(y1, x0) * (1.0 - wx) + m.at(y1, x1) * wx;
      out.at(y, x) = static_cast<float>(top * (1.0 - wy) + bot * wy);
    }
  }
  return out;
}

namespace {

Raster temporal_mean(const FrameSequence& seq) {
  require(!seq.frames.empty(), "cannot average an empty frame sequence");
  const Raster& first = seq.frames.front();
  std::vector<double> acc(first.pixels.size(), 0.0);
  for (const auto& f : seq.frames) {
    require(f.width == first.width && f.height == first.height, "frames differ in size");
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += f.pixels[i];
  }
  Raster mean(first.width, first.height);
  const double inv = 1.0 / static_cast<double>(seq.frames.size());
  for (size_t i = 0; i < acc.size(); ++i) mean.pixels[i] = static_cast<float>(acc[i] * inv);
  return mean;
}

}  // namespace

Matrix average_body(const FrameSequence& seq) {
  const Raster mean = temporal_mean(seq);
  require(mean.width * kBodyHeight == mean.height * kBodyWidth,
          "scene aspect ratio does not match the 80x60 body image");
  return area_downscale(mean, mean.width / kBodyWidth);
}

std::array<Matrix, kAvatarCount> average_faces(const FrameSequence& seq) {
  const Raster mean = temporal_mean(seq);
  std::array<Matrix, kAvatarCount> out;
  for (int i = 0; i < kAvatarCount; ++i) {
    const Rect& r = seq.face_regions[i];
    require(r.w > 0 && r.h > 0 && r.x >= 0 && r.y >= 0 && r.x + r.w <= mean.width &&
                r.y + r.h <= mean.height,
            "face region out of bounds", ErrorCode::kInvalidArgument);
    Matrix crop(r.h, r.w);
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x) crop.at(y, x) = mean.at(r.x + x, r.y + y);
    out[i] = bilinear_resize(crop, kFaceSize, kFaceSize);
  }
  return out;
}

ModelInput preprocess(const StimulusBundle& bundle, Descriptor d) {
  bundle.validate();
  ModelInput in;
  in.spec_left = stft_descriptors(bundle.audio.left, d, bundle.audio.sample_rate);
  in.spec_right = stft_descriptors(bundle.audio.right, d, bundle.audio.sample_rate);
  in.body = average_body(bundle.video);
  in.faces = average_faces(bundle.video);
  in.validate();
  return in;
}

std::string encode_model_input(const ModelInput& in) {
  in.validate();
  std::string out = "XMI1";
  std::vector<const Matrix*> tensors = {&in.spec_left, &in.spec_right, &in.body};
  for (const auto& f : in.faces) tensors.push_back(&f);
  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const Matrix* m : tensors) {
    put_u32(out, 2);
    put_u32(out, static_cast<uint32_t>(m->rows));
    put_u32(out, static_cast<uint32_t>(m->cols));
    for (float v : m->values) put_f32(out, v);
  }
  return out;
}

ModelInput decode_model_input(std::string_view bytes) {
  require(bytes.size() >= 8 && bytes.substr(0, 4) == "XMI1", "not an XMI1 container",
          ErrorCode::kFormat);
  size_t pos = 4;
  const uint32_t count = get_u32(bytes, pos);
  require(count == 3 + kAvatarCount, "XMI1 container has wrong tensor count", ErrorCode::kFormat);
  std::vector<Matrix> tensors;
  for (uint32_t t = 0; t < count; ++t) {
    require(get_u32(bytes, pos) == 2, "XMI1 tensors must be rank 2", ErrorCode::kFormat);
    const int rows = static_cast<int>(get_u32(bytes, pos));
    const int cols = static_cast<int>(get_u32(bytes, pos));
    require(rows > 0 && cols > 0 && rows <= 4096 && cols <= 4096, "bad XMI1 dims",
            ErrorCode::kFormat);
    Matrix m(rows, cols);
    for (auto& v : m.values) v = get_f32(bytes, pos);
    tensors.push_back(std::move(m));
  }
  ModelInput in;
  in.spec_left = std::move(tensors[0]);
  in.spec_right = std::move(tensors[1]);
  in.body = std::move(tensors[2]);
  for (int i = 0; i < kAvatarCount; ++i) in.faces[i] = std::move(tensors[3 + i]);
  try {
    in.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, e.what());
  }
  return in;
}

}  // namespace xmodal
