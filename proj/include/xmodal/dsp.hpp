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

#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmodal/render.hpp"

namespace xmodal {

inline constexpr int kSpecFrames = 512;
inline constexpr int kSpecBands = 26;
inline constexpr int kStftWindow = 62;
inline constexpr int kStftHop = 31;
inline constexpr int kStftFftSize = 512;
inline constexpr int kBodyWidth = 80;
inline constexpr int kBodyHeight = 60;
inline constexpr int kFaceSize = 120;
inline constexpr float kLogFloorEnergy = 1e-10f;

// Row-major real matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(int r, int c, float fill = 0.0f) : rows(r), cols(c), values(size_t(r) * c, fill) {}
  float& at(int r, int c) { return values[size_t(r) * cols + c]; }
  float at(int r, int c) const { return values[size_t(r) * cols + c]; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class Descriptor { kMel26, kLinear26 };
Descriptor parse_descriptor(std::string_view s);
std::string_view to_string(Descriptor d);

struct ModelInput {
  Matrix spec_left;   // 512 time bins x 26 descriptors, log energy
  Matrix spec_right;
  Matrix body;        // 60 rows x 80 columns
  std::array<Matrix, kAvatarCount> faces;  // 120 x 120 each, avatar order

  void validate() const;
  friend bool operator==(const ModelInput&, const ModelInput&) = default;
};

// Triangular mel filters (HTK mel scale, 0 Hz to Nyquist), each normalized to
// unit weight sum, sampled on the FFT bins. Row m holds filter m.
Matrix mel_filterbank(int bands, int fft_size, int sample_rate);

// 512 frames of a 62-sample Hann window (hop 31, 512-point zero-padded DFT),
// each reduced to 26 log filterbank energies floored at log(1e-10).
Matrix stft_descriptors(std::span<const float> channel, Descriptor d = Descriptor::kMel26,
                        int sample_rate = kDefaultSampleRate);

// Temporal mean of the scene, area-averaged down to 80 x 60.
Matrix average_body(const FrameSequence& frames);

// Temporal mean of each face region, bilinearly resized to 120 x 120.
std::array<Matrix, kAvatarCount> average_faces(const FrameSequence& frames);

Matrix area_downscale(const Raster& r, int factor);
Matrix bilinear_resize(const Matrix& m, int rows, int cols);

ModelInput preprocess(const StimulusBundle& bundle, Descriptor d = Descriptor::kMel26);

// "XMI1" container: magic, tensor count, then per tensor rank, dims and
// little-endian float32 data.
std::string encode_model_input(const ModelInput& in);
ModelInput decode_model_input(std::string_view bytes);

}  // namespace xmodal
