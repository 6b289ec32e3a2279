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
#include <vector>

#include "xmodal/trials.hpp"

namespace xmodal {

inline constexpr int kDefaultSampleRate = 16000;
inline constexpr int kStimulusMs = 1000;
inline constexpr int kSceneWidth = 320;
inline constexpr int kSceneHeight = 240;
inline constexpr int kFrameRate = 25;
// Mouth and arm complete this many open/close cycles over the stimulus.
inline constexpr int kAnimationCycles = 3;

struct StereoWaveform {
  std::vector<float> left;
  std::vector<float> right;
  int sample_rate = kDefaultSampleRate;
  int duration_ms = kStimulusMs;

  size_t size() const { return left.size(); }
  void validate() const;
};

// Row-major grayscale image, values in [0, 1].
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Raster() = default;
  Raster(int w, int h, float fill = 0.0f) : width(w), height(h), pixels(size_t(w) * h, fill) {}
  float& at(int x, int y) { return pixels[size_t(y) * width + x]; }
  float at(int x, int y) const { return pixels[size_t(y) * width + x]; }
  friend bool operator==(const Raster&, const Raster&) = default;
};

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool overlaps(const Rect& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
};

struct FrameSequence {
  std::vector<Raster> frames;
  int frame_rate = kFrameRate;
  std::array<Rect, kAvatarCount> face_regions{};
  std::array<Rect, kAvatarCount> body_regions{};

  void validate() const;
};

struct StimulusBundle {
  TrialSpec trial;
  StereoWaveform audio;
  FrameSequence video;

  void validate() const;
};

struct BinauralParams {
  double head_radius_m = 0.0875;
  double speed_of_sound = 343.0;
  // Contralateral attenuation per 10 degrees of azimuth.
  double ild_db_per_10deg = 1.5;
};

// Fixed scene layout shared by the renderer and the face/body crops.
const std::array<Rect, kAvatarCount>& face_regions();
const std::array<Rect, kAvatarCount>& body_regions();

// Three consecutive syllable bursts, each a harmonic complex shaped by a
// formant band, with Hann onset/offset ramps. 1000 ms long, peak 0.9.
std::vector<float> synth_syllables(const SyllableTriple& syllables,
                                   int sample_rate = kDefaultSampleRate);

// Woodworth interaural time difference (seconds, signed; positive means the
// sound is to the right and the right ear leads).
double itd_seconds(double azimuth_deg, const BinauralParams& p = {});
int itd_samples(double azimuth_deg, int sample_rate, const BinauralParams& p = {});
double ild_gain(double azimuth_deg, const BinauralParams& p = {});

StereoWaveform binauralize(std::span<const float> mono, double azimuth_deg,
                           int sample_rate = kDefaultSampleRate, const BinauralParams& p = {});

FrameSequence render_frames(const TrialSpec& trial);

StimulusBundle render_bundle(const TrialSpec& trial, double jitter_ms = 0.0,
                             int sample_rate = kDefaultSampleRate);

}  // namespace xmodal
