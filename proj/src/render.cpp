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

#include "xmodal/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xmodal/error.hpp"

namespace xmodal {

namespace {

constexpr double kPi = std::numbers::pi;

struct SyllableVoice {
  double f0_hz;
  double formant_hz;
};

// Each syllable's formant sits on one of its own harmonics so the spectral
// peak of a segment identifies the syllable.
SyllableVoice voice_for(Syllable s) {
  switch (s) {
    case Syllable::kHa: return {140.0, 700.0};
    case Syllable::kWa: return {200.0, 400.0};
    case Syllable::kBa: return {220.0, 1100.0};
  }
  return {140.0, 700.0};
}

constexpr double kBurstSeconds = 0.300;
constexpr double kRampSeconds = 0.030;
constexpr double kFormantWidthHz = 150.0;
constexpr double kPeak = 0.9;

// Scene palette.
constexpr float kBackground = 0.15f;
constexpr float kTorso = 0.55f;
constexpr float kArm = 0.85f;
constexpr float kHead = 0.75f;
constexpr float kEye = 0.20f;
constexpr float kMouth = 0.05f;

constexpr int kHeadY = 46;
constexpr int kHeadRadius = 24;
constexpr int kMouthY = 60;
constexpr double kMouthHalfWidth = 9.0;
constexpr double kMouthClosed = 1.0;
constexpr double kMouthOpen = 6.0;
constexpr int kShoulderY = 92;
constexpr int kShoulderOffset = 18;
constexpr double kArmLength = 34.0;
constexpr double kArmRadius = 2.5;
constexpr double kArmSweepDeg = 30.0;

int avatar_center_x(int i) { return kSceneWidth / (2 * kAvatarCount) + i * kSceneWidth / kAvatarCount; }

void fill_rect(Raster& r, int x0, int y0, int x1, int y1, float v) {
  for (int y = std::max(0, y0); y < std::min(r.height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(r.width, x1); ++x) r.at(x, y) = v;
}

void fill_ellipse(Raster& r, double cx, double cy, double rx, double ry, float v) {
  const int x0 = static_cast<int>(std::floor(cx - rx));
  const int x1 = static_cast<int>(std::ceil(cx + rx));
  const int y0 = static_cast<int>(std::floor(cy - ry));
  const int y1 = static_cast<int>(std::ceil(cy + ry));
  for (int y = std::max(0, y0); y <= std::min(r.height - 1, y1); ++y) {
    for (int x = std::max(0, x0); x <= std::min(r.width - 1, x1); ++x) {
      const double dx = (x + 0.5 - cx) / rx;
      const double dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) r.at(x, y) = v;
    }
  }
}

void fill_segment(Raster& r, double ax, double ay, double bx, double by, double radius, float v) {
  const int x0 = static_cast<int>(std::floor(std::min(ax, bx) - radius));
  const int x1 = static_cast<int>(std::ceil(std::max(ax, bx) + radius));
  const int y0 = static_cast<int>(std::floor(std::min(ay, by) - radius));
  const int y1 = static_cast<int>(std::ceil(std::max(ay, by) + radius));
  const double vx = bx - ax;
  const double vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  for (int y = std::max(0, y0); y <= std::min(r.height - 1, y1); ++y) {
    for (int x = std::max(0, x0); x <= std::min(r.width - 1, x1); ++x) {
      const double px = x + 0.5 - ax;
      const double py = y + 0.5 - ay;
      const double t = std::clamp((px * vx + py * vy) / len2, 0.0, 1.0);
      const double dx = px - t * vx;
      const double dy = py - t * vy;
      if (dx * dx + dy * dy <= radius * radius) r.at(x, y) = v;
    }
  }
}

void draw_avatar(Raster& r, int i, double mouth_aperture, double arm_angle_deg) {
  const int cx = avatar_center_x(i);
  fill_rect(r, cx - 16, 84, cx + 16, 190, kTorso);
  fill_segment(r, cx - kShoulderOffset, kShoulderY, cx - kShoulderOffset,
               kShoulderY + kArmLength, kArmRadius, kArm);
  const double phi = arm_angle_deg * kPi / 180.0;
  const double sx = cx + kShoulderOffset;
  fill_segment(r, sx, kShoulderY, sx + kArmLength * std::sin(phi),
               kShoulderY + kArmLength * std::cos(phi), kArmRadius, kArm);
  fill_ellipse(r, cx, kHeadY, kHeadRadius, kHeadRadius, kHead);
  fill_ellipse(r, cx - 8, 40, 3, 3, kEye);
  fill_ellipse(r, cx + 8, 40, 3, 3, kEye);
  fill_ellipse(r, cx, kMouthY, kMouthHalfWidth, mouth_aperture, kMouth);
}

}  // namespace

void StereoWaveform::validate() const {
  require(left.size() == right.size(), "stereo channels differ in length");
  require(static_cast<long>(left.size()) == static_cast<long>(sample_rate) * duration_ms / 1000,
          "waveform length does not match sample rate and duration");
}

void FrameSequence::validate() const {
  require(!frames.empty(), "frame sequence is empty");
  require(static_cast<int>(frames.size()) == frame_rate * kStimulusMs / 1000,
          "frame count does not cover the stimulus");
  const Rect scene{0, 0, frames.front().width, frames.front().height};
  std::vector<Rect> all(face_regions.begin(), face_regions.end());
  all.insert(all.end(), body_regions.begin(), body_regions.end());
  for (size_t i = 0; i < all.size(); ++i) {
    const Rect& a = all[i];
    require(a.x >= 0 && a.y >= 0 && a.x + a.w <= scene.w && a.y + a.h <= scene.h,
            "avatar region outside the raster");
    for (size_t j = i + 1; j < all.size(); ++j)
      require(!a.overlaps(all[j]), "avatar regions overlap");
  }
}

void StimulusBundle::validate() const {
  trial.validate();
  audio.validate();
  video.validate();
  require(audio.duration_ms * video.frame_rate == static_cast<int>(video.frames.size()) * 1000,
          "audio and video spans differ");
}

const std::array<Rect, kAvatarCount>& face_regions() {
  static const auto regions = [] {
    std::array<Rect, kAvatarCount> r{};
    for (int i = 0; i < kAvatarCount; ++i) r[i] = {avatar_center_x(i) - 30, 18, 60, 60};
    return r;
  }();
  return regions;
}

const std::array<Rect, kAvatarCount>& body_regions() {
  static const auto regions = [] {
    std::array<Rect, kAvatarCount> r{};
    for (int i = 0; i < kAvatarCount; ++i) r[i] = {avatar_center_x(i) - 38, 80, 76, 150};
    return r;
  }();
  return regions;
}

std::vector<float> synth_syllables(const SyllableTriple& syllables, int sample_rate) {
  require(sample_rate >= 8000, "sample rate below 8 kHz is not supported");
  const int n = sample_rate * kStimulusMs / 1000;
  std::vector<double> acc(n, 0.0);
  const int burst = static_cast<int>(std::lround(kBurstSeconds * sample_rate));
  const int ramp = static_cast<int>(std::lround(kRampSeconds * sample_rate));
  const double nyquist_guard = std::min(4000.0, 0.45 * sample_rate);

  for (int k = 0; k < 3; ++k) {
    const int start = static_cast<int>(static_cast<long>(k) * n / 3);
    const int end = static_cast<int>(static_cast<long>(k + 1) * n / 3);
    const int len = std::min(burst, end - start);
    const SyllableVoice v = voice_for(syllables[k]);
    std::vector<std::pair<double, double>> partials;
    for (int h = 1; h * v.f0_hz < nyquist_guard; ++h) {
      const double f = h * v.f0_hz;
      const double d = (f - v.formant_hz) / kFormantWidthHz;
      partials.emplace_back(f, std::exp(-0.5 * d * d) + 0.1 / h);
    }
    for (int i = 0; i < len; ++i) {
      double env = 1.0;
      if (i < ramp) {
        env = 0.5 * (1.0 - std::cos(kPi * i / ramp));
      } else if (i >= len - ramp) {
        env = 0.5 * (1.0 - std::cos(kPi * (len - 1 - i) / ramp));
      }
      const double t = static_cast<double>(i) / sample_rate;
      double s = 0.0;
      for (const auto& [f, a] : partials) s += a * std::sin(2.0 * kPi * f * t);
      acc[start + i] = env * s;
    }
  }

  double peak = 0.0;
  for (double x : acc) peak = std::max(peak, std::abs(x));
  std::vector<float> out(n);
  const double scale = peak > 0.0 ? kPeak / peak : 0.0;
  for (int i = 0; i < n; ++i) out[i] = static_cast<float>(acc[i] * scale);
  return out;
}

double itd_seconds(double azimuth_deg, const BinauralParams& p) {
  const double theta = azimuth_deg * kPi / 180.0;
  return (p.head_radius_m / p.speed_of_sound) * (theta + std::sin(theta));
}

int itd_samples(double azimuth_deg, int sample_rate, const BinauralParams& p) {
  const double s = itd_seconds(azimuth_deg, p) * sample_rate;
  const long mag = std::lround(std::abs(s));
  return static_cast<int>(s < 0 ? -mag : mag);
}

double ild_gain(double azimuth_deg, const BinauralParams& p) {
  const double db = p.ild_db_per_10deg * std::abs(azimuth_deg) / 10.0;
  return std::pow(10.0, -db / 20.0);
}

StereoWaveform binauralize(std::span<const float> mono, double azimuth_deg, int sample_rate,
                           const BinauralParams& p) {
  require(std::abs(azimuth_deg) <= 90.0, "azimuth must lie within [-90, 90] degrees");
  require(sample_rate > 0, "sample rate must be positive");
  const int delay = std::abs(itd_samples(azimuth_deg, sample_rate, p));
  const float gain = static_cast<float>(ild_gain(azimuth_deg, p));

  std::vector<float> ipsi(mono.begin(), mono.end());
  std::vector<float> contra(mono.size(), 0.0f);
  for (size_t i = static_cast<size_t>(delay); i < mono.size(); ++i) {
    contra[i] = mono[i - delay] * gain;
  }

  StereoWaveform out;
  out.sample_rate = sample_rate;
  out.duration_ms = static_cast<int>(static_cast<long>(mono.size()) * 1000 / sample_rate);
  if (azimuth_deg >= 0.0) {
    out.right = std::move(ipsi);
    out.left = std::move(contra);
  } else {
    out.left = std::move(ipsi);
    out.right = std::move(contra);
  }
  return out;
}

FrameSequence render_frames(const TrialSpec& trial) {
  trial.validate();
  FrameSequence seq;
  seq.frame_rate = kFrameRate;
  seq.face_regions = face_regions();
  seq.body_regions = body_regions();
  const int count = kFrameRate * kStimulusMs / 1000;
  seq.frames.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / kFrameRate;
    const double phase = 2.0 * kPi * kAnimationCycles * t;
    Raster frame(kSceneWidth, kSceneHeight, kBackground);
    for (int i = 0; i < kAvatarCount; ++i) {
      const AvatarIndex who(i);
      double mouth = kMouthClosed;
      double arm = 0.0;
      if (trial.lips_pos && *trial.lips_pos == who) {
        mouth = kMouthClosed + (kMouthOpen - kMouthClosed) * 0.5 * (1.0 - std::cos(phase));
      }
      if (trial.arm_pos && *trial.arm_pos == who) arm = kArmSweepDeg * std::sin(phase);
      draw_avatar(frame, i, mouth, arm);
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

StimulusBundle render_bundle(const TrialSpec& trial, double jitter_ms, int sample_rate) {
  require(std::abs(jitter_ms) <= 100.0, "onset jitter must lie within +-100 ms");
  StimulusBundle b;
  b.trial = trial;
  const auto mono = synth_syllables(trial.syllables, sample_rate);
  b.audio = binauralize(mono, trial.audio_pos.azimuth_deg(), sample_rate);
  const long shift = std::lround(jitter_ms * sample_rate / 1000.0);
  if (shift != 0) {
    for (auto* ch : {&b.audio.left, &b.audio.right}) {
      std::vector<float> moved(ch->size(), 0.0f);
      const long n = static_cast<long>(ch->size());
      for (long i = 0; i < n; ++i) {
        const long src = i - shift;
        if (src >= 0 && src < n) moved[i] = (*ch)[src];
      }
      *ch = std::move(moved);
    }
  }
  b.video = render_frames(trial);
  b.validate();
  return b;
}

}  // namespace xmodal
