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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace xmodal {

inline constexpr int kAvatarCount = 4;
inline constexpr int kTrialsPerSession = 200;
inline constexpr int kSessionCount = 3;
inline constexpr int kPracticeTrials = 12;

// One of the four avatars, numbered left to right.
class AvatarIndex {
 public:
  constexpr AvatarIndex() = default;
  explicit AvatarIndex(int index);

  constexpr int value() const { return index_; }
  // Horizontal angle from the fixation point; positive is to the right.
  double azimuth_deg() const;

  friend constexpr bool operator==(AvatarIndex, AvatarIndex) = default;

 private:
  int index_ = 0;
};

inline constexpr std::array<double, kAvatarCount> kAvatarAzimuthDeg = {-33.0, -11.0, 11.0, 33.0};

enum class Condition { kBaseline, kLips, kArm, kLipsArm, kLipsVsArm };
inline constexpr int kConditionCount = 5;

enum class DistanceCategory { kCongruent, kCentral, kLateral, kOneGap, kTwoGap };
inline constexpr int kCategoryCount = 5;

enum class Syllable { kHa, kWa, kBa };
using SyllableTriple = std::array<Syllable, 3>;

std::string_view to_string(Condition c);
std::string_view to_string(DistanceCategory c);
std::string_view to_string(Syllable s);
Condition parse_condition(std::string_view s);
Syllable parse_syllable(std::string_view s);

// The six orderings of {ha, wa, ba}, in lexicographic index order.
const std::array<SyllableTriple, 6>& syllable_permutations();

struct TrialSpec {
  Condition condition = Condition::kBaseline;
  AvatarIndex audio_pos;
  std::optional<AvatarIndex> lips_pos;
  std::optional<AvatarIndex> arm_pos;
  SyllableTriple syllables = {Syllable::kHa, Syllable::kWa, Syllable::kBa};
  int trial_id = 0;
  // 1..3 for main trials, 0 for the practice block.
  int session = 1;

  // Throws Error(kInvalidArgument) when the condition/cue invariants fail.
  void validate() const;
  bool practice() const { return session == 0; }
  // Spatial signature (condition + positions), ignoring syllables and ids.
  std::string spatial_key() const;

  friend bool operator==(const TrialSpec&, const TrialSpec&) = default;
};

// Distance category of an (audio, visual) pair; mirrored so the relation
// is symmetric.
DistanceCategory categorize(AvatarIndex audio, AvatarIndex visual);

// Category of a whole trial. Baseline counts as congruent. Single-cue
// conditions use their cue. LipsVsArm is congruent when either cue sits on
// the audio avatar, otherwise it is categorized by the lips position.
DistanceCategory trial_category(const TrialSpec& trial);

// Angular separation between adjacent avatars is 22 degrees.
double separation_deg(AvatarIndex a, AvatarIndex b);

// All spatial combinations of the five conditions (100 in total), each paired
// with `replication` distinct syllable orderings (round robin over a seeded
// permutation). replication is 1 or 2.
std::vector<TrialSpec> enumerate_trials(uint64_t seed, int replication = 2);

// Three independent seeded permutations of the trial set, one per session.
std::vector<TrialSpec> session_schedule(std::span<const TrialSpec> trials, uint64_t seed);

// Twelve congruent trials from the animated conditions.
std::vector<TrialSpec> practice_block(uint64_t seed);

nlohmann::json trial_to_json(const TrialSpec& t);
TrialSpec trial_from_json(const nlohmann::json& j);

// Line-delimited JSON manifest: one TrialSpec object per line.
std::string trials_to_manifest(std::span<const TrialSpec> trials);
std::vector<TrialSpec> trials_from_manifest(std::string_view text);

}  // namespace xmodal
