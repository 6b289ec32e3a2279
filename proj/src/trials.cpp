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

#include "xmodal/trials.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "xmodal/error.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

AvatarIndex::AvatarIndex(int index) : index_(index) {
  require(index >= 0 && index < kAvatarCount,
          "avatar index out of range: " + std::to_string(index));
}

double AvatarIndex::azimuth_deg() const { return kAvatarAzimuthDeg[index_]; }

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kBaseline: return "baseline";
    case Condition::kLips: return "lips";
    case Condition::kArm: return "arm";
    case Condition::kLipsArm: return "lips_arm";
    case Condition::kLipsVsArm: return "lips_vs_arm";
  }
  return "?";
}

std::string_view to_string(DistanceCategory c) {
  switch (c) {
    case DistanceCategory::kCongruent: return "congruent";
    case DistanceCategory::kCentral: return "central";
    case DistanceCategory::kLateral: return "lateral";
    case DistanceCategory::kOneGap: return "one_gap";
    case DistanceCategory::kTwoGap: return "two_gap";
  }
  return "?";
}

std::string_view to_string(Syllable s) {
  switch (s) {
    case Syllable::kHa: return "ha";
    case Syllable::kWa: return "wa";
    case Syllable::kBa: return "ba";
  }
  return "?";
}

Condition parse_condition(std::string_view s) {
  for (int i = 0; i < kConditionCount; ++i) {
    const auto c = static_cast<Condition>(i);
    if (to_string(c) == s) return c;
  }
  fail(ErrorCode::kFormat, "unknown condition: " + std::string(s));
}

Syllable parse_syllable(std::string_view s) {
  for (Syllable v : {Syllable::kHa, Syllable::kWa, Syllable::kBa}) {
    if (to_string(v) == s) return v;
  }
  fail(ErrorCode::kFormat, "unknown syllable: " + std::string(s));
}

const std::array<SyllableTriple, 6>& syllable_permutations() {
  static const std::array<SyllableTriple, 6> perms = [] {
    std::array<SyllableTriple, 6> out{};
    SyllableTriple t = {Syllable::kHa, Syllable::kWa, Syllable::kBa};
    int i = 0;
    do {
      out[i++] = t;
    } while (std::next_permutation(t.begin(), t.end()));
    return out;
  }();
  return perms;
}

void TrialSpec::validate() const {
  const bool lips = lips_pos.has_value();
  const bool arm = arm_pos.has_value();
  switch (condition) {
    case Condition::kBaseline:
      require(!lips && !arm, "baseline trial must not carry visual cues");
      break;
    case Condition::kLips:
      require(lips && !arm, "lips trial needs lips_pos only");
      break;
    case Condition::kArm:
      require(arm && !lips, "arm trial needs arm_pos only");
      break;
    case Condition::kLipsArm:
      require(lips && arm && *lips_pos == *arm_pos,
              "lips+arm trial needs one avatar for both cues");
      break;
    case Condition::kLipsVsArm:
      require(lips && arm && !(*lips_pos == *arm_pos),
              "lips-vs-arm trial needs two distinct cue avatars");
      break;
  }
  std::set<Syllable> distinct(syllables.begin(), syllables.end());
  require(distinct.size() == 3, "syllables must be a permutation of ha/wa/ba");
  require(session >= 0 && session <= kSessionCount, "session out of range");
}

std::string TrialSpec::spatial_key() const {
  std::ostringstream os;
  os << to_string(condition) << ':' << audio_pos.value() << ':'
     << (lips_pos ? lips_pos->value() : -1) << ':' << (arm_pos ? arm_pos->value() : -1);
  return os.str();
}

DistanceCategory categorize(AvatarIndex audio, AvatarIndex visual) {
  const int a = audio.value();
  const int v = visual.value();
  if (a == v) return DistanceCategory::kCongruent;
  const int lo = std::min(a, v);
  const int hi = std::max(a, v);
  switch (hi - lo) {
    case 1: return lo == 1 ? DistanceCategory::kCentral : DistanceCategory::kLateral;
    case 2: return DistanceCategory::kOneGap;
    default: return DistanceCategory::kTwoGap;
  }
}

DistanceCategory trial_category(const TrialSpec& t) {
  switch (t.condition) {
    case Condition::kBaseline:
      return DistanceCategory::kCongruent;
    case Condition::kLips:
    case Condition::kLipsArm:
      return categorize(t.audio_pos, *t.lips_pos);
    case Condition::kArm:
      return categorize(t.audio_pos, *t.arm_pos);
    case Condition::kLipsVsArm:
      if (*t.lips_pos == t.audio_pos || *t.arm_pos == t.audio_pos) {
        return DistanceCategory::kCongruent;
      }
      return categorize(t.audio_pos, *t.lips_pos);
  }
  return DistanceCategory::kCongruent;
}

double separation_deg(AvatarIndex a, AvatarIndex b) {
  return std::abs(a.azimuth_deg() - b.azimuth_deg());
}

namespace {

struct Spatial {
  Condition condition;
  int audio;
  int lips;
  int arm;
};

std::vector<Spatial> spatial_combinations() {
  std::vector<Spatial> out;
  for (int a = 0; a < kAvatarCount; ++a) out.push_back({Condition::kBaseline, a, -1, -1});
  for (int v = 0; v < kAvatarCount; ++v)
    for (int a = 0; a < kAvatarCount; ++a) out.push_back({Condition::kLips, a, v, -1});
  for (int v = 0; v < kAvatarCount; ++v)
    for (int a = 0; a < kAvatarCount; ++a) out.push_back({Condition::kArm, a, -1, v});
  for (int v = 0; v < kAvatarCount; ++v)
    for (int a = 0; a < kAvatarCount; ++a) out.push_back({Condition::kLipsArm, a, v, v});
  for (int l = 0; l < kAvatarCount; ++l)
    for (int m = 0; m < kAvatarCount; ++m) {
      if (m == l) continue;
      for (int a = 0; a < kAvatarCount; ++a) out.push_back({Condition::kLipsVsArm, a, l, m});
    }
  return out;
}

}  // namespace

std::vector<TrialSpec> enumerate_trials(uint64_t seed, int replication) {
  require(replication == 1 || replication == 2, "replication must be 1 or 2");
  std::array<int, 6> order = {0, 1, 2, 3, 4, 5};
  Rng rng(mix_seed(seed, 0x5eedf00dULL));
  rng.shuffle(order.begin(), order.end());

  const auto combos = spatial_combinations();
  std::vector<TrialSpec> trials;
  trials.reserve(combos.size() * replication);
  for (size_t i = 0; i < combos.size(); ++i) {
    const Spatial& s = combos[i];
    for (int r = 0; r < replication; ++r) {
      TrialSpec t;
      t.condition = s.condition;
      t.audio_pos = AvatarIndex(s.audio);
      if (s.lips >= 0) t.lips_pos = AvatarIndex(s.lips);
      if (s.arm >= 0) t.arm_pos = AvatarIndex(s.arm);
      t.syllables = syllable_permutations()[order[(replication * i + r) % 6]];
      t.trial_id = static_cast<int>(trials.size());
      t.session = 1;
      t.validate();
      trials.push_back(t);
    }
  }
  return trials;
}

std::vector<TrialSpec> session_schedule(std::span<const TrialSpec> trials, uint64_t seed) {
  require(trials.size() == 200 || trials.size() == 100,
          "session_schedule expects a full enumerated trial set (200, or 100 without "
          "replication), got " + std::to_string(trials.size()));
  std::vector<TrialSpec> out;
  out.reserve(trials.size() * kSessionCount);
  for (int s = 1; s <= kSessionCount; ++s) {
    std::vector<TrialSpec> block(trials.begin(), trials.end());
    Rng rng(mix_seed(seed, 0x5e551011ULL, static_cast<uint64_t>(s)));
    rng.shuffle(block.begin(), block.end());
    for (auto& t : block) {
      t.session = s;
      out.push_back(t);
    }
  }
  return out;
}

std::vector<TrialSpec> practice_block(uint64_t seed) {
  static constexpr Condition kAnimated[] = {Condition::kLips, Condition::kArm,
                                            Condition::kLipsArm};
  Rng rng(mix_seed(seed, 0x9ac71ceULL));
  std::vector<TrialSpec> out;
  for (int i = 0; i < kPracticeTrials; ++i) {
    TrialSpec t;
    t.condition = kAnimated[rng.below(3)];
    t.audio_pos = AvatarIndex(static_cast<int>(rng.below(kAvatarCount)));
    if (t.condition != Condition::kArm) t.lips_pos = t.audio_pos;
    if (t.condition != Condition::kLips) t.arm_pos = t.audio_pos;
    t.syllables = syllable_permutations()[rng.below(6)];
    t.trial_id = 10000 + i;
    t.session = 0;
    t.validate();
    out.push_back(t);
  }
  return out;
}

nlohmann::json trial_to_json(const TrialSpec& t) {
  nlohmann::json j;
  j["trial_id"] = t.trial_id;
  j["session"] = t.session;
  j["condition"] = std::string(to_string(t.condition));
  j["audio_pos"] = t.audio_pos.value();
  j["lips_pos"] = t.lips_pos ? nlohmann::json(t.lips_pos->value()) : nlohmann::json(nullptr);
  j["arm_pos"] = t.arm_pos ? nlohmann::json(t.arm_pos->value()) : nlohmann::json(nullptr);
  nlohmann::json syl = nlohmann::json::array();
  for (Syllable s : t.syllables) syl.push_back(std::string(to_string(s)));
  j["syllables"] = syl;
  return j;
}

TrialSpec trial_from_json(const nlohmann::json& j) {
  try {
    TrialSpec t;
    t.trial_id = j.at("trial_id").get<int>();
    t.session = j.at("session").get<int>();
    t.condition = parse_condition(j.at("condition").get<std::string>());
    t.audio_pos = AvatarIndex(j.at("audio_pos").get<int>());
    if (!j.at("lips_pos").is_null()) t.lips_pos = AvatarIndex(j.at("lips_pos").get<int>());
    if (!j.at("arm_pos").is_null()) t.arm_pos = AvatarIndex(j.at("arm_pos").get<int>());
    const auto& syl = j.at("syllables");
    require(syl.is_array() && syl.size() == 3, "syllables must have 3 entries",
            ErrorCode::kFormat);
    for (int i = 0; i < 3; ++i) t.syllables[i] = parse_syllable(syl[i].get<std::string>());
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed trial record: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("invalid trial record: ") + e.what());
  }
}

std::string trials_to_manifest(std::span<const TrialSpec> trials) {
  std::string out;
  for (const auto& t : trials) {
    out += trial_to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<TrialSpec> trials_from_manifest(std::string_view text) {
  std::vector<TrialSpec> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    if (!line.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::kFormat, std::string("bad manifest line: ") + e.what());
      }
      out.push_back(trial_from_json(j));
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace xmodal
