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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "xmodal/error.hpp"
#include "xmodal/trials.hpp"

namespace xmodal {
namespace {

// Category from the relation of two avatar indices, written out case by case.
DistanceCategory ExpectedCategory(int a, int v) {
  const int lo = std::min(a, v), hi = std::max(a, v);
  if (lo == hi) return DistanceCategory::kCongruent;
  if (lo == 1 && hi == 2) return DistanceCategory::kCentral;
  if ((lo == 0 && hi == 1) || (lo == 2 && hi == 3)) return DistanceCategory::kLateral;
  if (hi - lo == 2) return DistanceCategory::kOneGap;
  return DistanceCategory::kTwoGap;
}

TEST(AvatarIndexTest, AzimuthMap) {
  const double expected[] = {-33.0, -11.0, 11.0, 33.0};
  for (int i = 0; i < kAvatarCount; ++i) EXPECT_EQ(AvatarIndex(i).azimuth_deg(), expected[i]);
  EXPECT_THROW(AvatarIndex(4), Error);
  EXPECT_THROW(AvatarIndex(-1), Error);
}

TEST(CategorizeTest, NamedPairs) {
  EXPECT_EQ(categorize(AvatarIndex(0), AvatarIndex(0)), DistanceCategory::kCongruent);
  EXPECT_EQ(categorize(AvatarIndex(1), AvatarIndex(2)), DistanceCategory::kCentral);
  EXPECT_EQ(categorize(AvatarIndex(0), AvatarIndex(3)), DistanceCategory::kTwoGap);
  EXPECT_EQ(categorize(AvatarIndex(0), AvatarIndex(2)), DistanceCategory::kOneGap);
  EXPECT_EQ(categorize(AvatarIndex(2), AvatarIndex(3)), DistanceCategory::kLateral);
}

TEST(CategorizeTest, TotalSymmetricAndCounted) {
  std::map<DistanceCategory, int> unordered_pairs;
  for (int a = 0; a < kAvatarCount; ++a) {
    for (int v = 0; v < kAvatarCount; ++v) {
      const auto c = categorize(AvatarIndex(a), AvatarIndex(v));
      EXPECT_EQ(c, ExpectedCategory(a, v)) << a << "," << v;
      EXPECT_EQ(c, categorize(AvatarIndex(v), AvatarIndex(a)));
      if (a < v) ++unordered_pairs[c];
    }
  }
  EXPECT_EQ(unordered_pairs[DistanceCategory::kTwoGap], 1);
  EXPECT_EQ(unordered_pairs[DistanceCategory::kCentral], 1);
  EXPECT_EQ(unordered_pairs[DistanceCategory::kLateral], 2);
  EXPECT_EQ(unordered_pairs[DistanceCategory::kOneGap], 2);
}

TEST(CategorizeTest, AngularSeparations) {
  EXPECT_DOUBLE_EQ(separation_deg(AvatarIndex(0), AvatarIndex(1)), 22.0);
  EXPECT_DOUBLE_EQ(separation_deg(AvatarIndex(1), AvatarIndex(2)), 22.0);
  EXPECT_DOUBLE_EQ(separation_deg(AvatarIndex(0), AvatarIndex(2)), 44.0);
  EXPECT_DOUBLE_EQ(separation_deg(AvatarIndex(3), AvatarIndex(0)), 66.0);
}

TEST(TrialSpecTest, ValidateRejectsBrokenInvariants) {
  TrialSpec t;
  t.validate();
  t.lips_pos = AvatarIndex(1);
  EXPECT_THROW(t.validate(), Error);  // baseline with lips

  TrialSpec lips;
  lips.condition = Condition::kLips;
  EXPECT_THROW(lips.validate(), Error);  // missing lips position
  lips.lips_pos = AvatarIndex(2);
  lips.validate();
  lips.arm_pos = AvatarIndex(2);
  EXPECT_THROW(lips.validate(), Error);

  TrialSpec both;
  both.condition = Condition::kLipsArm;
  both.lips_pos = AvatarIndex(1);
  both.arm_pos = AvatarIndex(2);
  EXPECT_THROW(both.validate(), Error);

  TrialSpec versus;
  versus.condition = Condition::kLipsVsArm;
  versus.lips_pos = AvatarIndex(1);
  versus.arm_pos = AvatarIndex(1);
  EXPECT_THROW(versus.validate(), Error);

  TrialSpec repeated;
  repeated.syllables = {Syllable::kHa, Syllable::kHa, Syllable::kBa};
  EXPECT_THROW(repeated.validate(), Error);

  TrialSpec bad_session;
  bad_session.session = 4;
  EXPECT_THROW(bad_session.validate(), Error);
}

TEST(TrialCategoryTest, WholeTrialRule) {
  TrialSpec t;
  t.audio_pos = AvatarIndex(1);
  EXPECT_EQ(trial_category(t), DistanceCategory::kCongruent);

  t.condition = Condition::kArm;
  t.arm_pos = AvatarIndex(2);
  EXPECT_EQ(trial_category(t), DistanceCategory::kCentral);

  TrialSpec v;
  v.condition = Condition::kLipsVsArm;
  v.audio_pos = AvatarIndex(0);
  v.lips_pos = AvatarIndex(3);
  v.arm_pos = AvatarIndex(0);
  EXPECT_EQ(trial_category(v), DistanceCategory::kCongruent);
  v.arm_pos = AvatarIndex(1);
  EXPECT_EQ(trial_category(v), DistanceCategory::kTwoGap);
}

TEST(SyllableTest, SixDistinctPermutations) {
  const auto& perms = syllable_permutations();
  std::set<SyllableTriple> unique(perms.begin(), perms.end());
  EXPECT_EQ(unique.size(), 6u);
  for (const auto& p : perms) {
    std::set<Syllable> s(p.begin(), p.end());
    EXPECT_EQ(s.size(), 3u);
  }
  EXPECT_TRUE(std::is_sorted(perms.begin(), perms.end()));
}

TEST(EnumerateTrialsTest, CountsPerCondition) {
  const auto trials = enumerate_trials(7);
  ASSERT_EQ(trials.size(), 200u);
  std::map<Condition, int> counts;
  for (const auto& t : trials) {
    t.validate();
    ++counts[t.condition];
  }
  EXPECT_EQ(counts[Condition::kBaseline], 8);
  EXPECT_EQ(counts[Condition::kLips], 32);
  EXPECT_EQ(counts[Condition::kArm], 32);
  EXPECT_EQ(counts[Condition::kLipsArm], 32);
  EXPECT_EQ(counts[Condition::kLipsVsArm], 96);
}

TEST(EnumerateTrialsTest, EachSpatialCombinationTwiceWithDistinctSyllables) {
  const auto trials = enumerate_trials(3);
  std::map<std::string, std::vector<SyllableTriple>> by_key;
  std::set<int> ids;
  for (const auto& t : trials) {
    by_key[t.spatial_key()].push_back(t.syllables);
    ids.insert(t.trial_id);
  }
  EXPECT_EQ(ids.size(), 200u);
  EXPECT_EQ(by_key.size(), 100u);
  for (const auto& [key, syl] : by_key) {
    ASSERT_EQ(syl.size(), 2u) << key;
    EXPECT_NE(syl[0], syl[1]) << key;
  }
}

TEST(EnumerateTrialsTest, ReplicationOneAndDeterminism) {
  const auto single = enumerate_trials(5, 1);
  EXPECT_EQ(single.size(), 100u);
  std::set<std::string> keys;
  for (const auto& t : single) keys.insert(t.spatial_key());
  EXPECT_EQ(keys.size(), 100u);
  EXPECT_EQ(enumerate_trials(5), enumerate_trials(5));
  EXPECT_THROW(enumerate_trials(5, 3), Error);
}

TEST(SessionScheduleTest, ThreePermutations) {
  const auto trials = enumerate_trials(11);
  const auto schedule = session_schedule(trials, 99);
  ASSERT_EQ(schedule.size(), 600u);
  std::multiset<int> input_ids;
  for (const auto& t : trials) input_ids.insert(t.trial_id);
  for (int s = 0; s < 3; ++s) {
    std::multiset<int> ids;
    for (int i = 0; i < 200; ++i) {
      EXPECT_EQ(schedule[s * 200 + i].session, s + 1);
      ids.insert(schedule[s * 200 + i].trial_id);
    }
    EXPECT_EQ(ids, input_ids);
  }
  // Sessions are ordered differently from each other.
  EXPECT_FALSE(std::equal(schedule.begin(), schedule.begin() + 200, schedule.begin() + 200,
                          [](const TrialSpec& a, const TrialSpec& b) { return a.trial_id == b.trial_id; }));
  EXPECT_EQ(schedule, session_schedule(trials, 99));
  EXPECT_NE(schedule, session_schedule(trials, 100));
  EXPECT_THROW(session_schedule(std::span(trials).first(50), 1), Error);
}

TEST(PracticeBlockTest, TwelveCongruentAnimatedTrials) {
  const auto block = practice_block(4);
  ASSERT_EQ(block.size(), 12u);
  for (const auto& t : block) {
    EXPECT_TRUE(t.condition == Condition::kLips || t.condition == Condition::kArm ||
                t.condition == Condition::kLipsArm);
    if (t.lips_pos) EXPECT_EQ(categorize(t.audio_pos, *t.lips_pos), DistanceCategory::kCongruent);
    if (t.arm_pos) EXPECT_EQ(categorize(t.audio_pos, *t.arm_pos), DistanceCategory::kCongruent);
    EXPECT_TRUE(t.practice());
  }
  EXPECT_EQ(block, practice_block(4));
}

TEST(ManifestTest, RoundTrip) {
  auto trials = enumerate_trials(2);
  const auto practice = practice_block(2);
  trials.insert(trials.end(), practice.begin(), practice.end());
  const std::string text = trials_to_manifest(trials);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 212);
  EXPECT_EQ(trials_from_manifest(text), trials);
  EXPECT_EQ(trials_to_manifest(trials_from_manifest(text)), text);
}

TEST(ManifestTest, MalformedLinesAreFormatErrors) {
  try {
    trials_from_manifest("{\"trial_id\": 1}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
  try {
    trials_from_manifest("not json\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

}  // namespace
}  // namespace xmodal
