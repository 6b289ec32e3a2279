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
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "xmodal/error.hpp"
#include "xmodal/oracle.hpp"

namespace xmodal {
namespace {

TrialSpec Lips(int audio, int lips) {
  TrialSpec t;
  t.condition = Condition::kLips;
  t.audio_pos = AvatarIndex(audio);
  t.lips_pos = AvatarIndex(lips);
  return t;
}

OracleParams Uniform(double capture, double error) {
  OracleParams p;
  for (auto& s : p.capture)
    for (auto& c : s) c.fill(capture);
  p.confusion.fill(error);
  p.baseline_error = error;
  return p;
}

// Calibration is deterministic, so one fit serves the whole suite.
const CalibrationResult& Calibrated() {
  static const CalibrationResult r = calibrate(OracleTargets{}, enumerate_trials(1), 7);
  return r;
}

const BehavioralDataset& Generated() {
  static const BehavioralDataset d =
      generate_dataset(Calibrated().params, OracleTargets{}, enumerate_trials(1), 11);
  return d;
}

TEST(RespondTest, ForcedCaptureAndNoiselessListener) {
  const SubjectProfile who{"S01", Strategy::kMixed, 5};
  const auto trials = enumerate_trials(2);
  const OracleParams forced = Uniform(1.0, 0.0);
  const OracleParams quiet = Uniform(0.0, 0.0);
  for (const auto& t : trials) {
    EXPECT_EQ(respond(who, quiet, t).response, t.audio_pos.value());
    if (t.condition == Condition::kLips || t.condition == Condition::kLipsVsArm) {
      EXPECT_EQ(respond(who, forced, t).response, t.lips_pos->value());
    }
    if (t.condition == Condition::kArm) EXPECT_EQ(respond(who, forced, t).response, t.arm_pos->value());
  }
}

TEST(RespondTest, PureFunctionOfProfileTrialAndParams) {
  const SubjectProfile who{"S02", Strategy::kVisual, 99};
  const OracleParams p = Uniform(0.4, 0.2);
  for (const auto& t : enumerate_trials(3)) {
    const auto a = respond(who, p, t), b = respond(who, p, t);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.source, Source::kOracle);
    EXPECT_EQ(a.strategy, Strategy::kVisual);
    EXPECT_GE(a.reaction_ms, 0);
    EXPECT_LE(a.reaction_ms, kResponseWindowMs);
  }
}

TEST(DistributionTest, SumsToOneAndMatchesSampling) {
  const OracleParams p = make_params({0.3, 0.8, 0.5}, {0.0, 0.9, 0.7, 0.6, 0.5}, 0.1);
  const auto trials = enumerate_trials(4);
  for (int idx : {0, 10, 30, 75, 120, 150, 199}) {
    const TrialSpec& t = trials[idx];
    const auto dist = response_distribution(p, Strategy::kMixed, t);
    EXPECT_NEAR(std::accumulate(dist.begin(), dist.end(), 0.0), 1.0, 1e-12);
    std::array<int, 4> hits{};
    Rng rng(idx);
    const int n = 200000;
    for (int i = 0; i < n; ++i) ++hits[sample_response(p, Strategy::kMixed, t, rng)];
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(hits[k] / double(n), dist[k], 0.005) << idx << " " << k;
  }
}

TEST(DistributionTest, CueWeightOrdering) {
  const OracleParams& p = Calibrated().params;
  for (int s = 0; s < kStrategyCount; ++s) {
    for (int c = 0; c < kCategoryCount; ++c) {
      const auto st = static_cast<Strategy>(s);
      const auto cat = static_cast<DistanceCategory>(c);
      EXPECT_GE(p.capture_for(st, CueType::kLips, cat), p.capture_for(st, CueType::kArm, cat));
    }
  }
  // An arm elsewhere lowers the pull of the lips, which stays positive.
  TrialSpec vs = Lips(1, 2);
  vs.condition = Condition::kLipsVsArm;
  vs.arm_pos = AvatarIndex(3);
  for (Strategy s : {Strategy::kAuditory, Strategy::kVisual, Strategy::kMixed}) {
    const double alone = response_distribution(p, s, Lips(1, 2))[2];
    const double contested = response_distribution(p, s, vs)[2];
    EXPECT_LT(contested, alone);
    EXPECT_GT(contested, 0.0);
  }
}

TEST(CalibrateTest, ResidualsWithinTolerance) {
  const auto& r = Calibrated();
  for (double x : r.analytic_residuals) EXPECT_LE(std::abs(x), kCalibrationTolerance);
  for (double x : r.simulated_residuals) EXPECT_LE(std::abs(x), kCalibrationTolerance);
  r.params.validate();
  EXPECT_LE(r.iterations, 1000);
}

TEST(CalibrateTest, CongruentTargetOverSimulatedCongruentTrials) {
  const auto& p = Calibrated().params;
  std::vector<TrialSpec> congruent;
  for (const auto& t : enumerate_trials(1))
    if (trial_category(t) == DistanceCategory::kCongruent) congruent.push_back(t);
  const OracleTargets targets;
  Rng rng(3);
  int wrong = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int s = static_cast<int>(rng.below(33));
    const Strategy st = s < 14 ? Strategy::kAuditory : s < 23 ? Strategy::kVisual : Strategy::kMixed;
    const TrialSpec& t = congruent[rng.below(congruent.size())];
    wrong += sample_response(p, st, t, rng) != t.audio_pos.value();
  }
  EXPECT_NEAR(wrong / double(n), 0.07, 0.02);
}

TEST(CalibrateTest, ZeroTargetsGiveZeroProbabilities) {
  OracleTargets zero;
  zero.category.fill(0.0);
  zero.strategy.fill(0.0);
  const auto r = calibrate(zero, enumerate_trials(1), 1);
  for (const auto& s : r.params.capture)
    for (const auto& c : s)
      for (double v : c) EXPECT_EQ(v, 0.0);
  for (double v : r.params.confusion) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.params.baseline_error, 0.0);
}

TEST(CalibrateTest, InfeasibleTargetsAreReported) {
  OracleTargets t;
  t.category = {0.9, 0.05, 0.05, 0.05, 0.05};
  try {
    calibrate(t, enumerate_trials(1), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(CalibrateTest, StrategyTargetsPoolToCohortMean) {
  const OracleTargets t;
  double pooled = 0.0;
  for (int s = 0; s < 3; ++s) pooled += t.strategy_counts[s] * t.strategy[s];
  pooled /= t.subjects();
  EXPECT_NEAR(pooled, 1.0 - 0.64, 0.02);
}

TEST(DatasetTest, SizesStrategySplitAndTargets) {
  const auto& d = Generated();
  ASSERT_EQ(d.records.size(), 33u * 600u);
  const auto subjects = d.subjects();
  ASSERT_EQ(subjects.size(), 33u);
  std::map<std::string, Strategy> strategy;
  std::map<std::string, int> per_subject;
  for (const auto& r : d.records) {
    strategy[r.subject_id] = *r.strategy;
    ++per_subject[r.subject_id];
  }
  std::array<int, 3> split{};
  for (const auto& [id, s] : strategy) ++split[static_cast<int>(s)];
  EXPECT_EQ(split, (std::array<int, 3>{14, 9, 10}));
  for (const auto& [id, n] : per_subject) EXPECT_EQ(n, 600);

  // Error rates counted directly from the records.
  std::array<double, 5> cat_err{}, cat_n{};
  std::array<double, 3> st_err{}, st_n{};
  for (const auto& r : d.records) {
    const bool wrong = r.response != r.trial.audio_pos.value();
    const int c = static_cast<int>(trial_category(r.trial));
    cat_err[c] += wrong;
    ++cat_n[c];
    st_err[static_cast<int>(*r.strategy)] += wrong;
    ++st_n[static_cast<int>(*r.strategy)];
  }
  const double cat_target[] = {0.07, 0.64, 0.59, 0.59, 0.56};
  const double st_target[] = {0.20, 0.54, 0.43};
  for (int c = 0; c < 5; ++c) EXPECT_NEAR(cat_err[c] / cat_n[c], cat_target[c], 0.03) << c;
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(st_err[s] / st_n[s], st_target[s], 0.03) << s;
  const double central = cat_err[1] / cat_n[1];
  EXPECT_GE(central, 0.59);
  EXPECT_LE(central, 0.69);
}

TEST(DatasetTest, ErrorsLandOnTheVisualCue) {
  int toward_cue = 0, elsewhere = 0;
  for (const auto& r : Generated().records) {
    const auto& t = r.trial;
    if (t.condition == Condition::kBaseline || t.condition == Condition::kLipsVsArm) continue;
    const int cue = t.lips_pos ? t.lips_pos->value() : t.arm_pos->value();
    if (cue == t.audio_pos.value() || r.response == t.audio_pos.value()) continue;
    (r.response == cue ? toward_cue : elsewhere) += 1;
  }
  EXPECT_GT(toward_cue, elsewhere);
}

TEST(DatasetTest, SameSeedSameBytes) {
  const auto trials = enumerate_trials(1);
  const auto& p = Calibrated().params;
  const std::string a = encode_dataset(generate_dataset(p, OracleTargets{}, trials, 11));
  EXPECT_EQ(a, encode_dataset(Generated()));
  EXPECT_NE(a, encode_dataset(generate_dataset(p, OracleTargets{}, trials, 12)));
  const auto back = decode_dataset(a);
  EXPECT_EQ(back.records, Generated().records);
  EXPECT_EQ(back.header.at("params_hash"), params_hash(p));
  EXPECT_EQ(encode_dataset(back), a);
}

TEST(ParamsTest, JsonRoundTripAndHash) {
  const auto& p = Calibrated().params;
  const OracleParams q = params_from_json(params_to_json(p));
  EXPECT_EQ(params_hash(q), params_hash(p));
  EXPECT_EQ(q.capture, p.capture);
  OracleParams r = p;
  r.baseline_error += 0.01;
  EXPECT_NE(params_hash(r), params_hash(p));
  auto j = params_to_json(p);
  j.erase("confusion");
  try {
    params_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
  OracleParams bad = p;
  bad.confusion[0] = 1.5;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(SubjectsTest, SplitAndLabels) {
  const auto subjects = make_subjects(OracleTargets{}, 3);
  ASSERT_EQ(subjects.size(), 33u);
  EXPECT_EQ(subjects.front().subject_id, "S01");
  EXPECT_EQ(subjects.back().subject_id, "S33");
  std::array<int, 3> split{};
  for (const auto& s : subjects) ++split[static_cast<int>(s.strategy)];
  EXPECT_EQ(split, (std::array<int, 3>{14, 9, 10}));
}

}  // namespace
}  // namespace xmodal
