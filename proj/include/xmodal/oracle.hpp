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
#include <vector>

#include "json.hpp"
#include "xmodal/dataset.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

// Visual cue types as seen by the response model. kLipsVsArm is the lips
// cue while an arm moves elsewhere.
enum class CueType { kLips, kArm, kLipsArm, kLipsVsArm };
inline constexpr int kCueTypeCount = 4;
std::string_view to_string(CueType c);

// Aggregate error rates the oracle is fitted to.
struct OracleTargets {
  std::array<double, kCategoryCount> category = {0.07, 0.64, 0.59, 0.59, 0.56};
  std::array<double, kStrategyCount> strategy = {0.20, 0.54, 0.43};
  std::array<int, kStrategyCount> strategy_counts = {14, 9, 10};

  void validate() const;
  int subjects() const { return strategy_counts[0] + strategy_counts[1] + strategy_counts[2]; }
};

// Relative pull of each cue type; lips dominate a more salient arm.
inline constexpr std::array<double, kCueTypeCount> kCueWeights = {1.0, 0.4, 1.1, 0.55};
// Scale applied to arm capture when lips compete in the same trial.
inline constexpr double kArmCompetition = 0.5;
inline constexpr double kMaxCapture = 0.98;

// Capture + confusion response model. A trial is first captured by a visual
// cue with the capture probability of (strategy, cue, category); otherwise
// the response is the audio avatar, flipped to a random neighbour with the
// confusion probability (baseline error for static avatars).
struct OracleParams {
  std::array<std::array<std::array<double, kCategoryCount>, kCueTypeCount>, kStrategyCount> capture{};
  // Indexed by the avatar distance between audio and the visual cue (0..3).
  std::array<double, kAvatarCount> confusion{};
  double baseline_error = 0.0;
  double arm_competition = kArmCompetition;

  // Factors the capture table was built from (provenance only).
  std::array<double, kStrategyCount> strategy_gain{};
  std::array<double, kCategoryCount> category_gain{};

  void validate() const;
  double capture_for(Strategy s, CueType c, DistanceCategory d) const {
    return capture[static_cast<int>(s)][static_cast<int>(c)][static_cast<int>(d)];
  }
};

// capture = clamp(strategy_gain * cue_weight * category_gain, 0, kMaxCapture);
// every confusion entry and the baseline error equal `error`.
OracleParams make_params(const std::array<double, kStrategyCount>& strategy_gain,
                         const std::array<double, kCategoryCount>& category_gain, double error);

nlohmann::json params_to_json(const OracleParams& p);
OracleParams params_from_json(const nlohmann::json& j);
std::string params_hash(const OracleParams& p);

struct SubjectProfile {
  std::string subject_id;
  Strategy strategy = Strategy::kAuditory;
  uint64_t seed = 0;
};

// Subjects with the target strategy split, assigned by a seeded shuffle.
std::vector<SubjectProfile> make_subjects(const OracleTargets& targets, uint64_t seed);

// Response probabilities over the four avatars.
std::array<double, kAvatarCount> response_distribution(const OracleParams& p, Strategy s,
                                                       const TrialSpec& trial);
double expected_error(const OracleParams& p, Strategy s, const TrialSpec& trial);

int sample_response(const OracleParams& p, Strategy s, const TrialSpec& trial, Rng& rng);

// Pure function of (profile seed, trial id, session, params).
ResponseRecord respond(const SubjectProfile& profile, const OracleParams& p, const TrialSpec& trial);

struct CalibrationResult {
  OracleParams params;
  // Fitted minus target: five categories, then three strategies.
  std::array<double, kCategoryCount + kStrategyCount> analytic_residuals{};
  std::array<double, kCategoryCount + kStrategyCount> simulated_residuals{};
  int iterations = 0;
  bool converged = false;
};

inline constexpr double kCalibrationTolerance = 0.02;
inline constexpr int kCalibrationSimTrials = 100000;

// Per-cell inversion for a starting point, then coordinate-wise least squares
// on the exact expected error rates of `trials`, then a seeded simulation of
// kCalibrationSimTrials responses. Throws kInfeasible when any residual
// exceeds kCalibrationTolerance.
CalibrationResult calibrate(const OracleTargets& targets, std::span<const TrialSpec> trials,
                            uint64_t seed, int max_iterations = 1000);

// Expected category and strategy error rates of a subject population.
std::array<double, kCategoryCount + kStrategyCount> expected_error_rates(
    const OracleParams& p, const OracleTargets& targets, std::span<const TrialSpec> trials);

// Every subject runs its own seeded three-session schedule of `trials`.
BehavioralDataset generate_dataset(const OracleParams& p, const OracleTargets& targets,
                                   std::span<const TrialSpec> trials, uint64_t seed);

}  // namespace xmodal
