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

#include "xmodal/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "xmodal/error.hpp"

namespace xmodal {

using nlohmann::json;

namespace {

constexpr int kTargetCount = kCategoryCount + kStrategyCount;

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

int distance(AvatarIndex a, AvatarIndex b) { return std::abs(a.value() - b.value()); }

CueType single_cue(Condition c) {
  switch (c) {
    case Condition::kLips: return CueType::kLips;
    case Condition::kArm: return CueType::kArm;
    case Condition::kLipsArm: return CueType::kLipsArm;
    default: break;
  }
  fail(ErrorCode::kInternal, "condition has no single visual cue");
}

AvatarIndex cue_position(const TrialSpec& t) { return t.lips_pos ? *t.lips_pos : *t.arm_pos; }

// Adds `mass` spread as: audio avatar with 1 - e, neighbours share e.
void add_confusion(std::array<double, kAvatarCount>& out, int audio, double e, double mass) {
  const int lo = audio - 1, hi = audio + 1;
  const int neighbours = (lo >= 0) + (hi < kAvatarCount);
  out[audio] += mass * (1.0 - e);
  if (lo >= 0) out[lo] += mass * e / neighbours;
  if (hi < kAvatarCount) out[hi] += mass * e / neighbours;
}

int confuse(int audio, double e, Rng& rng) {
  if (rng.uniform() >= e) return audio;
  if (audio == 0) return 1;
  if (audio == kAvatarCount - 1) return kAvatarCount - 2;
  return rng.below(2) ? audio + 1 : audio - 1;
}

const std::array<Strategy, kStrategyCount> kStrategies = {Strategy::kAuditory, Strategy::kVisual,
                                                          Strategy::kMixed};

}  // namespace

std::string_view to_string(CueType c) {
  switch (c) {
    case CueType::kLips: return "lips";
    case CueType::kArm: return "arm";
    case CueType::kLipsArm: return "lips_arm";
    case CueType::kLipsVsArm: return "lips_vs_arm";
  }
  return "?";
}

void OracleTargets::validate() const {
  for (double t : category) require(is_probability(t), "category target outside [0, 1]");
  for (double t : strategy) require(is_probability(t), "strategy target outside [0, 1]");
  for (int n : strategy_counts) require(n >= 0, "strategy counts must be nonnegative");
  require(subjects() >= 2, "at least two subjects are required");
}

void OracleParams::validate() const {
  for (const auto& s : capture) {
    for (const auto& c : s) {
      for (double p : c) require(is_probability(p), "capture probability outside [0, 1]");
    }
  }
  for (double p : confusion) require(is_probability(p), "confusion probability outside [0, 1]");
  require(is_probability(baseline_error), "baseline error outside [0, 1]");
  require(is_probability(arm_competition), "arm competition factor outside [0, 1]");
}

OracleParams make_params(const std::array<double, kStrategyCount>& k,
                         const std::array<double, kCategoryCount>& g, double error) {
  OracleParams p;
  for (int s = 0; s < kStrategyCount; ++s) {
    for (int c = 0; c < kCueTypeCount; ++c) {
      for (int d = 0; d < kCategoryCount; ++d) {
        p.capture[s][c][d] = std::clamp(k[s] * kCueWeights[c] * g[d], 0.0, kMaxCapture);
      }
    }
  }
  p.confusion.fill(error);
  p.baseline_error = error;
  p.strategy_gain = k;
  p.category_gain = g;
  return p;
}

json params_to_json(const OracleParams& p) {
  json j;
  json capture = json::object();
  for (int s = 0; s < kStrategyCount; ++s) {
    json per_cue = json::object();
    for (int c = 0; c < kCueTypeCount; ++c) {
      per_cue[std::string(to_string(static_cast<CueType>(c)))] = p.capture[s][c];
    }
    capture[std::string(to_string(kStrategies[s]))] = per_cue;
  }
  j["capture"] = capture;
  j["confusion"] = p.confusion;
  j["baseline_error"] = p.baseline_error;
  j["arm_competition"] = p.arm_competition;
  j["strategy_gain"] = p.strategy_gain;
  j["category_gain"] = p.category_gain;
  j["cue_weights"] = kCueWeights;
  return j;
}

OracleParams params_from_json(const json& j) {
  OracleParams p;
  try {
    for (int s = 0; s < kStrategyCount; ++s) {
      const json& per_cue = j.at("capture").at(std::string(to_string(kStrategies[s])));
      for (int c = 0; c < kCueTypeCount; ++c) {
        p.capture[s][c] = per_cue.at(std::string(to_string(static_cast<CueType>(c))))
                              .get<std::array<double, kCategoryCount>>();
      }
    }
    p.confusion = j.at("confusion").get<std::array<double, kAvatarCount>>();
    p.baseline_error = j.at("baseline_error").get<double>();
    p.arm_competition = j.at("arm_competition").get<double>();
    p.strategy_gain = j.at("strategy_gain").get<std::array<double, kStrategyCount>>();
    p.category_gain = j.at("category_gain").get<std::array<double, kCategoryCount>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed oracle parameters: ") + e.what());
  }
  p.validate();
  return p;
}

std::string params_hash(const OracleParams& p) {
  const std::string text = params_to_json(p).dump();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
  return buf;
}

std::vector<SubjectProfile> make_subjects(const OracleTargets& targets, uint64_t seed) {
  targets.validate();
  std::vector<Strategy> strategies;
  for (int s = 0; s < kStrategyCount; ++s) {
    strategies.insert(strategies.end(), targets.strategy_counts[s], kStrategies[s]);
  }
  Rng rng(mix_seed(seed, 0x57a7));
  rng.shuffle(strategies.begin(), strategies.end());
  std::vector<SubjectProfile> out;
  for (size_t i = 0; i < strategies.size(); ++i) {
    out.push_back({subject_label(static_cast<int>(i)), strategies[i], mix_seed(seed, 0x5b1, i)});
  }
  return out;
}

std::array<double, kAvatarCount> response_distribution(const OracleParams& p, Strategy s,
                                                       const TrialSpec& t) {
  std::array<double, kAvatarCount> out{};
  const int a = t.audio_pos.value();
  if (t.condition == Condition::kBaseline) {
    add_confusion(out, a, p.baseline_error, 1.0);
    return out;
  }
  if (t.condition == Condition::kLipsVsArm) {
    const double pl = p.capture_for(s, CueType::kLipsVsArm, trial_category(t));
    const double pa =
        p.capture_for(s, CueType::kArm, categorize(t.audio_pos, *t.arm_pos)) * p.arm_competition;
    out[t.lips_pos->value()] += pl;
    out[t.arm_pos->value()] += (1.0 - pl) * pa;
    add_confusion(out, a, p.confusion[distance(t.audio_pos, *t.lips_pos)], (1.0 - pl) * (1.0 - pa));
    return out;
  }
  const AvatarIndex v = cue_position(t);
  const double c = p.capture_for(s, single_cue(t.condition), categorize(t.audio_pos, v));
  out[v.value()] += c;
  add_confusion(out, a, p.confusion[distance(t.audio_pos, v)], 1.0 - c);
  return out;
}

double expected_error(const OracleParams& p, Strategy s, const TrialSpec& t) {
  return 1.0 - response_distribution(p, s, t)[t.audio_pos.value()];
}

int sample_response(const OracleParams& p, Strategy s, const TrialSpec& t, Rng& rng) {
  const int a = t.audio_pos.value();
  if (t.condition == Condition::kBaseline) return confuse(a, p.baseline_error, rng);
  if (t.condition == Condition::kLipsVsArm) {
    const double pl = p.capture_for(s, CueType::kLipsVsArm, trial_category(t));
    if (rng.uniform() < pl) return t.lips_pos->value();
    const double pa =
        p.capture_for(s, CueType::kArm, categorize(t.audio_pos, *t.arm_pos)) * p.arm_competition;
    if (rng.uniform() < pa) return t.arm_pos->value();
    return confuse(a, p.confusion[distance(t.audio_pos, *t.lips_pos)], rng);
  }
  const AvatarIndex v = cue_position(t);
  if (rng.uniform() < p.capture_for(s, single_cue(t.condition), categorize(t.audio_pos, v))) {
    return v.value();
  }
  return confuse(a, p.confusion[distance(t.audio_pos, v)], rng);
}

ResponseRecord respond(const SubjectProfile& profile, const OracleParams& p, const TrialSpec& t) {
  t.validate();
  Rng rng(mix_seed(profile.seed, static_cast<uint64_t>(t.trial_id), static_cast<uint64_t>(t.session)));
  ResponseRecord r;
  r.subject_id = profile.subject_id;
  r.trial = t;
  r.response = sample_response(p, profile.strategy, t, rng);
  r.reaction_ms = 450 + static_cast<int>(rng.below(1000));
  r.source = Source::kOracle;
  r.strategy = profile.strategy;
  return r;
}

std::array<double, kTargetCount> expected_error_rates(const OracleParams& p,
                                                      const OracleTargets& targets,
                                                      std::span<const TrialSpec> trials) {
  std::array<double, kCategoryCount> cat_sum{};
  std::array<int, kCategoryCount> cat_n{};
  std::array<double, kTargetCount> out{};
  const double subjects = targets.subjects();
  for (int s = 0; s < kStrategyCount; ++s) {
    std::array<double, kCategoryCount> per_cat{};
    double total = 0.0;
    for (const auto& t : trials) {
      const double e = expected_error(p, kStrategies[s], t);
      per_cat[static_cast<int>(trial_category(t))] += e;
      total += e;
    }
    out[kCategoryCount + s] = total / double(trials.size());
    for (int c = 0; c < kCategoryCount; ++c) cat_sum[c] += targets.strategy_counts[s] * per_cat[c];
  }
  for (const auto& t : trials) ++cat_n[static_cast<int>(trial_category(t))];
  for (int c = 0; c < kCategoryCount; ++c) {
    out[c] = cat_n[c] ? cat_sum[c] / (subjects * cat_n[c]) : 0.0;
  }
  return out;
}

namespace {

struct Fit {
  std::array<double, kStrategyCount> k{};
  std::array<double, kCategoryCount> g{};
  double e = 0.0;

  static constexpr int kSize = kStrategyCount + kCategoryCount + 1;
  double& at(int i) { return i < kStrategyCount ? k[i] : i < kStrategyCount + kCategoryCount ? g[i - kStrategyCount] : e; }
  static double upper(int i) { return i < kStrategyCount ? 4.0 : i < kStrategyCount + kCategoryCount ? 2.0 : 0.5; }
  OracleParams params() const { return make_params(k, g, e); }
};

std::array<double, kTargetCount> target_vector(const OracleTargets& t) {
  std::array<double, kTargetCount> v{};
  std::copy(t.category.begin(), t.category.end(), v.begin());
  std::copy(t.strategy.begin(), t.strategy.end(), v.begin() + kCategoryCount);
  return v;
}

double sse(const Fit& f, const OracleTargets& targets, std::span<const TrialSpec> trials) {
  const auto er = expected_error_rates(f.params(), targets, trials);
  const auto tv = target_vector(targets);
  double s = 0.0;
  for (int i = 0; i < kTargetCount; ++i) {
    const double r = er[i] - tv[i];
    s += r * r;
  }
  return s;
}

// Starting point from per-cell inversion of ER = c + (1 - c) * e.
Fit initial_fit(const OracleTargets& t) {
  Fit f;
  f.e = std::min(t.category[static_cast<int>(DistanceCategory::kCongruent)], 0.5);
  const double mean_w = (kCueWeights[0] + kCueWeights[1] + kCueWeights[2] + kCueWeights[3]) / 4.0;
  auto invert = [&](double er) { return f.e < 1.0 ? std::max(0.0, (er - f.e) / (1.0 - f.e)) : 0.0; };
  double pooled = 0.0;
  for (int s = 0; s < kStrategyCount; ++s) pooled += t.strategy_counts[s] * t.strategy[s];
  pooled /= t.subjects();
  const double pooled_capture = invert(pooled);
  for (int s = 0; s < kStrategyCount; ++s) {
    f.k[s] = pooled_capture > 0.0 ? std::min(invert(t.strategy[s]) / pooled_capture, 4.0) : 0.0;
  }
  for (int c = 1; c < kCategoryCount; ++c) f.g[c] = std::min(invert(t.category[c]) / mean_w, 2.0);
  f.g[0] = 0.0;
  return f;
}

// Golden-section search of one coordinate on [0, upper]; keeps the current
// value unless the search finds a strictly better one.
double line_search(Fit& f, int i, double current, const OracleTargets& t,
                   std::span<const TrialSpec> trials) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = Fit::upper(i);
  const double saved = f.at(i);
  auto eval = [&](double x) {
    f.at(i) = x;
    return sse(f, t, trials);
  };
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = eval(x2);
    }
  }
  const double best_x = f1 <= f2 ? x1 : x2;
  const double best = std::min(f1, f2);
  // The boundary itself is a common optimum (clamped gains).
  const double at_zero = eval(0.0);
  if (at_zero < best && at_zero < current) {
    f.at(i) = 0.0;
    return at_zero;
  }
  if (best < current) {
    f.at(i) = best_x;
    return best;
  }
  f.at(i) = saved;
  return current;
}

}  // namespace

CalibrationResult calibrate(const OracleTargets& targets, std::span<const TrialSpec> trials,
                            uint64_t seed, int max_iterations) {
  targets.validate();
  require(!trials.empty(), "calibration needs a trial set");
  require(max_iterations >= 0, "iteration cap must be nonnegative");
  Fit fit = initial_fit(targets);
  double current = sse(fit, targets, trials);
  CalibrationResult result;
  for (int it = 0; it < max_iterations && current > 0.0; ++it) {
    const double before = current;
    for (int i = 0; i < Fit::kSize; ++i) current = line_search(fit, i, current, targets, trials);
    result.iterations = it + 1;
    if (before - current <= 1e-14 * std::max(1.0, before)) {
      result.converged = true;
      break;
    }
  }
  if (current == 0.0) result.converged = true;
  result.params = fit.params();

  const auto tv = target_vector(targets);
  const auto er = expected_error_rates(result.params, targets, trials);
  for (int i = 0; i < kTargetCount; ++i) result.analytic_residuals[i] = er[i] - tv[i];

  // Seeded simulation over the subject mix.
  std::vector<Strategy> mix;
  for (int s = 0; s < kStrategyCount; ++s) mix.insert(mix.end(), targets.strategy_counts[s], kStrategies[s]);
  std::array<double, kCategoryCount> cat_err{}, cat_n{};
  std::array<double, kStrategyCount> st_err{}, st_n{};
  Rng rng(mix_seed(seed, 0x51a));
  for (int i = 0; i < kCalibrationSimTrials; ++i) {
    const Strategy s = mix[i % mix.size()];
    const TrialSpec& t = trials[rng.below(trials.size())];
    const bool wrong = sample_response(result.params, s, t, rng) != t.audio_pos.value();
    const int c = static_cast<int>(trial_category(t));
    cat_err[c] += wrong;
    cat_n[c] += 1;
    st_err[static_cast<int>(s)] += wrong;
    st_n[static_cast<int>(s)] += 1;
  }
  for (int c = 0; c < kCategoryCount; ++c) {
    result.simulated_residuals[c] = cat_n[c] > 0 ? cat_err[c] / cat_n[c] - tv[c] : 0.0;
  }
  for (int s = 0; s < kStrategyCount; ++s) {
    result.simulated_residuals[kCategoryCount + s] =
        st_n[s] > 0 ? st_err[s] / st_n[s] - tv[kCategoryCount + s] : 0.0;
  }

  double worst = 0.0;
  int worst_i = 0;
  for (int i = 0; i < kTargetCount; ++i) {
    for (double r : {result.analytic_residuals[i], result.simulated_residuals[i]}) {
      if (std::abs(r) > worst) {
        worst = std::abs(r);
        worst_i = i;
      }
    }
  }
  if (worst > kCalibrationTolerance) {
    std::ostringstream os;
    os << "oracle targets are infeasible: residual " << worst << " on "
       << (worst_i < kCategoryCount ? std::string(to_string(static_cast<DistanceCategory>(worst_i)))
                                    : std::string(to_string(kStrategies[worst_i - kCategoryCount])))
       << " exceeds " << kCalibrationTolerance;
    fail(ErrorCode::kInfeasible, os.str());
  }
  return result;
}

BehavioralDataset generate_dataset(const OracleParams& p, const OracleTargets& targets,
                                   std::span<const TrialSpec> trials, uint64_t seed) {
  p.validate();
  const auto subjects = make_subjects(targets, seed);
  BehavioralDataset d;
  d.header["source"] = "oracle";
  d.header["seed"] = seed;
  d.header["params_hash"] = params_hash(p);
  d.header["subjects"] = subjects.size();
  d.header["targets"] = {{"category", targets.category},
                         {"strategy", targets.strategy},
                         {"strategy_counts", targets.strategy_counts}};
  for (size_t i = 0; i < subjects.size(); ++i) {
    const auto schedule = session_schedule(trials, mix_seed(seed, 0x5c4ed, i));
    for (const auto& t : schedule) d.records.push_back(respond(subjects[i], p, t));
  }
  return d;
}

}  // namespace xmodal
