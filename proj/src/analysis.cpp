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

#include "xmodal/analysis.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "xmodal/error.hpp"

namespace xmodal {
namespace {

int level_count(GroupBy g) {
  switch (g) {
    case GroupBy::kCategory: return kCategoryCount;
    case GroupBy::kCondition: return kConditionCount;
    case GroupBy::kStrategy: return kStrategyCount;
    case GroupBy::kSession: return kSessionCount;
  }
  return 0;
}

std::string level_name(GroupBy g, int i) {
  switch (g) {
    case GroupBy::kCategory: return std::string(to_string(static_cast<DistanceCategory>(i)));
    case GroupBy::kCondition: return std::string(to_string(static_cast<Condition>(i)));
    case GroupBy::kStrategy: return std::string(to_string(static_cast<Strategy>(i)));
    case GroupBy::kSession: return "session" + std::to_string(i + 1);
  }
  return {};
}

// Level of a scored record, or -1 when it has none.
int level_of(GroupBy g, const ResponseRecord& r) {
  switch (g) {
    case GroupBy::kCategory: return static_cast<int>(trial_category(r.trial));
    case GroupBy::kCondition: return static_cast<int>(r.trial.condition);
    case GroupBy::kStrategy: return r.strategy ? static_cast<int>(*r.strategy) : -1;
    case GroupBy::kSession: return r.trial.session - 1;
  }
  return -1;
}

std::vector<std::string> subject_order(std::span<const ResponseRecord> records) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.subject_id).second) out.push_back(r.subject_id);
  }
  return out;
}

// Visual cue types of the two-way design, plus congruency.
int cue_index(Condition c) {
  switch (c) {
    case Condition::kLips: return 0;
    case Condition::kArm: return 1;
    case Condition::kLipsArm: return 2;
    case Condition::kLipsVsArm: return 3;
    default: return -1;
  }
}

}  // namespace

std::string_view to_string(TimeoutPolicy p) {
  return p == TimeoutPolicy::kExclude ? "exclude" : "error";
}

TimeoutPolicy parse_timeout_policy(std::string_view s) {
  if (s == "exclude") return TimeoutPolicy::kExclude;
  if (s == "error") return TimeoutPolicy::kCountAsError;
  fail(ErrorCode::kInvalidArgument, "unknown timeout policy: " + std::string(s));
}

bool is_scored(const ResponseRecord& r, TimeoutPolicy policy) {
  if (r.trial.practice()) return false;
  return policy == TimeoutPolicy::kCountAsError || !r.timed_out();
}

std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::kCategory: return "category";
    case GroupBy::kCondition: return "condition";
    case GroupBy::kStrategy: return "strategy";
    case GroupBy::kSession: return "session";
  }
  return "?";
}

std::vector<GroupRate> error_rates(std::span<const ResponseRecord> records, GroupBy g,
                                   TimeoutPolicy policy) {
  require(!records.empty(), "error rates of an empty response set");
  const int n = level_count(g);
  std::vector<GroupRate> rows(n);
  for (const auto& r : records) {
    if (!is_scored(r, policy)) continue;
    const int l = level_of(g, r);
    if (l < 0 || l >= n) continue;
    ++rows[l].trials;
    if (!r.correct()) ++rows[l].errors;
  }
  std::vector<GroupRate> out;
  for (int i = 0; i < n; ++i) {
    if (rows[i].trials == 0) continue;
    rows[i].group = level_name(g, i);
    rows[i].rate = double(rows[i].errors) / rows[i].trials;
    out.push_back(rows[i]);
  }
  return out;
}

double pooled_error_rate(std::span<const ResponseRecord> records, TimeoutPolicy policy) {
  int n = 0, e = 0;
  for (const auto& r : records) {
    if (!is_scored(r, policy)) continue;
    ++n;
    if (!r.correct()) ++e;
  }
  require(n > 0, "pooled error rate of a set without scored records");
  return double(e) / n;
}

std::vector<BiasEntry> ventriloquism_bias(std::span<const ResponseRecord> records,
                                         TimeoutPolicy policy) {
  std::vector<BiasEntry> out(5);
  out[0].cue = "lips";
  out[1].cue = "arm";
  out[2].cue = "lips_arm";
  out[3].cue = "lips_vs_arm:lips";
  out[4].cue = "lips_vs_arm:arm";
  auto tally = [](BiasEntry& e, int response, int audio, int visual, int competing) {
    ++e.trials;
    if (response == visual) {
      ++e.toward_visual;
    } else if (competing >= 0 && response == competing) {
      ++e.competing;
    } else if (response == audio) {
      ++e.correct;
    } else {
      ++e.other;
    }
  };
  for (const auto& r : records) {
    if (!is_scored(r, policy)) continue;
    const TrialSpec& t = r.trial;
    if (trial_category(t) == DistanceCategory::kCongruent) continue;
    const int audio = t.audio_pos.value();
    switch (t.condition) {
      case Condition::kLips: tally(out[0], r.response, audio, t.lips_pos->value(), -1); break;
      case Condition::kArm: tally(out[1], r.response, audio, t.arm_pos->value(), -1); break;
      case Condition::kLipsArm: tally(out[2], r.response, audio, t.lips_pos->value(), -1); break;
      case Condition::kLipsVsArm:
        tally(out[3], r.response, audio, t.lips_pos->value(), t.arm_pos->value());
        tally(out[4], r.response, audio, t.arm_pos->value(), t.lips_pos->value());
        break;
      default: break;
    }
  }
  return out;
}

SubjectRates subject_error_rates(std::span<const ResponseRecord> records, GroupBy g,
                                 TimeoutPolicy policy) {
  SubjectRates out;
  out.subjects = subject_order(records);
  const int levels = level_count(g);
  for (int i = 0; i < levels; ++i) out.levels.push_back(level_name(g, i));
  std::unordered_map<std::string, int> index;
  for (size_t i = 0; i < out.subjects.size(); ++i) index[out.subjects[i]] = static_cast<int>(i);
  const int n = static_cast<int>(out.subjects.size());
  std::vector<int> trials(size_t(n) * levels, 0), errors(size_t(n) * levels, 0);
  for (const auto& r : records) {
    if (!is_scored(r, policy)) continue;
    const int l = level_of(g, r);
    if (l < 0 || l >= levels) continue;
    const size_t k = size_t(index[r.subject_id]) * levels + l;
    ++trials[k];
    if (!r.correct()) ++errors[k];
  }
  out.matrix = SubjectMatrix(n, levels);
  for (int s = 0; s < n; ++s) {
    for (int l = 0; l < levels; ++l) {
      const size_t k = size_t(s) * levels + l;
      require(trials[k] > 0, "subject " + out.subjects[s] + " has no scored trial at level " + out.levels[l]);
      out.matrix.at(s, l) = double(errors[k]) / trials[k];
    }
  }
  return out;
}

std::vector<double> subject_pooled_rates(std::span<const ResponseRecord> records,
                                         std::span<const std::string> subjects,
                                         TimeoutPolicy policy) {
  std::unordered_map<std::string, std::pair<int, int>> counts;
  for (const auto& r : records) {
    if (!is_scored(r, policy)) continue;
    auto& c = counts[r.subject_id];
    ++c.first;
    if (!r.correct()) ++c.second;
  }
  std::vector<double> out;
  for (const auto& s : subjects) {
    auto it = counts.find(s);
    require(it != counts.end() && it->second.first > 0, "subject " + s + " has no scored trial");
    out.push_back(double(it->second.second) / it->second.first);
  }
  return out;
}

AnovaResult compare_human_model(std::span<const ResponseRecord> human,
                                std::span<const ResponseRecord> model,
                                TimeoutPolicy policy) {
  using Key = std::pair<int, int>;  // trial id, session
  auto index = [](std::span<const ResponseRecord> set) {
    std::map<std::string, std::map<Key, const ResponseRecord*>> m;
    for (const auto& r : set) {
      if (r.trial.practice()) continue;
      auto [it, fresh] = m[r.subject_id].emplace(Key{r.trial.trial_id, r.trial.session}, &r);
      require(fresh, "duplicate record for subject " + r.subject_id);
    }
    return m;
  };
  const auto h = index(human), m = index(model);
  require(h.size() >= 2, "comparison needs at least two subjects");
  require(h.size() == m.size(), "human and model sets hold different subject counts");
  SubjectMatrix mat(static_cast<int>(h.size()), 2);
  int s = 0;
  for (const auto& [subject, hs] : h) {
    auto mit = m.find(subject);
    require(mit != m.end(), "subject " + subject + " missing from the model set");
    const auto& ms = mit->second;
    require(hs.size() == ms.size(), "trial schedules differ for subject " + subject);
    int n = 0, he = 0, me = 0;
    for (const auto& [key, hr] : hs) {
      auto it = ms.find(key);
      require(it != ms.end(), "trial schedules differ for subject " + subject);
      const ResponseRecord* mr = it->second;
      require(hr->trial.spatial_key() == mr->trial.spatial_key(),
              "trial content differs for subject " + subject);
      if (policy == TimeoutPolicy::kExclude && (hr->timed_out() || mr->timed_out())) continue;
      ++n;
      if (!hr->correct()) ++he;
      if (!mr->correct()) ++me;
    }
    require(n > 0, "subject " + subject + " has no trial answered in both sets");
    mat.at(s, 0) = double(he) / n;
    mat.at(s, 1) = double(me) / n;
    ++s;
  }
  return rm_anova(mat);
}

std::vector<ResponseRecord> select_subjects(std::span<const ResponseRecord> records,
                                            std::span<const std::string> subjects) {
  const std::set<std::string> keep(subjects.begin(), subjects.end());
  std::vector<ResponseRecord> out;
  for (const auto& r : records) {
    if (keep.count(r.subject_id)) out.push_back(r);
  }
  return out;
}

SetAnalysis analyze_set(std::string label, std::span<const ResponseRecord> records,
                        TimeoutPolicy policy) {
  SetAnalysis a;
  a.label = std::move(label);
  const auto subjects = subject_order(records);
  a.subjects = static_cast<int>(subjects.size());
  a.scored = static_cast<int>(std::count_if(
      records.begin(), records.end(), [&](const ResponseRecord& r) { return is_scored(r, policy); }));
  a.pooled = pooled_error_rate(records, policy);
  a.by_category = error_rates(records, GroupBy::kCategory, policy);
  a.by_condition = error_rates(records, GroupBy::kCondition, policy);
  a.by_strategy = error_rates(records, GroupBy::kStrategy, policy);
  a.by_session = error_rates(records, GroupBy::kSession, policy);
  a.bias = ventriloquism_bias(records, policy);
  if (subjects.size() < 2) return a;

  // A design that a set cannot support (a subject missing a cell) is skipped.
  auto attempt = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInvalidArgument) throw;
    }
  };
  attempt([&] {
    const SubjectRates cat = subject_error_rates(records, GroupBy::kCategory, policy);
    a.anovas.push_back({"category", rm_anova(cat.matrix)});
    std::vector<double> congruent(cat.matrix.subjects);
    for (int s = 0; s < cat.matrix.subjects; ++s) congruent[s] = cat.matrix.at(s, 0);
    for (int l = 1; l < kCategoryCount; ++l) {
      std::vector<double> other(cat.matrix.subjects);
      for (int s = 0; s < cat.matrix.subjects; ++s) other[s] = cat.matrix.at(s, l);
      a.ttests.push_back({cat.levels[l] + " vs congruent", paired_t(other, congruent)});
    }
  });
  attempt([&] {
    const SubjectRates ses = subject_error_rates(records, GroupBy::kSession, policy);
    a.anovas.push_back({"session", rm_anova(ses.matrix)});
  });
  attempt([&] {
    // cue type (lips, arm, lips_arm, lips_vs_arm) x congruency
    std::unordered_map<std::string, int> index;
    for (size_t i = 0; i < subjects.size(); ++i) index[subjects[i]] = static_cast<int>(i);
    const size_t cells = subjects.size() * 8;
    std::vector<int> trials(cells, 0), errors(cells, 0);
    for (const auto& r : records) {
      if (!is_scored(r, policy)) continue;
      const int cue = cue_index(r.trial.condition);
      if (cue < 0) continue;
      const int inc = trial_category(r.trial) == DistanceCategory::kCongruent ? 0 : 1;
      const size_t k = (size_t(index[r.subject_id]) * 4 + cue) * 2 + inc;
      ++trials[k];
      if (!r.correct()) ++errors[k];
    }
    std::vector<double> v(cells);
    for (size_t k = 0; k < cells; ++k) {
      require(trials[k] > 0, "empty cue x congruency cell");
      v[k] = double(errors[k]) / trials[k];
    }
    const TwoWayResult tw = rm_anova_two_way(static_cast<int>(subjects.size()), 4, 2, v);
    a.anovas.push_back({"cue_type", tw.a});
    a.anovas.push_back({"congruency", tw.b});
    a.anovas.push_back({"cue_type x congruency", tw.interaction});
  });
  attempt([&] {
    std::unordered_map<std::string, Strategy> strategy;
    for (const auto& r : records) {
      if (r.strategy) strategy[r.subject_id] = *r.strategy;
    }
    require(strategy.size() == subjects.size(), "strategy missing for some subjects");
    const auto rates = subject_pooled_rates(records, subjects, policy);
    std::vector<std::vector<double>> groups(kStrategyCount);
    for (size_t i = 0; i < subjects.size(); ++i) {
      groups[static_cast<int>(strategy[subjects[i]])].push_back(rates[i]);
    }
    a.anovas.push_back({"strategy (between subjects)", oneway_anova(groups)});
  });
  return a;
}

}  // namespace xmodal
