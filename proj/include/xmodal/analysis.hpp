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

#include <span>
#include <string>
#include <vector>

#include "xmodal/dataset.hpp"
#include "xmodal/stats.hpp"

namespace xmodal {

enum class GroupBy { kCategory, kCondition, kStrategy, kSession };
std::string_view to_string(GroupBy g);

// Timed-out responses are dropped by default; kCountAsError scores them as
// errors. Practice trials are never scored.
enum class TimeoutPolicy { kExclude, kCountAsError };
std::string_view to_string(TimeoutPolicy p);
TimeoutPolicy parse_timeout_policy(std::string_view s);
bool is_scored(const ResponseRecord& r, TimeoutPolicy policy = TimeoutPolicy::kExclude);

struct GroupRate {
  std::string group;
  int trials = 0;
  int errors = 0;
  double rate = 0.0;
};

// Error rate per group over scored records. Groups are listed in enum order;
// empty groups are omitted. Records without a strategy are skipped when grouping by strategy.
std::vector<GroupRate> error_rates(std::span<const ResponseRecord> records, GroupBy group_by,
                                   TimeoutPolicy policy = TimeoutPolicy::kExclude);
double pooled_error_rate(std::span<const ResponseRecord> records,
                         TimeoutPolicy policy = TimeoutPolicy::kExclude);

// Responses on incongruent trials of one visual-cue condition. For the
// LipsVsArm rows `competing` counts responses toward the other cue.
struct BiasEntry {
  std::string cue;  // lips, arm, lips_arm, lips_vs_arm:lips, lips_vs_arm:arm
  int trials = 0;
  int toward_visual = 0;
  int competing = 0;
  int correct = 0;
  int other = 0;

  double proportion() const { return trials ? double(toward_visual) / trials : 0.0; }
};

// Five entries in the order of BiasEntry::cue above.
std::vector<BiasEntry> ventriloquism_bias(std::span<const ResponseRecord> records,
                                         TimeoutPolicy policy = TimeoutPolicy::kExclude);

// Per-subject error rates, one column per level of `group_by`. Subjects
// appear in order of first appearance. Throws kInvalidArgument when a
// subject has no scored record at some level.
struct SubjectRates {
  std::vector<std::string> subjects;
  std::vector<std::string> levels;
  SubjectMatrix matrix;
};
SubjectRates subject_error_rates(std::span<const ResponseRecord> records, GroupBy group_by,
                                 TimeoutPolicy policy = TimeoutPolicy::kExclude);

// One value per subject.
std::vector<double> subject_pooled_rates(std::span<const ResponseRecord> records,
                                         std::span<const std::string> subjects,
                                         TimeoutPolicy policy = TimeoutPolicy::kExclude);

// Repeated-measures ANOVA with source (human, model) as the within-subject
// factor, on per-subject error rates. Both sets must hold the same subjects
// and, per subject, the same main trials. Under kExclude, trials either side
// timed out on are dropped from both.
AnovaResult compare_human_model(std::span<const ResponseRecord> human,
                                std::span<const ResponseRecord> model,
                                TimeoutPolicy policy = TimeoutPolicy::kExclude);

// Restricts records to the given subjects.
std::vector<ResponseRecord> select_subjects(std::span<const ResponseRecord> records,
                                            std::span<const std::string> subjects);

struct NamedAnova {
  std::string name;
  AnovaResult result;
};
struct NamedTTest {
  std::string name;
  TTestResult result;
};

// The statistics reported for one response set.
struct SetAnalysis {
  std::string label;
  int subjects = 0;
  int scored = 0;
  double pooled = 0.0;
  std::vector<GroupRate> by_category, by_condition, by_strategy, by_session;
  std::vector<BiasEntry> bias;
  std::vector<NamedAnova> anovas;
  std::vector<NamedTTest> ttests;
};

// Category and session effects (one-way repeated measures), cue type x
// congruency (two-way repeated measures), strategy (between subjects, when
// every subject has a strategy) and congruent-versus-category t-tests.
// Tests whose design is not estimable on the set are left out.
SetAnalysis analyze_set(std::string label, std::span<const ResponseRecord> records,
                        TimeoutPolicy policy = TimeoutPolicy::kExclude);

}  // namespace xmodal
