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

#include <optional>
#include <span>
#include <string>

#include "xmodal/analysis.hpp"

namespace xmodal {

// Comparison of two response sets on the same subjects and trials.
struct Comparison {
  std::string human_label;
  std::string model_label;
  int subjects = 0;
  AnovaResult anova;
};

// CSV tables; one row per (set, group). Numbers use fixed formats so that
// equal inputs give identical bytes.
std::string rates_csv(std::span<const SetAnalysis> sets, GroupBy group_by);
std::string bias_csv(std::span<const SetAnalysis> sets);
std::string tests_csv(std::span<const SetAnalysis> sets, const std::optional<Comparison>& comparison);

// "F(4, 128) = 37.08, p < 0.001, eta^2 = 0.70"
std::string format_anova(const AnovaResult& a);
std::string format_ttest(const TTestResult& t);

// Plain-text summary in the F / p / eta^2 reporting style, ending with
// notes on how each test's factor structure was chosen.
std::string summary_text(std::span<const SetAnalysis> sets, const std::optional<Comparison>& comparison);

// Grouped bar chart of error rate per distance category, one series per set.
std::string category_svg(std::span<const SetAnalysis> sets);

}  // namespace xmodal
