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
#include <vector>

namespace xmodal {

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

// P(F > f) for an F(d1, d2) variable.
double f_survival(double f, double d1, double d2);
// P(|T| > |t|) for Student's t with df degrees of freedom.
double t_two_sided_p(double t, double df);

struct AnovaResult {
  double F = 0.0;
  double p = 1.0;
  double eta_squared = 0.0;  // SS_effect / (SS_effect + SS_error)
  int df_effect = 0;
  int df_error = 0;
  double ss_effect = 0.0;
  double ss_error = 0.0;
  double ss_subjects = 0.0;
  // Set when the error sum of squares vanishes; F is then +inf (p = 0) or,
  // without any effect either, 0 (p = 1).
  bool degenerate = false;
};

// Row-major subjects x levels matrix.
struct SubjectMatrix {
  int subjects = 0;
  int levels = 0;
  std::vector<double> values;

  SubjectMatrix() = default;
  SubjectMatrix(int s, int l) : subjects(s), levels(l), values(size_t(s) * l, 0.0) {}
  double& at(int s, int l) { return values[size_t(s) * levels + l]; }
  double at(int s, int l) const { return values[size_t(s) * levels + l]; }
};

// One-way repeated-measures ANOVA. The error term is the subject x treatment
// interaction.
AnovaResult rm_anova(const SubjectMatrix& m);

// Two within-subject factors without sphericity correction. `values` is
// subjects x a_levels x b_levels, row-major. Each effect is tested against
// its own subject interaction.
struct TwoWayResult {
  AnovaResult a;
  AnovaResult b;
  AnovaResult interaction;
};
TwoWayResult rm_anova_two_way(int subjects, int a_levels, int b_levels, std::span<const double> values);

// One-way between-subjects ANOVA over independent groups.
AnovaResult oneway_anova(const std::vector<std::vector<double>>& groups);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
  double mean_difference = 0.0;
  bool degenerate = false;  // zero variance of the differences
};

// Paired t-test on a - b, two-sided.
TTestResult paired_t(std::span<const double> a, std::span<const double> b);

}  // namespace xmodal
