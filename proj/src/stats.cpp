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

#include "xmodal/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "xmodal/error.hpp"

namespace xmodal {
namespace {

constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-15;

double beta_fraction(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  fail(ErrorCode::kInternal, "incomplete beta continued fraction did not converge");
}

// Effect tested against an error term.
AnovaResult finish(double ss_effect, int df_effect, double ss_error, int df_error) {
  AnovaResult r;
  r.ss_effect = ss_effect;
  r.ss_error = ss_error;
  r.df_effect = df_effect;
  r.df_error = df_error;
  const double scale = std::max({std::abs(ss_effect), std::abs(ss_error), 1.0});
  if (ss_error <= 1e-12 * scale) {
    r.degenerate = true;
    r.ss_error = 0.0;
    if (ss_effect <= 1e-12 * scale) {
      r.ss_effect = 0.0;
      r.F = 0.0;
      r.p = 1.0;
      r.eta_squared = 0.0;
    } else {
      r.F = std::numeric_limits<double>::infinity();
      r.p = 0.0;
      r.eta_squared = 1.0;
    }
    return r;
  }
  r.F = (ss_effect / df_effect) / (ss_error / df_error);
  r.p = f_survival(r.F, df_effect, df_error);
  r.eta_squared = ss_effect / (ss_effect + ss_error);
  return r;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "incomplete beta needs positive shape parameters");
  require(x >= 0.0 && x <= 1.0, "incomplete beta argument outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
  require(d1 > 0.0 && d2 > 0.0, "F distribution needs positive degrees of freedom");
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double t_two_sided_p(double t, double df) {
  require(df > 0.0, "t distribution needs positive degrees of freedom");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

AnovaResult rm_anova(const SubjectMatrix& m) {
  require(m.subjects >= 2 && m.levels >= 2, "repeated-measures ANOVA needs >= 2 subjects and levels");
  require(m.values.size() == size_t(m.subjects) * m.levels, "matrix size mismatch");
  for (double v : m.values) require(std::isfinite(v), "ANOVA input has missing or non-finite cells");
  const int n = m.subjects, k = m.levels;
  const double grand = std::accumulate(m.values.begin(), m.values.end(), 0.0) / (n * k);
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int l = 0; l < k; ++l) {
      row_mean[s] += m.at(s, l) / k;
      col_mean[l] += m.at(s, l) / n;
    }
  }
  double ss_treat = 0.0, ss_subj = 0.0, ss_res = 0.0;
  for (int l = 0; l < k; ++l) ss_treat += n * (col_mean[l] - grand) * (col_mean[l] - grand);
  for (int s = 0; s < n; ++s) ss_subj += k * (row_mean[s] - grand) * (row_mean[s] - grand);
  for (int s = 0; s < n; ++s) {
    for (int l = 0; l < k; ++l) {
      const double r = m.at(s, l) - row_mean[s] - col_mean[l] + grand;
      ss_res += r * r;
    }
  }
  AnovaResult r = finish(ss_treat, k - 1, ss_res, (n - 1) * (k - 1));
  r.ss_subjects = ss_subj;
  return r;
}

TwoWayResult rm_anova_two_way(int n, int a, int b, std::span<const double> v) {
  require(n >= 2 && a >= 2 && b >= 2, "two-way ANOVA needs >= 2 subjects and levels per factor");
  require(v.size() == size_t(n) * a * b, "two-way ANOVA input size mismatch");
  for (double x : v) require(std::isfinite(x), "ANOVA input has missing or non-finite cells");
  auto at = [&](int s, int i, int j) { return v[(size_t(s) * a + i) * b + j]; };
  const double grand = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  std::vector<double> ms(n, 0.0), ma(a, 0.0), mb(b, 0.0), mab(size_t(a) * b, 0.0),
      msa(size_t(n) * a, 0.0), msb(size_t(n) * b, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < a; ++i) {
      for (int j = 0; j < b; ++j) {
        const double x = at(s, i, j);
        ms[s] += x / (a * b);
        ma[i] += x / (n * b);
        mb[j] += x / (n * a);
        mab[size_t(i) * b + j] += x / n;
        msa[size_t(s) * a + i] += x / b;
        msb[size_t(s) * b + j] += x / a;
      }
    }
  }
  double ss_a = 0, ss_b = 0, ss_ab = 0, ss_sa = 0, ss_sb = 0, ss_sab = 0, ss_s = 0;
  for (int i = 0; i < a; ++i) ss_a += n * b * (ma[i] - grand) * (ma[i] - grand);
  for (int j = 0; j < b; ++j) ss_b += n * a * (mb[j] - grand) * (mb[j] - grand);
  for (int s = 0; s < n; ++s) ss_s += a * b * (ms[s] - grand) * (ms[s] - grand);
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < b; ++j) {
      const double r = mab[size_t(i) * b + j] - ma[i] - mb[j] + grand;
      ss_ab += n * r * r;
    }
  }
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < a; ++i) {
      const double r = msa[size_t(s) * a + i] - ms[s] - ma[i] + grand;
      ss_sa += b * r * r;
    }
    for (int j = 0; j < b; ++j) {
      const double r = msb[size_t(s) * b + j] - ms[s] - mb[j] + grand;
      ss_sb += a * r * r;
    }
    for (int i = 0; i < a; ++i) {
      for (int j = 0; j < b; ++j) {
        const double r = at(s, i, j) - mab[size_t(i) * b + j] - msa[size_t(s) * a + i] -
                         msb[size_t(s) * b + j] + ma[i] + mb[j] + ms[s] - grand;
        ss_sab += r * r;
      }
    }
  }
  TwoWayResult out;
  out.a = finish(ss_a, a - 1, ss_sa, (n - 1) * (a - 1));
  out.b = finish(ss_b, b - 1, ss_sb, (n - 1) * (b - 1));
  out.interaction = finish(ss_ab, (a - 1) * (b - 1), ss_sab, (n - 1) * (a - 1) * (b - 1));
  out.a.ss_subjects = out.b.ss_subjects = out.interaction.ss_subjects = ss_s;
  return out;
}

AnovaResult oneway_anova(const std::vector<std::vector<double>>& groups) {
  int k = 0;
  size_t total = 0;
  double sum = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    ++k;
    total += g.size();
    for (double x : g) {
      require(std::isfinite(x), "ANOVA input has non-finite values");
      sum += x;
    }
  }
  require(k >= 2 && total > size_t(k), "between-subjects ANOVA needs >= 2 groups and spare observations");
  const double grand = sum / double(total);
  double ss_between = 0.0, ss_within = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / double(g.size());
    ss_between += g.size() * (mean - grand) * (mean - grand);
    for (double x : g) ss_within += (x - mean) * (x - mean);
  }
  return finish(ss_between, k - 1, ss_within, static_cast<int>(total) - k);
}

TTestResult paired_t(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "paired t-test needs equal lengths");
  require(a.size() >= 2, "paired t-test needs at least two pairs");
  const size_t n = a.size();
  std::vector<double> d(n);
  for (size_t i = 0; i < n; ++i) {
    require(std::isfinite(a[i]) && std::isfinite(b[i]), "paired t-test input is not finite");
    d[i] = a[i] - b[i];
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / double(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  TTestResult r;
  r.df = static_cast<int>(n) - 1;
  r.mean_difference = mean;
  const double sd = std::sqrt(ss / r.df);
  const double scale = std::max(1.0, std::abs(mean));
  if (sd <= 1e-12 * scale) {
    r.degenerate = true;
    if (std::abs(mean) <= 1e-15 * scale) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(double(n)));
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace xmodal
