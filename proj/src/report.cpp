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

#include "xmodal/report.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>

namespace xmodal {
namespace {

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  const int n = std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return std::string(buf, std::min<size_t>(size_t(std::max(n, 0)), sizeof buf - 1));
}

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt("%.6f", v);
}

std::string p_text(double p) {
  if (p < 0.001) return "p < 0.001";
  return fmt("p = %.3f", p);
}

const std::vector<GroupRate>& rows_of(const SetAnalysis& s, GroupBy g) {
  switch (g) {
    case GroupBy::kCategory: return s.by_category;
    case GroupBy::kCondition: return s.by_condition;
    case GroupBy::kStrategy: return s.by_strategy;
    case GroupBy::kSession: return s.by_session;
  }
  return s.by_category;
}

std::string anova_row(const std::string& source, const std::string& test, const AnovaResult& a) {
  return source + "," + test + ",F," + std::to_string(a.df_effect) + "," + std::to_string(a.df_error) + "," +
         number(a.F) + "," + fmt("%.6g", a.p) + "," + number(a.eta_squared) + "," +
         (a.degenerate ? "1" : "0") + "\n";
}

}  // namespace

std::string rates_csv(std::span<const SetAnalysis> sets, GroupBy g) {
  std::string out = "source," + std::string(to_string(g)) + ",trials,errors,error_rate\n";
  for (const auto& s : sets) {
    for (const auto& r : rows_of(s, g)) {
      out += s.label + "," + r.group + "," + std::to_string(r.trials) + "," + std::to_string(r.errors) +
             "," + number(r.rate) + "\n";
    }
  }
  return out;
}

std::string bias_csv(std::span<const SetAnalysis> sets) {
  std::string out = "source,cue,trials,toward_visual,competing,correct,other,proportion\n";
  for (const auto& s : sets) {
    for (const auto& b : s.bias) {
      out += s.label + "," + b.cue + "," + std::to_string(b.trials) + "," + std::to_string(b.toward_visual) +
             "," + std::to_string(b.competing) + "," + std::to_string(b.correct) + "," +
             std::to_string(b.other) + "," + number(b.proportion()) + "\n";
    }
  }
  return out;
}

std::string tests_csv(std::span<const SetAnalysis> sets, const std::optional<Comparison>& c) {
  std::string out = "source,test,statistic,df_effect,df_error,value,p,eta_squared,degenerate\n";
  for (const auto& s : sets) {
    for (const auto& a : s.anovas) out += anova_row(s.label, a.name, a.result);
    for (const auto& t : s.ttests) {
      out += s.label + "," + t.name + ",t," + std::to_string(t.result.df) + ",," + number(t.result.t) + "," +
             fmt("%.6g", t.result.p) + ",," + (t.result.degenerate ? "1" : "0") + "\n";
    }
  }
  if (c) out += anova_row(c->human_label + " vs " + c->model_label, "source", c->anova);
  return out;
}

std::string format_anova(const AnovaResult& a) {
  std::string f = std::isinf(a.F) ? "inf" : fmt("%.2f", a.F);
  std::string s = fmt("F(%d, %d) = ", a.df_effect, a.df_error) + f + ", " + p_text(a.p) +
                  fmt(", eta^2 = %.2f", a.eta_squared);
  if (a.degenerate) s += " [zero error variance]";
  return s;
}

std::string format_ttest(const TTestResult& t) {
  std::string v = std::isinf(t.t) ? (t.t > 0 ? "inf" : "-inf") : fmt("%.2f", t.t);
  std::string s = fmt("t(%d) = ", t.df) + v + ", " + p_text(t.p) + fmt(", mean difference = %.3f", t.mean_difference);
  if (t.degenerate) s += " [zero variance]";
  return s;
}

std::string summary_text(std::span<const SetAnalysis> sets, const std::optional<Comparison>& c) {
  std::string out;
  for (const auto& s : sets) {
    out += "== " + s.label + " ==\n";
    out += fmt("subjects: %d, scored responses: %d, pooled ER: %.3f\n", s.subjects, s.scored, s.pooled);
    out += "ER by category:";
    for (const auto& r : s.by_category) out += fmt(" %s %.3f;", r.group.c_str(), r.rate);
    out += "\nER by condition:";
    for (const auto& r : s.by_condition) out += fmt(" %s %.3f;", r.group.c_str(), r.rate);
    if (!s.by_strategy.empty()) {
      out += "\nER by strategy:";
      for (const auto& r : s.by_strategy) out += fmt(" %s %.3f;", r.group.c_str(), r.rate);
    }
    out += "\nER by session:";
    for (const auto& r : s.by_session) out += fmt(" %s %.3f;", r.group.c_str(), r.rate);
    out += "\nResponses toward the visual cue on incongruent trials:";
    for (const auto& b : s.bias) out += fmt(" %s %.3f;", b.cue.c_str(), b.proportion());
    out += "\n";
    for (const auto& a : s.anovas) out += "  " + a.name + ": " + format_anova(a.result) + "\n";
    for (const auto& t : s.ttests) out += "  " + t.name + ": " + format_ttest(t.result) + "\n";
    out += "\n";
  }
  if (c) {
    out += "== " + c->human_label + " vs " + c->model_label + " ==\n";
    out += fmt("subjects: %d\n", c->subjects);
    out += "  source: " + format_anova(c->anova) + "\n";
    out += std::string("  ER difference is ") + (c->anova.p > 0.05 ? "not significant" : "significant") +
           " at alpha = 0.05\n\n";
  }
  out +=
      "Notes on test structure:\n"
      "  category, session: one-way repeated measures on per-subject ER.\n"
      "  cue_type x congruency: two-way repeated measures over the four visual-cue conditions and\n"
      "    congruent/incongruent trials; baseline is not part of this design.\n"
      "  strategy: one-way between-subjects ANOVA on per-subject pooled ER (strategy is a\n"
      "    between-subject attribute).\n"
      "  source: one-way repeated measures with source as the within-subject factor.\n"
      "  No sphericity corrections are applied.\n";
  return out;
}

std::string category_svg(std::span<const SetAnalysis> sets) {
  static const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52"};
  const int width = 640, height = 360, left = 60, bottom = 300, top = 30;
  const int groups = kCategoryCount;
  const double group_w = double(width - left - 20) / groups;
  const int n = std::max<int>(1, static_cast<int>(sets.size()));
  const double bar_w = group_w * 0.8 / n;
  std::string out = fmt(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n",
      width, height);
  out += fmt("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", left, top, left, bottom);
  out += fmt("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", left, bottom, width - 20, bottom);
  for (int i = 0; i <= 4; ++i) {
    const double v = i * 0.25;
    const double y = bottom - v * (bottom - top);
    out += fmt("<text x=\"%d\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n", left - 5, y + 4, v);
  }
  out += fmt("<text x=\"15\" y=\"%d\" transform=\"rotate(-90 15 %d)\" text-anchor=\"middle\">error rate</text>\n",
             (top + bottom) / 2, (top + bottom) / 2);
  for (int g = 0; g < groups; ++g) {
    const std::string name(to_string(static_cast<DistanceCategory>(g)));
    const double x0 = left + g * group_w + group_w * 0.1;
    out += fmt("<text x=\"%.1f\" y=\"%d\" text-anchor=\"middle\">%s</text>\n", x0 + group_w * 0.4, bottom + 15,
               name.c_str());
    for (size_t s = 0; s < sets.size(); ++s) {
      for (const auto& r : sets[s].by_category) {
        if (r.group != name) continue;
        const double h = r.rate * (bottom - top);
        out += fmt("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"/>\n", x0 + s * bar_w,
                   bottom - h, bar_w, h, kColors[s % 4]);
      }
    }
  }
  for (size_t s = 0; s < sets.size(); ++s) {
    const int y = top + 14 * static_cast<int>(s);
    out += fmt("<rect x=\"%d\" y=\"%d\" width=\"10\" height=\"10\" fill=\"%s\"/>\n", width - 140, y - 9, kColors[s % 4]);
    out += fmt("<text x=\"%d\" y=\"%d\">%s</text>\n", width - 125, y, sets[s].label.c_str());
  }
  out += "</svg>\n";
  return out;
}

}  // namespace xmodal
