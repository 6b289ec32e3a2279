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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "xmodal/xmodal.h"

namespace {

using xmodal::testing::TempDir;

std::string Text(const xm_config* c) {
  size_t n = 0;
  EXPECT_EQ(xm_config_text(c, nullptr, 0, &n), XM_OK);
  std::string s(n, '\0');
  EXPECT_EQ(xm_config_text(c, s.data(), n, &n), XM_OK);
  s.resize(n - 1);
  return s;
}

std::string Get(const xm_config* c, const char* key) {
  size_t n = 0;
  if (xm_config_get(c, key, nullptr, 0, &n) != XM_OK) return "<error>";
  std::string s(n, '\0');
  EXPECT_EQ(xm_config_get(c, key, s.data(), n, &n), XM_OK);
  s.resize(n - 1);
  return s;
}

std::string Hash(const xm_config* c) {
  char buf[17];
  EXPECT_EQ(xm_config_hash(c, buf, sizeof buf), XM_OK);
  return buf;
}

// Runs the command-line tool and returns its exit status.
int Cli(const std::string& args) {
  const std::string cmd = std::string(XMODAL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

TEST(CApiTest, VersionAndStatusNames) {
  EXPECT_STREQ(xm_version(), "1.0.0");
  EXPECT_STREQ(xm_status_name(XM_OK), "ok");
  EXPECT_STREQ(xm_status_name(XM_INFEASIBLE), "infeasible");
  EXPECT_STREQ(xm_last_error(), "");
}

TEST(CApiTest, ConfigLifecycle) {
  xm_config* c = nullptr;
  ASSERT_EQ(xm_config_new(&c), XM_OK);
  EXPECT_EQ(xm_config_validate(c), XM_OK);
  const std::string h0 = Hash(c);
  EXPECT_EQ(h0.size(), 16u);
  EXPECT_EQ(Get(c, "folds"), "33");
  EXPECT_EQ(xm_config_set(c, "folds", "8"), XM_OK);
  EXPECT_EQ(Get(c, "folds"), "8");
  EXPECT_NE(Hash(c), h0);
  EXPECT_NE(Text(c).find("folds = 8\n"), std::string::npos);

  EXPECT_EQ(xm_config_set(c, "colour", "red"), XM_INVALID_ARGUMENT);
  EXPECT_NE(std::string(xm_last_error()).find("colour"), std::string::npos);
  EXPECT_EQ(xm_config_set(c, "sample_rate", "8000"), XM_OK);
  EXPECT_EQ(xm_config_validate(c), XM_INVALID_ARGUMENT);

  char small[4];
  size_t needed = 0;
  EXPECT_EQ(xm_config_text(c, small, sizeof small, &needed), XM_INVALID_ARGUMENT);
  EXPECT_GT(needed, sizeof small);
  char tiny[8];
  EXPECT_EQ(xm_config_hash(c, tiny, sizeof tiny), XM_INVALID_ARGUMENT);
  xm_config_free(c);
  xm_config_free(nullptr);
}

TEST(CApiTest, NullArgumentsAreRejected) {
  EXPECT_EQ(xm_config_new(nullptr), XM_INVALID_ARGUMENT);
  EXPECT_EQ(xm_config_set(nullptr, "seed", "1"), XM_INVALID_ARGUMENT);
  EXPECT_EQ(xm_config_validate(nullptr), XM_INVALID_ARGUMENT);
  EXPECT_EQ(xm_run_stage(nullptr, "generate", nullptr, nullptr), XM_INVALID_ARGUMENT);
  EXPECT_EQ(xm_analyze_file(nullptr, ".", "exclude"), XM_INVALID_ARGUMENT);
}

TEST(CApiTest, LoadAndStageErrors) {
  TempDir dir;
  xm_config* c = nullptr;
  ASSERT_EQ(xm_config_new(&c), XM_OK);
  EXPECT_EQ(xm_config_load(c, (dir / "missing.cfg").c_str()), XM_IO);
  WriteText(dir / "bad.cfg", "seed three\n");
  EXPECT_EQ(xm_config_load(c, (dir / "bad.cfg").c_str()), XM_INVALID_ARGUMENT);
  WriteText(dir / "ok.cfg", "seed = 5\nout = " + (dir / "run").string() + "\n");
  EXPECT_EQ(xm_config_load(c, (dir / "ok.cfg").c_str()), XM_OK);
  EXPECT_EQ(Get(c, "seed"), "5");
  EXPECT_EQ(xm_run_stage(c, "deploy", nullptr, nullptr), XM_INVALID_ARGUMENT);
  xm_config_free(c);
}

TEST(CApiTest, AnalyzeFileStatuses) {
  TempDir dir;
  EXPECT_EQ(xm_analyze_file((dir / "none.jsonl").c_str(), dir.path().c_str(), "exclude"), XM_IO);
  WriteText(dir / "bad.jsonl", "{\"format\": \"something-else\"}\n");
  EXPECT_EQ(xm_analyze_file((dir / "bad.jsonl").c_str(), dir.path().c_str(), "exclude"), XM_FORMAT);
  EXPECT_EQ(xm_analyze_file((dir / "bad.jsonl").c_str(), dir.path().c_str(), "never"), XM_INVALID_ARGUMENT);
}

TEST(CliTest, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(Cli("--help"), 0);
  EXPECT_EQ(Cli(""), 2);
  EXPECT_EQ(Cli("frobnicate"), 2);
  EXPECT_EQ(Cli("generate --set colour=red --out " + dir.path().string()), 2);
  EXPECT_EQ(Cli("generate --folds 99 --out " + dir.path().string()), 2);
  EXPECT_EQ(Cli("generate --seed 0 --out " + dir.path().string()), 2);
  EXPECT_EQ(Cli("generate --config " + (dir / "missing.cfg").string()), 2);  // rejected by the option check
  WriteText(dir / "bad.jsonl", "{\"format\": \"something-else\"}\n");
  EXPECT_EQ(Cli("analyze --data " + (dir / "bad.jsonl").string() + " --out " + dir.path().string()), 4);
  WriteText(dir / "run.cfg", "out = /proc/xmodal-cannot-write\n");
  EXPECT_EQ(Cli("generate --config " + (dir / "run.cfg").string()), 3);
}

TEST(CliTest, AnalyzeWritesReports) {
  TempDir dir;
  // Two subjects answering the baseline trials, one of them always correctly.
  std::ostringstream data;
  data << R"({"format":"xmodal-responses","version":1,"records":8,"source":"human"})" << "\n";
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 4; ++a) {
      data << R"({"subject_id":"S0)" << s + 1 << R"(","trial_id":)" << a
           << R"(,"session":1,"condition":"baseline","audio_pos":)" << a
           << R"(,"lips_pos":null,"arm_pos":null,"syllables":["ha","wa","ba"],"response":)"
           << (s == 0 ? a : (a + 1) % 4) << R"(,"reaction_ms":500,"source":"human","strategy":null})" << "\n";
    }
  }
  WriteText(dir / "data.jsonl", data.str());
  ASSERT_EQ(Cli("analyze --data " + (dir / "data.jsonl").string() + " --out " + dir.path().string()), 0);
  std::ifstream summary(dir / "reports/summary.txt");
  EXPECT_TRUE(summary.good());
}

}  // namespace
