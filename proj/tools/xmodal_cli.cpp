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

// Command-line front end. Links only the C interface of libxmodal.
//
// Exit codes: 0 success, 1 internal error, 2 invalid argument or usage,
// 3 I/O, 4 malformed input file, 5 invalid state, 6 infeasible calibration,
// 7 shape mismatch.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xmodal/xmodal.h"

namespace {

int exit_code(xm_status s) {
  switch (s) {
    case XM_OK: return 0;
    case XM_INVALID_ARGUMENT: return 2;
    case XM_IO: return 3;
    case XM_FORMAT: return 4;
    case XM_STATE: return 5;
    case XM_INFEASIBLE: return 6;
    case XM_SHAPE_MISMATCH: return 7;
    case XM_INTERNAL: return 1;
  }
  return 1;
}

void log_line(const char* message, void*) {
  std::fprintf(stderr, "%s\n", message);
  std::fflush(stderr);
}

int report(xm_status s) {
  if (s != XM_OK) std::fprintf(stderr, "error (%s): %s\n", xm_status_name(s), xm_last_error());
  return exit_code(s);
}

struct Options {
  std::string config_path;
  std::string seed;
  std::string out;
  std::string folds;
  std::vector<std::string> overrides;  // key=value
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string journal;
  std::string data;
  std::string timeouts = "exclude";
};

// Defaults, then the config file, then flags.
xm_status build_config(const Options& o, xm_config** out) {
  xm_status s = xm_config_new(out);
  if (s != XM_OK) return s;
  if (!o.config_path.empty() && (s = xm_config_load(*out, o.config_path.c_str())) != XM_OK) return s;
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "--set expects key=value, got %s\n", kv.c_str());
      return XM_INVALID_ARGUMENT;
    }
    s = xm_config_set(*out, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (s != XM_OK) return s;
  }
  if (!o.seed.empty() && (s = xm_config_set(*out, "seed", o.seed.c_str())) != XM_OK) return s;
  if (!o.out.empty() && (s = xm_config_set(*out, "out", o.out.c_str())) != XM_OK) return s;
  if (!o.folds.empty() && (s = xm_config_set(*out, "folds", o.folds.c_str())) != XM_OK) return s;
  return xm_config_validate(*out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crossmodal audio-visual localization pipeline"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--folds", o.folds, "leave-one-subject-out fold cap");
    sub->add_option("--set", o.overrides, "override a config key (key=value), repeatable");
  };

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"generate", "enumerate, render and preprocess the trial set"},
      {"pretrain", "pretrain the audio, face and body channels"},
      {"oracle", "calibrate the response oracle and generate behavioural data"},
      {"train", "leave-one-subject-out fusion training"},
      {"evaluate", "compare model and behavioural error rates"},
      {"analyze", "write CSV, summary and SVG reports"},
      {"pipeline", "run every stage"}};
  std::vector<CLI::App*> stage_cmds;
  for (const auto& [name, help] : stages) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub);
    stage_cmds.push_back(sub);
  }
  CLI::App* analyze = stage_cmds[5];
  analyze->add_option("--data", o.data, "analyze this response file instead of a pipeline run")
      ->check(CLI::ExistingFile);
  analyze->add_option("--timeouts", o.timeouts, "timeout policy for --data: exclude or error");

  CLI::App* serve = app.add_subcommand("serve", "run the human experiment service");
  common(serve);
  serve->add_option("--host", o.host, "bind address");
  serve->add_option("--port", o.port, "TCP port (0 picks a free one)");
  serve->add_option("--journal", o.journal, "session journal directory (default <out>/sessions)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (analyze->parsed() && !o.data.empty()) {
    const std::string out = o.out.empty() ? "." : o.out;
    return report(xm_analyze_file(o.data.c_str(), out.c_str(), o.timeouts.c_str()));
  }

  xm_config* cfg = nullptr;
  xm_status s = build_config(o, &cfg);
  if (s != XM_OK) {
    xm_config_free(cfg);
    return report(s);
  }

  if (serve->parsed()) {
    std::string journal = o.journal;
    if (journal.empty()) {
      size_t n = 0;
      xm_config_get(cfg, "out", nullptr, 0, &n);
      std::string out(n, '\0');
      xm_config_get(cfg, "out", out.data(), n, &n);
      out.resize(n - 1);
      journal = out + "/sessions";
    }
    s = xm_serve(cfg, o.host.c_str(), o.port, journal.c_str(), log_line, nullptr);
  } else {
    for (size_t i = 0; i < stage_cmds.size(); ++i) {
      if (stage_cmds[i]->parsed()) {
        s = xm_run_stage(cfg, stages[i].first.c_str(), log_line, nullptr);
        break;
      }
    }
  }
  xm_config_free(cfg);
  return report(s);
}
