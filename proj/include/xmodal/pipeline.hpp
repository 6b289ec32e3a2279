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
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "xmodal/config.hpp"

namespace xmodal {

enum class Stage { kGenerate, kPretrain, kOracle, kTrain, kEvaluate, kAnalyze };
inline constexpr int kStageCount = 6;
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

struct StageRecord {
  bool complete = false;
  bool skipped = false;  // outputs were already valid for this key
  std::string key;       // hash of the stage inputs
  double seconds = 0.0;
  int rewritten = 0;     // artifacts whose bytes changed on disk
  std::map<std::string, std::string> artifacts;  // relative path -> content hash
};

struct RunManifest {
  std::string config_hash;
  std::string config_text;
  std::array<StageRecord, kStageCount> stages;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  const StageRecord& stage(Stage s) const { return stages[static_cast<int>(s)]; }
};

// Artifact layout under the output directory:
//   trials.jsonl                     trial manifest
//   stimuli/trial_NNNNN.wav          binaural audio of each trial
//   inputs/trial_NNNNN.xmi           preprocessed network inputs
//   checkpoints/<channel>.graph.xmck and <channel>.head.xmck
//   pretrain.json                    accuracies and loss curves
//   oracle_params.json               fitted parameters and residuals
//   responses.jsonl                  behavioural data (oracle or human)
//   folds.json                       per-fold training summary
//   model_responses.jsonl            held-out model answers
//   evaluation.json                  model versus behavioural data
//   reports/                         CSV tables, summary.txt, SVG chart
//   run_manifest.json
using LogFn = std::function<void(std::string_view)>;

class Pipeline {
 public:
  explicit Pipeline(RunConfig config, LogFn log = {});

  // Runs `stage` after its prerequisites. A stage whose key and artifacts
  // match the manifest on disk is skipped. Failures are rethrown with the
  // stage name prefixed to the message and the original error code.
  const RunManifest& run(Stage stage);
  const RunManifest& run_all() { return run(Stage::kAnalyze); }

  const RunManifest& manifest() const { return manifest_; }
  const RunConfig& config() const { return config_; }
  std::filesystem::path path(std::string_view relative) const;

 private:
  struct Writer;
  void run_stage(Stage s);
  std::string stage_key(Stage s) const;
  bool up_to_date(Stage s, const std::string& key) const;
  void save_manifest() const;
  void log(const std::string& msg) const;

  void generate(Writer& w);
  void pretrain(Writer& w);
  void oracle(Writer& w);
  void train(Writer& w);
  void evaluate(Writer& w);
  void analyze(Writer& w);

  RunConfig config_;
  LogFn log_;
  RunManifest manifest_;
};

// Stand-alone analysis of a response file into CSV/summary/SVG reports.
// Returns the number of report files written.
int analyze_dataset(const std::filesystem::path& dataset, const std::filesystem::path& out_dir,
                    TimeoutPolicy policy = TimeoutPolicy::kExclude);

}  // namespace xmodal
