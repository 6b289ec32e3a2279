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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "xmodal/analysis.hpp"
#include "xmodal/dsp.hpp"
#include "xmodal/oracle.hpp"

namespace xmodal {

// Run configuration. Text form is one `key = value` per line; `#` starts a
// comment. Precedence: built-in defaults, then the config file, then
// command-line flags.
//
//   seed                 master seed (default 1)
//   sample_rate          audio rate in Hz; the network input fixes it at 16000
//   replication          syllable orderings per spatial combination, 1 or 2
//   descriptor           mel26 or linear26
//   target.<category>    congruent, central, lateral, one_gap, two_gap
//   target.<strategy>    auditory, visual, mixed (error rates)
//   subjects.<strategy>  subjects per strategy (default 14 / 9 / 10)
//   pretrain.trials      synthetic trials for unisensory pretraining
//   pretrain.epochs      epoch cap per channel
//   pretrain.batch
//   pretrain.patience
//   fusion.epochs
//   fusion.batch
//   learning_rate        Adam step size for both stages
//   dropout
//   folds                leave-one-subject-out fold cap
//   timeouts             exclude or error
//   human_data           optional response file used instead of the oracle
//   out                  output directory
struct RunConfig {
  uint64_t seed = 1;
  int sample_rate = kDefaultSampleRate;
  int replication = 2;
  Descriptor descriptor = Descriptor::kMel26;
  OracleTargets targets;
  int pretrain_trials = 1000;
  int pretrain_epochs = 30;
  int pretrain_batch = 16;
  int pretrain_patience = 3;
  int fusion_epochs = 20;
  int fusion_batch = 32;
  double learning_rate = 1e-3;
  double dropout = 0.5;
  int folds = 33;
  TimeoutPolicy timeouts = TimeoutPolicy::kExclude;
  std::string human_data;
  std::string out = "xmodal-run";

  // Throws kInvalidArgument on non-positive numbers, a fold cap above the
  // subject count, or an unsupported sample rate.
  void validate() const;
  // Sets one key from its text form.
  void set(std::string_view key, std::string_view value);
  // Canonical text of one key's value.
  std::string get(std::string_view key) const;
  // Every key in a fixed order, values in canonical text form.
  std::string to_text() const;
  // Hash of to_text(); changes iff some field changes.
  std::string hash() const;
};

RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace xmodal
