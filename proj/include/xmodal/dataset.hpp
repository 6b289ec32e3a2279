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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xmodal/trials.hpp"

namespace xmodal {

enum class Source { kHuman, kOracle, kModel };
enum class Strategy { kAuditory, kVisual, kMixed };
inline constexpr int kStrategyCount = 3;

std::string_view to_string(Source s);
std::string_view to_string(Strategy s);
Source parse_source(std::string_view s);
Strategy parse_strategy(std::string_view s);

inline constexpr int kTimeoutResponse = -1;
inline constexpr int kResponseWindowMs = 2000;

// One answer of one subject to one trial.
struct ResponseRecord {
  std::string subject_id;
  TrialSpec trial;
  int response = kTimeoutResponse;  // avatar 0..3, or kTimeoutResponse
  int reaction_ms = 0;
  Source source = Source::kOracle;
  std::optional<Strategy> strategy;
  std::optional<std::array<double, kAvatarCount>> probs;  // model output, when available

  bool timed_out() const { return response == kTimeoutResponse; }
  bool correct() const { return response == trial.audio_pos.value(); }
  void validate() const;
  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

// Line-delimited JSON: a header object, then one record per line. The
// header carries provenance (source, seed, parameter hash, targets) as free
// JSON so that oracle, model and human files share one reader.
struct BehavioralDataset {
  nlohmann::json header = nlohmann::json::object();
  std::vector<ResponseRecord> records;

  // Subject ids in order of first appearance.
  std::vector<std::string> subjects() const;
};

nlohmann::json record_to_json(const ResponseRecord& r);
ResponseRecord record_from_json(const nlohmann::json& j);

std::string encode_dataset(const BehavioralDataset& d);
BehavioralDataset decode_dataset(std::string_view text);

// Records with no timeouts and no practice trials.
std::vector<ResponseRecord> scored_records(std::span<const ResponseRecord> records);

// Conventional subject label, "S01" .. "S33".
std::string subject_label(int index);

}  // namespace xmodal
