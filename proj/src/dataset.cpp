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

#include "xmodal/dataset.hpp"

#include <cstdio>
#include <set>

#include "xmodal/error.hpp"

namespace xmodal {

using nlohmann::json;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::kHuman: return "human";
    case Source::kOracle: return "oracle";
    case Source::kModel: return "model";
  }
  return "?";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kAuditory: return "auditory";
    case Strategy::kVisual: return "visual";
    case Strategy::kMixed: return "mixed";
  }
  return "?";
}

Source parse_source(std::string_view s) {
  if (s == "human") return Source::kHuman;
  if (s == "oracle") return Source::kOracle;
  if (s == "model") return Source::kModel;
  fail(ErrorCode::kFormat, "unknown response source '" + std::string(s) + "'");
}

Strategy parse_strategy(std::string_view s) {
  if (s == "auditory") return Strategy::kAuditory;
  if (s == "visual") return Strategy::kVisual;
  if (s == "mixed") return Strategy::kMixed;
  fail(ErrorCode::kInvalidArgument, "unknown strategy '" + std::string(s) + "'");
}

void ResponseRecord::validate() const {
  require(!subject_id.empty(), "record has an empty subject id");
  trial.validate();
  require(response == kTimeoutResponse || (response >= 0 && response < kAvatarCount),
          "response must be an avatar index or the timeout marker");
  require(reaction_ms >= 0, "reaction time must be nonnegative");
  if (probs) {
    double sum = 0.0;
    for (double p : *probs) {
      require(p >= 0.0 && p <= 1.0, "response probability outside [0, 1]");
      sum += p;
    }
    require(std::abs(sum - 1.0) < 1e-6, "response probabilities do not sum to 1");
  }
}

std::vector<std::string> BehavioralDataset::subjects() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.subject_id).second) out.push_back(r.subject_id);
  }
  return out;
}

json record_to_json(const ResponseRecord& r) {
  json j = trial_to_json(r.trial);
  j["subject_id"] = r.subject_id;
  j["response"] = r.response;
  j["reaction_ms"] = r.reaction_ms;
  j["source"] = to_string(r.source);
  j["strategy"] = r.strategy ? json(to_string(*r.strategy)) : json(nullptr);
  if (r.probs) j["probs"] = *r.probs;
  return j;
}

ResponseRecord record_from_json(const json& j) {
  try {
    ResponseRecord r;
    r.trial = trial_from_json(j);
    r.subject_id = j.at("subject_id").get<std::string>();
    r.response = j.at("response").get<int>();
    r.reaction_ms = j.at("reaction_ms").get<int>();
    r.source = parse_source(j.at("source").get<std::string>());
    if (j.contains("strategy") && !j.at("strategy").is_null()) {
      r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    }
    if (j.contains("probs")) r.probs = j.at("probs").get<std::array<double, kAvatarCount>>();
    r.validate();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed response record: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("invalid response record: ") + e.what());
  }
}

std::string encode_dataset(const BehavioralDataset& d) {
  json header = d.header;
  header["format"] = "xmodal-responses";
  header["version"] = 1;
  header["records"] = d.records.size();
  std::string out = header.dump() + "\n";
  for (const auto& r : d.records) out += record_to_json(r).dump() + "\n";
  return out;
}

BehavioralDataset decode_dataset(std::string_view text) {
  BehavioralDataset d;
  size_t pos = 0;
  size_t line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line == "\r") continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      require(j.is_object() && j.value("format", "") == "xmodal-responses",
              "missing response dataset header", ErrorCode::kFormat);
      require(j.value("version", 0) == 1, "unsupported dataset version", ErrorCode::kFormat);
      d.header = j;
      have_header = true;
      continue;
    }
    d.records.push_back(record_from_json(j));
  }
  require(have_header, "empty response dataset", ErrorCode::kFormat);
  if (d.header.contains("records")) {
    require(d.header["records"].get<size_t>() == d.records.size(),
            "record count does not match the header", ErrorCode::kFormat);
  }
  d.header.erase("format");
  d.header.erase("version");
  d.header.erase("records");
  return d;
}

std::vector<ResponseRecord> scored_records(std::span<const ResponseRecord> records) {
  std::vector<ResponseRecord> out;
  for (const auto& r : records) {
    if (!r.timed_out() && !r.trial.practice()) out.push_back(r);
  }
  return out;
}

std::string subject_label(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02d", index + 1);
  return buf;
}

}  // namespace xmodal
