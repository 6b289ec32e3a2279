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

#include "xmodal/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "xmodal/error.hpp"
#include "xmodal/media_io.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {
namespace {

constexpr std::array<const char*, kCategoryCount> kCategoryKeys = {"congruent", "central", "lateral",
                                                                   "one_gap", "two_gap"};
constexpr std::array<const char*, kStrategyCount> kStrategyKeys = {"auditory", "visual", "mixed"};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && ptr == v.data() + v.size(),
          "config key " + std::string(key) + ": not a number: " + std::string(v));
  return out;
}

std::string number_text(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

void RunConfig::validate() const {
  require(seed > 0, "seed must be positive");
  require(sample_rate == kDefaultSampleRate,
          "sample_rate must be 16000: the 512 x 26 spectrogram input is defined at 16 kHz");
  require(replication == 1 || replication == 2, "replication must be 1 or 2");
  targets.validate();
  for (int n : targets.strategy_counts) require(n > 0, "subjects per strategy must be positive");
  require(pretrain_trials >= 10, "pretrain.trials must be at least 10");
  require(pretrain_epochs > 0 && pretrain_batch > 0 && pretrain_patience > 0,
          "pretrain epochs, batch and patience must be positive");
  require(fusion_epochs > 0 && fusion_batch > 0, "fusion epochs and batch must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(dropout > 0.0 && dropout < 1.0, "dropout must lie in (0, 1)");
  require(folds > 0, "folds must be positive");
  if (human_data.empty()) {
    require(folds <= targets.subjects(), "folds exceeds the subject count");
  }
  require(!out.empty(), "output directory must be set");
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string k(key);
  const std::string v(trim(value));
  auto real = [&] { return parse_number<double>(key, v); };
  auto integer = [&] { return parse_number<int>(key, v); };
  if (k == "seed") {
    seed = parse_number<uint64_t>(key, v);
  } else if (k == "sample_rate") {
    sample_rate = integer();
  } else if (k == "replication") {
    replication = integer();
  } else if (k == "descriptor") {
    descriptor = parse_descriptor(v);
  } else if (k == "pretrain.trials") {
    pretrain_trials = integer();
  } else if (k == "pretrain.epochs") {
    pretrain_epochs = integer();
  } else if (k == "pretrain.batch") {
    pretrain_batch = integer();
  } else if (k == "pretrain.patience") {
    pretrain_patience = integer();
  } else if (k == "fusion.epochs") {
    fusion_epochs = integer();
  } else if (k == "fusion.batch") {
    fusion_batch = integer();
  } else if (k == "learning_rate") {
    learning_rate = real();
  } else if (k == "dropout") {
    dropout = real();
  } else if (k == "folds") {
    folds = integer();
  } else if (k == "timeouts") {
    timeouts = parse_timeout_policy(v);
  } else if (k == "human_data") {
    human_data = v;
  } else if (k == "out") {
    out = v;
  } else {
    for (int i = 0; i < kCategoryCount; ++i) {
      if (k == std::string("target.") + kCategoryKeys[i]) {
        targets.category[i] = real();
        return;
      }
    }
    for (int i = 0; i < kStrategyCount; ++i) {
      if (k == std::string("target.") + kStrategyKeys[i]) {
        targets.strategy[i] = real();
        return;
      }
      if (k == std::string("subjects.") + kStrategyKeys[i]) {
        targets.strategy_counts[i] = integer();
        return;
      }
    }
    fail(ErrorCode::kInvalidArgument, "unknown config key: " + k);
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "seed = " << seed << "\n";
  os << "sample_rate = " << sample_rate << "\n";
  os << "replication = " << replication << "\n";
  os << "descriptor = " << to_string(descriptor) << "\n";
  for (int i = 0; i < kCategoryCount; ++i) {
    os << "target." << kCategoryKeys[i] << " = " << number_text(targets.category[i]) << "\n";
  }
  for (int i = 0; i < kStrategyCount; ++i) {
    os << "target." << kStrategyKeys[i] << " = " << number_text(targets.strategy[i]) << "\n";
  }
  for (int i = 0; i < kStrategyCount; ++i) {
    os << "subjects." << kStrategyKeys[i] << " = " << targets.strategy_counts[i] << "\n";
  }
  os << "pretrain.trials = " << pretrain_trials << "\n";
  os << "pretrain.epochs = " << pretrain_epochs << "\n";
  os << "pretrain.batch = " << pretrain_batch << "\n";
  os << "pretrain.patience = " << pretrain_patience << "\n";
  os << "fusion.epochs = " << fusion_epochs << "\n";
  os << "fusion.batch = " << fusion_batch << "\n";
  os << "learning_rate = " << number_text(learning_rate) << "\n";
  os << "dropout = " << number_text(dropout) << "\n";
  os << "folds = " << folds << "\n";
  os << "timeouts = " << to_string(timeouts) << "\n";
  os << "human_data = " << human_data << "\n";
  os << "out = " << out << "\n";
  return os.str();
}

std::string RunConfig::get(std::string_view key) const {
  const std::string text = to_text();
  const std::string prefix = std::string(key) + " = ";
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t nl = text.find('\n', pos);
    if (text.compare(pos, prefix.size(), prefix) == 0) {
      return text.substr(pos + prefix.size(), nl - pos - prefix.size());
    }
    pos = nl + 1;
  }
  fail(ErrorCode::kInvalidArgument, "unknown config key: " + std::string(key));
}

std::string RunConfig::hash() const {
  const std::string text = to_text();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
  return buf;
}

RunConfig parse_config(std::string_view text, RunConfig cfg) {
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos,
            "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    require(!key.empty(), "config line " + std::to_string(line_no) + ": empty key");
    cfg.set(key, line.substr(eq + 1));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  return parse_config(read_file(path), std::move(base));
}

}  // namespace xmodal
