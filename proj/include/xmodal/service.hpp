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
#include <memory>
#include <string>

#include "json.hpp"
#include "xmodal/dataset.hpp"

namespace xmodal {

inline constexpr int kFixationMs = 500;
inline constexpr int kPostStimulusMs = 1000;
// 12 practice trials plus 3 sessions of 200.
inline constexpr int kSessionTrials = kPracticeTrials + kSessionCount * kTrialsPerSession;

struct ServiceOptions {
  // Seed and replication of the trial set; match the pipeline configuration
  // so that exported records line up with the generated trials.
  uint64_t trial_seed = 1;
  int replication = 2;
  // One append-only journal per session; replayed at startup.
  std::filesystem::path journal_dir = "sessions";
  std::string cors_origin = "*";
};

// Reply of one endpoint: status, JSON body or raw bytes with a content type.
struct ServiceReply {
  int status = 200;
  nlohmann::json body;
  std::string raw;
  std::string content_type = "application/json";
};

// Human experiment runner behind the HTTP endpoints:
//   POST /api/session                      {subject_label, seed?}
//   GET  /api/session/{id}                 progress summary
//   GET  /api/session/{id}/trial/{n}       trial payload, n == cursor only
//   GET  /api/session/{id}/trial/{n}/audio.wav
//   POST /api/session/{id}/response        {trial, choice, reaction_ms}
//   POST /api/session/{id}/strategy        {strategy}, after the last trial
//   GET  /api/session/{id}/export          line-delimited response records
// The handlers are callable directly; serve() wraps them in HTTP.
class ExperimentService {
 public:
  explicit ExperimentService(ServiceOptions options = {});
  ~ExperimentService();
  ExperimentService(const ExperimentService&) = delete;
  ExperimentService& operator=(const ExperimentService&) = delete;

  ServiceReply create_session(std::string_view body);
  ServiceReply session_summary(const std::string& id);
  ServiceReply trial(const std::string& id, int n);
  ServiceReply trial_audio(const std::string& id, int n);
  ServiceReply respond(const std::string& id, std::string_view body);
  ServiceReply set_strategy(const std::string& id, std::string_view body);
  ServiceReply export_session(const std::string& id);

  size_t session_count() const;

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace xmodal
