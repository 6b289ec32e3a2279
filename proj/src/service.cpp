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

#include "xmodal/service.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>

#include "httplib.h"
#include "xmodal/error.hpp"
#include "xmodal/media_io.hpp"
#include "xmodal/render.hpp"

namespace xmodal {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ServiceReply reply(int status, json body) {
  ServiceReply r;
  r.status = status;
  r.body = std::move(body);
  return r;
}

ServiceReply error_reply(int status, const std::string& message) {
  return reply(status, {{"error", message}});
}

std::string new_token() {
  std::random_device rd;
  std::uniform_int_distribution<uint64_t> d;
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(d(rd)),
                static_cast<unsigned long long>(d(rd)));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Avatar positions and syllables fully determine the audio.
int audio_key(const TrialSpec& t) {
  const auto& perms = syllable_permutations();
  int p = 0;
  for (int i = 0; i < 6; ++i) {
    if (perms[i] == t.syllables) p = i;
  }
  return p * kAvatarCount + t.audio_pos.value();
}

}  // namespace

struct Session {
  std::mutex mu;
  std::string id;
  std::string label;
  uint64_t seed = 0;
  std::string created_at;
  std::vector<TrialSpec> schedule;
  int cursor = 0;
  bool served = false;  // the trial at `cursor` has been handed out
  std::vector<ResponseRecord> responses;
  std::optional<Strategy> strategy;
  fs::path journal;

  bool complete() const { return cursor == kSessionTrials && strategy.has_value(); }

  void append(const json& event) {
    if (journal.empty()) return;
    std::ofstream out(journal, std::ios::app | std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot append to journal " + journal.string());
    out << event.dump() << '\n';
    out.flush();
    if (!out) fail(ErrorCode::kIo, "cannot append to journal " + journal.string());
  }

  json summary() const {
    return {{"session_id", id},
            {"subject_label", label},
            {"seed", seed},
            {"trial_count", kSessionTrials},
            {"practice_trials", kPracticeTrials},
            {"cursor", cursor},
            {"answered", responses.size()},
            {"strategy", strategy ? json(std::string(to_string(*strategy))) : json(nullptr)},
            {"complete", complete()},
            {"created_at", created_at}};
  }
};

struct ExperimentService::Impl {
  ServiceOptions options;
  std::vector<TrialSpec> trials;
  std::vector<std::string> audio;  // WAV bytes by audio_key; immutable after construction
  mutable std::shared_mutex map_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  httplib::Server server;

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(map_mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  std::vector<TrialSpec> schedule(uint64_t seed) const {
    std::vector<TrialSpec> s = practice_block(seed);
    const auto main = session_schedule(trials, seed);
    s.insert(s.end(), main.begin(), main.end());
    return s;
  }

  std::shared_ptr<Session> make(const std::string& id, const std::string& label, uint64_t seed,
                                const std::string& created_at) {
    auto s = std::make_shared<Session>();
    s->id = id;
    s->label = label;
    s->seed = seed;
    s->created_at = created_at;
    s->schedule = schedule(seed);
    s->journal = options.journal_dir / (id + ".jsonl");
    return s;
  }

  // Applies one response to a session whose lock is held.
  void record(Session& s, int choice, int reaction_ms) {
    ResponseRecord r;
    r.subject_id = s.label;
    r.trial = s.schedule[s.cursor];
    r.source = Source::kHuman;
    r.reaction_ms = reaction_ms;
    r.response = (choice == kTimeoutResponse || reaction_ms > kResponseWindowMs) ? kTimeoutResponse : choice;
    s.responses.push_back(std::move(r));
    ++s.cursor;
    s.served = false;
  }

  void replay(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::string line;
    std::shared_ptr<Session> s;
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
      if (!line.empty()) lines.push_back(line);
    }
    for (size_t i = 0; i < lines.size(); ++i) {
      json e;
      try {
        e = json::parse(lines[i]);
      } catch (const json::exception&) {
        // A torn final line from an interrupted write is dropped.
        if (i + 1 == lines.size()) break;
        fail(ErrorCode::kFormat, "corrupt journal " + file.string());
      }
      try {
        const std::string ev = e.at("event").get<std::string>();
        if (ev == "create") {
          s = make(e.at("session_id").get<std::string>(), e.at("subject_label").get<std::string>(),
                   e.at("seed").get<uint64_t>(), e.at("created_at").get<std::string>());
        } else if (!s) {
          fail(ErrorCode::kFormat, "journal " + file.string() + " does not start with a create event");
        } else if (ev == "serve") {
          s->served = true;
        } else if (ev == "response") {
          require(s->served && e.at("trial").get<int>() == s->cursor, "journal response out of order",
                  ErrorCode::kFormat);
          record(*s, e.at("choice").get<int>(), e.at("reaction_ms").get<int>());
        } else if (ev == "strategy") {
          s->strategy = parse_strategy(e.at("strategy").get<std::string>());
        } else {
          fail(ErrorCode::kFormat, "unknown journal event " + ev);
        }
      } catch (const json::exception& ex) {
        fail(ErrorCode::kFormat, "corrupt journal " + file.string() + ": " + ex.what());
      }
    }
    if (s) sessions[s->id] = s;
  }
};

ExperimentService::ExperimentService(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.options = std::move(options);
  m.trials = enumerate_trials(m.options.trial_seed, m.options.replication);
  m.audio.resize(6 * kAvatarCount);
  for (int p = 0; p < 6; ++p) {
    const auto mono = synth_syllables(syllable_permutations()[p]);
    for (int a = 0; a < kAvatarCount; ++a) {
      m.audio[p * kAvatarCount + a] = encode_wav(binauralize(mono, AvatarIndex(a).azimuth_deg()));
    }
  }
  if (!m.options.journal_dir.empty()) {
    fs::create_directories(m.options.journal_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(m.options.journal_dir)) {
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) m.replay(f);
  }

  auto send = [](httplib::Response& res, const ServiceReply& r) {
    res.status = r.status;
    if (!r.raw.empty()) {
      res.set_content(r.raw, r.content_type);
    } else {
      res.set_content(r.body.dump(), "application/json");
    }
  };
  auto guard = [send](httplib::Response& res, auto&& fn) {
    try {
      send(res, fn());
    } catch (const Error& e) {
      send(res, error_reply(e.code() == ErrorCode::kIo ? 500 : 400, e.what()));
    } catch (const std::exception& e) {
      send(res, error_reply(500, e.what()));
    }
  };
  auto index_of = [](const httplib::Request& req) {
    const std::string& s = req.path_params.at("n");
    int n = -1;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || ptr != s.data() + s.size()) return -1;
    return n;
  };

  auto& svr = m.server;
  svr.Post("/api/session", [this, guard](const httplib::Request& req, httplib::Response& res) {
    guard(res, [&] { return create_session(req.body); });
  });
  svr.Get("/api/session/:id", [this, guard](const httplib::Request& req, httplib::Response& res) {
    guard(res, [&] { return session_summary(req.path_params.at("id")); });
  });
  svr.Get("/api/session/:id/trial/:n", [this, guard, index_of](const httplib::Request& req, httplib::Response& res) {
    guard(res, [&] { return trial(req.path_params.at("id"), index_of(req)); });
  });
  svr.Get("/api/session/:id/trial/:n/audio.wav",
          [this, guard, index_of](const httplib::Request& req, httplib::Response& res) {
            guard(res, [&] { return trial_audio(req.path_params.at("id"), index_of(req)); });
          });
  svr.Post("/api/session/:id/response", [this, guard](const httplib::Request& req, httplib::Response& res) {
    guard(res, [&] { return respond(req.path_params.at("id"), req.body); });
  });
  svr.Post("/api/session/:id/strategy", [this, guard](const httplib::Request& req, httplib::Response& res) {
    guard(res, [&] { return set_strategy(req.path_params.at("id"), req.body); });
  });
  svr.Get("/api/session/:id/export", [this, guard](const httplib::Request& req, httplib::Response& res) {
    guard(res, [&] { return export_session(req.path_params.at("id")); });
  });
  svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  const std::string origin = m.options.cors_origin;
  svr.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

ExperimentService::~ExperimentService() { stop(); }

size_t ExperimentService::session_count() const {
  std::shared_lock lock(impl_->map_mu);
  return impl_->sessions.size();
}

ServiceReply ExperimentService::create_session(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    return error_reply(400, "body is not valid JSON");
  }
  if (!j.is_object() || !j.contains("subject_label") || !j["subject_label"].is_string() ||
      j["subject_label"].get<std::string>().empty()) {
    return error_reply(400, "subject_label (nonempty string) is required");
  }
  uint64_t seed = 0;
  if (j.contains("seed") && !j["seed"].is_null()) {
    if (!j["seed"].is_number_unsigned()) return error_reply(400, "seed must be a nonnegative integer");
    seed = j["seed"].get<uint64_t>();
  } else {
    std::random_device rd;
    seed = (uint64_t(rd()) << 32) | rd();
  }
  Impl& m = *impl_;
  auto s = m.make(new_token(), j["subject_label"].get<std::string>(), seed, utc_now());
  s->append({{"event", "create"},
             {"session_id", s->id},
             {"subject_label", s->label},
             {"seed", s->seed},
             {"created_at", s->created_at}});
  json summary = s->summary();
  {
    std::unique_lock lock(m.map_mu);
    m.sessions[s->id] = s;
  }
  return reply(201, summary);
}

ServiceReply ExperimentService::session_summary(const std::string& id) {
  auto s = impl_->find(id);
  if (!s) return error_reply(404, "unknown session");
  std::lock_guard lock(s->mu);
  return reply(200, s->summary());
}

ServiceReply ExperimentService::trial(const std::string& id, int n) {
  auto s = impl_->find(id);
  if (!s) return error_reply(404, "unknown session");
  std::lock_guard lock(s->mu);
  if (n < 0 || n >= kSessionTrials) return error_reply(404, "trial index outside the session");
  if (n != s->cursor) {
    return error_reply(409, "trials are served in order; next is " + std::to_string(s->cursor));
  }
  if (!s->served) {
    s->append({{"event", "serve"}, {"trial", n}});
    s->served = true;
  }
  const TrialSpec& t = s->schedule[n];
  json avatars = json::array();
  for (int a = 0; a < kAvatarCount; ++a) {
    const bool lips = t.lips_pos && t.lips_pos->value() == a;
    const bool arm = t.arm_pos && t.arm_pos->value() == a;
    avatars.push_back({{"position", a},
                       {"azimuth_deg", AvatarIndex(a).azimuth_deg()},
                       {"lips_animated", lips},
                       {"arm_animated", arm}});
  }
  json p = {{"index", n},
            {"practice", t.practice()},
            {"session", t.session},
            {"trial_id", t.trial_id},
            {"condition", std::string(to_string(t.condition))},
            {"timing",
             {{"fixation_ms", kFixationMs},
              {"stimulus_ms", kStimulusMs},
              {"post_ms", kPostStimulusMs},
              {"response_window_ms", kResponseWindowMs}}},
            {"animation", {{"cycles", kAnimationCycles}, {"duration_ms", kStimulusMs}}},
            {"avatars", avatars},
            {"audio_url", "/api/session/" + id + "/trial/" + std::to_string(n) + "/audio.wav"}};
  return reply(200, p);
}

ServiceReply ExperimentService::trial_audio(const std::string& id, int n) {
  auto s = impl_->find(id);
  if (!s) return error_reply(404, "unknown session");
  std::lock_guard lock(s->mu);
  if (n < 0 || n >= kSessionTrials) return error_reply(404, "trial index outside the session");
  if (n > s->cursor || (n == s->cursor && !s->served)) return error_reply(409, "trial not served yet");
  ServiceReply r;
  r.raw = impl_->audio[audio_key(s->schedule[n])];
  r.content_type = "audio/wav";
  return r;
}

ServiceReply ExperimentService::respond(const std::string& id, std::string_view body) {
  auto s = impl_->find(id);
  if (!s) return error_reply(404, "unknown session");
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    return error_reply(400, "body is not valid JSON");
  }
  if (!j.is_object() || !j.contains("trial") || !j.contains("choice") || !j.contains("reaction_ms")) {
    return error_reply(400, "trial, choice and reaction_ms are required");
  }
  if (!j["trial"].is_number_integer()) return error_reply(400, "trial must be an integer");
  if (!j["choice"].is_number_integer()) return error_reply(422, "choice must be an integer 0-3 or -1");
  if (!j["reaction_ms"].is_number_integer()) return error_reply(422, "reaction_ms must be an integer");
  const int n = j["trial"].get<int>();
  const int choice = j["choice"].get<int>();
  const int reaction = j["reaction_ms"].get<int>();
  if (choice != kTimeoutResponse && (choice < 0 || choice >= kAvatarCount)) {
    return error_reply(422, "choice must be 0-3 or -1 (timeout)");
  }
  if (reaction < 0) return error_reply(422, "reaction_ms must be nonnegative");
  std::lock_guard lock(s->mu);
  if (n < s->cursor) return error_reply(409, "trial already answered");
  if (n != s->cursor || !s->served) return error_reply(409, "trial has not been presented");
  s->append({{"event", "response"}, {"trial", n}, {"choice", choice}, {"reaction_ms", reaction}});
  impl_->record(*s, choice, reaction);
  const ResponseRecord& r = s->responses.back();
  return reply(200, {{"cursor", s->cursor},
                     {"recorded", r.timed_out() ? json("timeout") : json(r.response)},
                     {"practice", r.trial.practice()}});
}

ServiceReply ExperimentService::set_strategy(const std::string& id, std::string_view body) {
  auto s = impl_->find(id);
  if (!s) return error_reply(404, "unknown session");
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    return error_reply(400, "body is not valid JSON");
  }
  if (!j.is_object() || !j.contains("strategy") || !j["strategy"].is_string()) {
    return error_reply(400, "strategy (string) is required");
  }
  Strategy st;
  try {
    st = parse_strategy(j["strategy"].get<std::string>());
  } catch (const Error&) {
    return error_reply(422, "strategy must be auditory, visual or mixed");
  }
  std::lock_guard lock(s->mu);
  if (s->cursor < kSessionTrials) return error_reply(409, "strategy is asked after the last trial");
  if (s->strategy) return error_reply(409, "strategy already recorded");
  s->append({{"event", "strategy"}, {"strategy", std::string(to_string(st))}});
  s->strategy = st;
  return reply(200, s->summary());
}

ServiceReply ExperimentService::export_session(const std::string& id) {
  auto s = impl_->find(id);
  if (!s) return error_reply(404, "unknown session");
  std::lock_guard lock(s->mu);
  if (!s->complete()) return error_reply(409, "session incomplete");
  BehavioralDataset d;
  d.header = {{"source", "human"},
              {"session_id", s->id},
              {"subject_label", s->label},
              {"seed", s->seed},
              {"trial_seed", impl_->options.trial_seed},
              {"replication", impl_->options.replication}};
  for (const auto& r : s->responses) {
    if (r.trial.practice()) continue;
    ResponseRecord out = r;
    out.strategy = s->strategy;
    d.records.push_back(std::move(out));
  }
  ServiceReply r;
  r.raw = encode_dataset(d);
  r.content_type = "application/x-ndjson";
  return r;
}

int ExperimentService::bind(const std::string& host, int port) {
  Impl& m = *impl_;
  if (port == 0) {
    const int p = m.server.bind_to_any_port(host);
    require(p > 0, "cannot bind " + host, ErrorCode::kIo);
    return p;
  }
  require(m.server.bind_to_port(host, port), "cannot bind " + host + ":" + std::to_string(port), ErrorCode::kIo);
  return port;
}

void ExperimentService::listen() { impl_->server.listen_after_bind(); }

void ExperimentService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace xmodal
