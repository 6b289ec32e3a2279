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

#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "test_util.hpp"
#include "xmodal/error.hpp"
#include "xmodal/media_io.hpp"
#include "xmodal/service.hpp"

namespace xmodal {
namespace {

using nlohmann::json;

ServiceOptions Options(const testing::TempDir& dir) {
  ServiceOptions o;
  o.trial_seed = 1;
  o.journal_dir = dir.path();
  return o;
}

std::string Create(ExperimentService& svc, const std::string& label = "P01", uint64_t seed = 42) {
  const auto r = svc.create_session(json{{"subject_label", label}, {"seed", seed}}.dump());
  EXPECT_EQ(r.status, 201);
  return r.body.at("session_id").get<std::string>();
}

// Serves and answers trials [from, to); every fifth answer is the audio avatar.
void Answer(ExperimentService& svc, const std::string& id, int from, int to) {
  for (int n = from; n < to; ++n) {
    ASSERT_EQ(svc.trial(id, n).status, 200) << n;
    const auto r = svc.respond(id, json{{"trial", n}, {"choice", n % 4}, {"reaction_ms", 400 + n}}.dump());
    ASSERT_EQ(r.status, 200) << n;
  }
}

TEST(ServiceTest, CreateAndSummarize) {
  testing::TempDir dir;
  ExperimentService svc(Options(dir));
  const auto r = svc.create_session(R"({"subject_label": "P01", "seed": 7})");
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(r.body["trial_count"], 612);
  EXPECT_EQ(r.body["practice_trials"], 12);
  EXPECT_EQ(r.body["cursor"], 0);
  EXPECT_EQ(r.body["complete"], false);
  const std::string id = r.body["session_id"];
  EXPECT_EQ(svc.session_summary(id).status, 200);
  EXPECT_EQ(svc.session_summary("nope").status, 404);
  EXPECT_EQ(svc.create_session("{").status, 400);
  EXPECT_EQ(svc.create_session(R"({"seed": 3})").status, 400);
  EXPECT_EQ(svc.create_session(R"({"subject_label": ""})").status, 400);
  EXPECT_EQ(svc.create_session(R"({"subject_label": "x", "seed": -1})").status, 400);
  EXPECT_EQ(svc.session_count(), 1u);
}

TEST(ServiceTest, TrialsAreServedInOrder) {
  testing::TempDir dir;
  ExperimentService svc(Options(dir));
  const std::string id = Create(svc);
  EXPECT_EQ(svc.trial(id, 1).status, 409);
  EXPECT_EQ(svc.trial(id, 612).status, 404);
  EXPECT_EQ(svc.trial(id, -1).status, 404);
  EXPECT_EQ(svc.trial("nope", 0).status, 404);
  EXPECT_EQ(svc.trial_audio(id, 0).status, 409);
  EXPECT_EQ(svc.respond(id, R"({"trial": 0, "choice": 1, "reaction_ms": 300})").status, 409);

  const auto t0 = svc.trial(id, 0);
  ASSERT_EQ(t0.status, 200);
  EXPECT_EQ(t0.body["practice"], true);
  EXPECT_EQ(t0.body["avatars"].size(), 4u);
  EXPECT_EQ(t0.body["timing"]["response_window_ms"], 2000);
  EXPECT_EQ(svc.trial(id, 0).status, 200);  // re-fetch of the current trial

  const auto wav = svc.trial_audio(id, 0);
  EXPECT_EQ(wav.status, 200);
  EXPECT_EQ(wav.content_type, "audio/wav");
  EXPECT_EQ(decode_wav(wav.raw).size(), 16000u);

  EXPECT_EQ(svc.respond(id, R"({"trial": 0, "choice": 1, "reaction_ms": 300})").status, 200);
  EXPECT_EQ(svc.respond(id, R"({"trial": 0, "choice": 1, "reaction_ms": 300})").status, 409);
  EXPECT_EQ(svc.trial(id, 0).status, 409);
  EXPECT_EQ(svc.session_summary(id).body["cursor"], 1);
}

TEST(ServiceTest, ResponseValidation) {
  testing::TempDir dir;
  ExperimentService svc(Options(dir));
  const std::string id = Create(svc);
  ASSERT_EQ(svc.trial(id, 0).status, 200);
  EXPECT_EQ(svc.respond(id, "nope").status, 400);
  EXPECT_EQ(svc.respond(id, R"({"trial": 0, "choice": 1})").status, 400);
  EXPECT_EQ(svc.respond(id, R"({"trial": 0, "choice": 4, "reaction_ms": 10})").status, 422);
  EXPECT_EQ(svc.respond(id, R"({"trial": 0, "choice": "left", "reaction_ms": 10})").status, 422);
  EXPECT_EQ(svc.respond(id, R"({"trial": 0, "choice": 1, "reaction_ms": -5})").status, 422);
  EXPECT_EQ(svc.respond("nope", R"({"trial": 0, "choice": 1, "reaction_ms": 5})").status, 404);

  const auto late = svc.respond(id, R"({"trial": 0, "choice": 2, "reaction_ms": 2500})");
  EXPECT_EQ(late.status, 200);
  EXPECT_EQ(late.body["recorded"], "timeout");
  ASSERT_EQ(svc.trial(id, 1).status, 200);
  const auto none = svc.respond(id, R"({"trial": 1, "choice": -1, "reaction_ms": 2000})");
  EXPECT_EQ(none.body["recorded"], "timeout");
}

TEST(ServiceTest, FullSessionExport) {
  testing::TempDir dir;
  ExperimentService svc(Options(dir));
  const std::string id = Create(svc, "P07");
  Answer(svc, id, 0, 300);
  EXPECT_EQ(svc.export_session(id).status, 409);
  EXPECT_EQ(svc.set_strategy(id, R"({"strategy": "visual"})").status, 409);
  Answer(svc, id, 300, kSessionTrials);
  EXPECT_EQ(svc.export_session(id).status, 409);  // strategy still missing
  EXPECT_EQ(svc.set_strategy(id, R"({"strategy": "sideways"})").status, 422);
  EXPECT_EQ(svc.set_strategy(id, R"({"other": 1})").status, 400);
  EXPECT_EQ(svc.set_strategy(id, R"({"strategy": "mixed"})").status, 200);
  EXPECT_EQ(svc.set_strategy(id, R"({"strategy": "visual"})").status, 409);

  const auto ex = svc.export_session(id);
  ASSERT_EQ(ex.status, 200);
  const BehavioralDataset d = decode_dataset(ex.raw);
  EXPECT_EQ(d.header["source"], "human");
  ASSERT_EQ(d.records.size(), 600u);
  std::array<int, 4> per_session{};
  for (size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    EXPECT_EQ(r.subject_id, "P07");
    EXPECT_EQ(r.source, Source::kHuman);
    EXPECT_EQ(r.strategy, Strategy::kMixed);
    EXPECT_EQ(r.response, int(i + 12) % 4);
    EXPECT_EQ(r.reaction_ms, 400 + int(i) + 12);
    ++per_session[r.trial.session];
  }
  EXPECT_EQ(per_session, (std::array<int, 4>{0, 200, 200, 200}));
  EXPECT_EQ(decode_dataset(encode_dataset(d)).records, d.records);
  EXPECT_EQ(svc.session_summary(id).body["complete"], true);
}

TEST(ServiceTest, JournalReplayRestoresSessions) {
  testing::TempDir dir;
  std::string id, finished;
  std::string exported;
  {
    ExperimentService svc(Options(dir));
    id = Create(svc, "P02", 5);
    Answer(svc, id, 0, 40);
    ASSERT_EQ(svc.trial(id, 40).status, 200);  // served, not answered
    finished = Create(svc, "P03", 6);
    Answer(svc, finished, 0, kSessionTrials);
    ASSERT_EQ(svc.set_strategy(finished, R"({"strategy": "auditory"})").status, 200);
    exported = svc.export_session(finished).raw;
  }
  ExperimentService again(Options(dir));
  EXPECT_EQ(again.session_count(), 2u);
  const auto s = again.session_summary(id);
  EXPECT_EQ(s.body["cursor"], 40);
  EXPECT_EQ(s.body["subject_label"], "P02");
  EXPECT_EQ(again.respond(id, json{{"trial", 40}, {"choice", 0}, {"reaction_ms", 100}}.dump()).status, 200);
  EXPECT_EQ(again.export_session(finished).raw, exported);
}

TEST(ServiceTest, TornJournalTailIsDropped) {
  testing::TempDir dir;
  std::string id;
  {
    ExperimentService svc(Options(dir));
    id = Create(svc);
    Answer(svc, id, 0, 3);
  }
  write_file(dir / (id + ".jsonl"), read_file(dir / (id + ".jsonl")) + "{\"event\": \"resp");
  ExperimentService again(Options(dir));
  EXPECT_EQ(again.session_summary(id).body["cursor"], 3);

  write_file(dir / "broken.jsonl", "{\"event\": \"response\", \"trial\": 0}\n");
  try {
    ExperimentService bad(Options(dir));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(ServiceHttpTest, EndpointsOverHttp) {
  testing::TempDir dir;
  ExperimentService svc(Options(dir));
  const int port = svc.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread server([&] { svc.listen(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_connection_timeout(5);
  for (int i = 0; i < 100; ++i) {
    if (auto r = cli.Get("/api/session/none")) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  auto created = cli.Post("/api/session", R"({"subject_label": "H01", "seed": 9})", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string id = json::parse(created->body)["session_id"];
  const std::string base = "/api/session/" + id;

  EXPECT_EQ(cli.Get(base + "/trial/3")->status, 409);
  EXPECT_EQ(cli.Get(base + "/trial/abc")->status, 404);
  EXPECT_EQ(cli.Get("/api/session/unknown")->status, 404);
  auto t = cli.Get(base + "/trial/0");
  ASSERT_EQ(t->status, 200);
  EXPECT_EQ(json::parse(t->body)["index"], 0);
  auto wav = cli.Get(base + "/trial/0/audio.wav");
  ASSERT_EQ(wav->status, 200);
  EXPECT_EQ(wav->get_header_value("Content-Type"), "audio/wav");
  EXPECT_EQ(wav->body.substr(0, 4), "RIFF");
  EXPECT_EQ(cli.Post(base + "/response", R"({"trial": 0, "choice": 9, "reaction_ms": 1})", "application/json")->status,
            422);
  EXPECT_EQ(cli.Post(base + "/response", R"({"trial": 0, "choice": 2, "reaction_ms": 610})", "application/json")->status,
            200);
  EXPECT_EQ(cli.Get(base + "/export")->status, 409);
  auto opts = cli.Options(base + "/response");
  ASSERT_TRUE(opts);
  EXPECT_EQ(opts->status, 204);
  EXPECT_EQ(opts->get_header_value("Access-Control-Allow-Methods"), "GET, POST, OPTIONS");
  auto summary = cli.Get(base);
  EXPECT_EQ(json::parse(summary->body)["cursor"], 1);

  svc.stop();
  server.join();
}

}  // namespace
}  // namespace xmodal
