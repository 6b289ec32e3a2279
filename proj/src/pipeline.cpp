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

#include "xmodal/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <unordered_map>

#include "xmodal/analysis.hpp"
#include "xmodal/checkpoint.hpp"
#include "xmodal/error.hpp"
#include "xmodal/media_io.hpp"
#include "xmodal/model.hpp"
#include "xmodal/oracle.hpp"
#include "xmodal/render.hpp"
#include "xmodal/report.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kStageCount> kStageNames = {"generate", "pretrain", "oracle",
                                                                   "train",    "evaluate", "analyze"};
constexpr std::array<Modality, 3> kModalities = {Modality::kAudio, Modality::kFace, Modality::kBody};

std::string hex_hash(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

std::string trial_file(const char* dir, int trial_id, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/trial_%05d.%s", dir, trial_id, ext);
  return buf;
}

std::string checkpoint_file(Modality m, const char* part) {
  return "checkpoints/" + std::string(to_string(m)) + "." + part + ".xmck";
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

bool same_trial(TrialSpec a, const TrialSpec& b) {
  a.session = b.session;
  return a == b;
}

// Fixed order of the ventriloquism ordering check.
bool bias_ordering_holds(const std::vector<BiasEntry>& b) {
  const double lips = b[0].proportion(), arm = b[1].proportion(), both = b[2].proportion(),
               lva = b[3].proportion();
  return both >= lips && lips > lva && lva > arm;
}

}  // namespace

std::string_view to_string(Stage s) { return kStageNames[static_cast<int>(s)]; }

Stage parse_stage(std::string_view s) {
  for (int i = 0; i < kStageCount; ++i) {
    if (kStageNames[i] == s) return static_cast<Stage>(i);
  }
  fail(ErrorCode::kInvalidArgument, "unknown stage: " + std::string(s));
}

json RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["config"] = config_text;
  json st = json::object();
  for (int i = 0; i < kStageCount; ++i) {
    const StageRecord& r = stages[i];
    st[std::string(kStageNames[i])] = {{"complete", r.complete}, {"skipped", r.skipped},
                                       {"key", r.key},           {"seconds", r.seconds},
                                       {"rewritten", r.rewritten}, {"artifacts", r.artifacts}};
  }
  j["stages"] = st;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  try {
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    const json& st = j.at("stages");
    for (int i = 0; i < kStageCount; ++i) {
      const std::string name(kStageNames[i]);
      if (!st.contains(name)) continue;
      const json& r = st.at(name);
      StageRecord& s = m.stages[i];
      s.complete = r.at("complete").get<bool>();
      s.skipped = r.at("skipped").get<bool>();
      s.key = r.at("key").get<std::string>();
      s.seconds = r.at("seconds").get<double>();
      s.rewritten = r.at("rewritten").get<int>();
      s.artifacts = r.at("artifacts").get<std::map<std::string, std::string>>();
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed run manifest: ") + e.what());
  }
}

struct Pipeline::Writer {
  const Pipeline& p;
  StageRecord& rec;

  void put(const std::string& rel, std::string_view bytes) {
    if (write_file_if_changed(p.path(rel), bytes)) ++rec.rewritten;
    rec.artifacts[rel] = hex_hash(bytes);
  }
};

Pipeline::Pipeline(RunConfig config, LogFn log) : config_(std::move(config)), log_(std::move(log)) {
  config_.validate();
  const fs::path mpath = path("run_manifest.json");
  if (fs::exists(mpath)) {
    try {
      manifest_ = RunManifest::from_json(json::parse(read_file(mpath)));
    } catch (const json::exception&) {
      manifest_ = RunManifest{};
    } catch (const Error&) {
      manifest_ = RunManifest{};
    }
  }
  manifest_.config_hash = config_.hash();
  manifest_.config_text = config_.to_text();
}

fs::path Pipeline::path(std::string_view rel) const { return fs::path(config_.out) / fs::path(rel); }

void Pipeline::log(const std::string& msg) const {
  if (log_) log_(msg);
}

std::string Pipeline::stage_key(Stage s) const {
  const RunConfig& c = config_;
  std::string k = std::string(to_string(s)) + "|v1|seed=" + std::to_string(c.seed);
  auto prior = [&](Stage p) { k += "|" + std::string(to_string(p)) + "=" + stage_key(p); };
  switch (s) {
    case Stage::kGenerate:
      k += "|rate=" + std::to_string(c.sample_rate) + "|rep=" + std::to_string(c.replication) +
           "|desc=" + std::string(to_string(c.descriptor));
      break;
    case Stage::kPretrain:
      k += "|rate=" + std::to_string(c.sample_rate) + "|desc=" + std::string(to_string(c.descriptor)) +
           "|n=" + std::to_string(c.pretrain_trials) + "|ep=" + std::to_string(c.pretrain_epochs) +
           "|b=" + std::to_string(c.pretrain_batch) + "|pat=" + std::to_string(c.pretrain_patience);
      {
        RunConfig probe;
        probe.learning_rate = c.learning_rate;
        probe.dropout = c.dropout;
        k += "|" + probe.hash();
      }
      break;
    case Stage::kOracle: {
      prior(Stage::kGenerate);
      RunConfig probe;
      probe.targets = c.targets;
      k += "|targets=" + probe.hash();
      if (!c.human_data.empty()) {
        k += "|human=" + hex_hash(read_file(c.human_data));
      }
      break;
    }
    case Stage::kTrain: {
      prior(Stage::kGenerate);
      prior(Stage::kPretrain);
      prior(Stage::kOracle);
      RunConfig probe;
      probe.learning_rate = c.learning_rate;
      probe.dropout = c.dropout;
      k += "|" + probe.hash() + "|fe=" + std::to_string(c.fusion_epochs) + "|fb=" +
           std::to_string(c.fusion_batch) + "|folds=" + std::to_string(c.folds);
      break;
    }
    case Stage::kEvaluate:
      prior(Stage::kTrain);
      k += "|timeouts=" + std::string(to_string(c.timeouts));
      break;
    case Stage::kAnalyze:
      prior(Stage::kEvaluate);
      break;
  }
  return hex_hash(k);
}

bool Pipeline::up_to_date(Stage s, const std::string& key) const {
  const StageRecord& r = manifest_.stage(s);
  if (!r.complete || r.key != key || r.artifacts.empty()) return false;
  for (const auto& [rel, hash] : r.artifacts) {
    const fs::path p = path(rel);
    if (!fs::exists(p)) return false;
    if (hex_hash(read_file(p)) != hash) return false;
  }
  return true;
}

void Pipeline::save_manifest() const {
  fs::create_directories(config_.out);
  write_file(path("run_manifest.json"), dump(manifest_.to_json()));
}

const RunManifest& Pipeline::run(Stage target) {
  for (int i = 0; i <= static_cast<int>(target); ++i) {
    run_stage(static_cast<Stage>(i));
  }
  return manifest_;
}

void Pipeline::run_stage(Stage s) {
  const std::string name(to_string(s));
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::string key = stage_key(s);
    StageRecord& rec = manifest_.stages[static_cast<int>(s)];
    if (up_to_date(s, key)) {
      rec.skipped = true;
      rec.rewritten = 0;
      rec.seconds = 0.0;
      log(name + ": up to date");
      save_manifest();
      return;
    }
    rec = StageRecord{};
    rec.key = key;
    fs::create_directories(config_.out);
    log(name + ": running");
    Writer w{*this, rec};
    switch (s) {
      case Stage::kGenerate: generate(w); break;
      case Stage::kPretrain: pretrain(w); break;
      case Stage::kOracle: oracle(w); break;
      case Stage::kTrain: train(w); break;
      case Stage::kEvaluate: evaluate(w); break;
      case Stage::kAnalyze: analyze(w); break;
    }
    rec.complete = true;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[96];
    std::snprintf(buf, sizeof buf, ": done in %.1f s, %d artifact(s) rewritten", rec.seconds, rec.rewritten);
    log(name + buf);
    save_manifest();
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + name + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIo, "stage " + name + ": " + e.what());
  } catch (const std::bad_alloc&) {
    throw Error(ErrorCode::kInternal, "stage " + name + ": out of memory");
  }
}

namespace {

std::vector<TrialSpec> load_trials(const Pipeline& p) {
  return trials_from_manifest(read_file(p.path("trials.jsonl")));
}

std::vector<ModelInput> load_inputs(const Pipeline& p, std::span<const TrialSpec> trials) {
  std::vector<ModelInput> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    out.push_back(decode_model_input(read_file(p.path(trial_file("inputs", t.trial_id, "xmi")))));
  }
  return out;
}

ChannelSet load_channels(const Pipeline& p) {
  auto load = [&](Modality m) {
    ChannelNet net{m, load_checkpoint(p.path(checkpoint_file(m, "graph"))),
                   load_checkpoint(p.path(checkpoint_file(m, "head"))), 0, true};
    require(net.graph.input_shape() == channel_input_shape(m),
            "checkpoint input shape does not match the " + std::string(to_string(m)) + " channel",
            ErrorCode::kShapeMismatch);
    net.feature_dim = static_cast<int>(shape_size(net.graph.output_shape()));
    return net;
  };
  return {load(Modality::kAudio), load(Modality::kFace), load(Modality::kBody)};
}

BehavioralDataset load_dataset(const fs::path& path) { return decode_dataset(read_file(path)); }

}  // namespace

void Pipeline::generate(Writer& w) {
  const auto trials = enumerate_trials(config_.seed, config_.replication);
  w.put("trials.jsonl", trials_to_manifest(trials));
  fs::create_directories(path("stimuli"));
  fs::create_directories(path("inputs"));
  for (const auto& t : trials) {
    const StimulusBundle b = render_bundle(t, 0.0, config_.sample_rate);
    w.put(trial_file("stimuli", t.trial_id, "wav"), encode_wav(b.audio));
    w.put(trial_file("inputs", t.trial_id, "xmi"), encode_model_input(preprocess(b, config_.descriptor)));
  }
  log("generate: " + std::to_string(trials.size()) + " trials");
}

void Pipeline::pretrain(Writer& w) {
  const auto trials = synthetic_trials(mix_seed(config_.seed, 0x9e7a1), config_.pretrain_trials);
  std::vector<ModelInput> inputs;
  inputs.reserve(trials.size());
  for (const auto& t : trials) {
    inputs.push_back(preprocess(render_bundle(t, 0.0, config_.sample_rate), config_.descriptor));
  }
  log("pretrain: rendered " + std::to_string(trials.size()) + " synthetic trials");
  fs::create_directories(path("checkpoints"));
  json summary = json::object();
  for (Modality m : kModalities) {
    ChannelNet net = build_channel(m, config_.seed, static_cast<float>(config_.dropout));
    std::vector<int> labels;
    for (const auto& t : trials) labels.push_back(channel_label(m, t));
    PretrainOptions o;
    o.max_epochs = config_.pretrain_epochs;
    o.batch_size = config_.pretrain_batch;
    o.learning_rate = config_.learning_rate;
    o.patience = config_.pretrain_patience;
    o.seed = mix_seed(config_.seed, static_cast<uint64_t>(m), 0x97e);
    const PretrainResult r = pretrain_channel(net, inputs, labels, o);
    char buf[128];
    std::snprintf(buf, sizeof buf, "pretrain: %s held-out accuracy %.3f after %d epoch(s)",
                  std::string(to_string(m)).c_str(), r.heldout_accuracy, r.epochs_run);
    log(buf);
    w.put(checkpoint_file(m, "graph"), encode_checkpoint(net.graph));
    w.put(checkpoint_file(m, "head"), encode_checkpoint(net.head));
    summary[std::string(to_string(m))] = {{"heldout_accuracy", r.heldout_accuracy},
                                          {"validation_accuracy", r.validation_accuracy},
                                          {"epochs_run", r.epochs_run},
                                          {"epoch_losses", r.epoch_losses},
                                          {"feature_dim", net.feature_dim}};
  }
  w.put("pretrain.json", dump(summary));
}

void Pipeline::oracle(Writer& w) {
  const auto trials = load_trials(*this);
  if (!config_.human_data.empty()) {
    BehavioralDataset d = load_dataset(config_.human_data);
    std::unordered_map<int, const TrialSpec*> by_id;
    for (const auto& t : trials) by_id[t.trial_id] = &t;
    for (const auto& r : d.records) {
      if (r.trial.practice()) continue;
      auto it = by_id.find(r.trial.trial_id);
      require(it != by_id.end() && same_trial(*it->second, r.trial),
              "human record for trial " + std::to_string(r.trial.trial_id) +
                  " does not match the generated trial set",
              ErrorCode::kFormat);
    }
    const auto subjects = d.subjects();
    require(subjects.size() >= 2, "human data needs at least two subjects", ErrorCode::kFormat);
    require(size_t(config_.folds) <= subjects.size(), "folds exceeds the number of human subjects");
    w.put("responses.jsonl", encode_dataset(d));
    log("oracle: using " + std::to_string(subjects.size()) + " human subjects");
    return;
  }
  const CalibrationResult cal = calibrate(config_.targets, trials, mix_seed(config_.seed, 0xca1));
  json j;
  j["params"] = params_to_json(cal.params);
  j["params_hash"] = params_hash(cal.params);
  j["analytic_residuals"] = cal.analytic_residuals;
  j["simulated_residuals"] = cal.simulated_residuals;
  j["iterations"] = cal.iterations;
  j["converged"] = cal.converged;
  w.put("oracle_params.json", dump(j));
  const BehavioralDataset d = generate_dataset(cal.params, config_.targets, trials, mix_seed(config_.seed, 0xda7a));
  w.put("responses.jsonl", encode_dataset(d));
  double worst = 0.0;
  for (double r : cal.simulated_residuals) worst = std::max(worst, std::abs(r));
  char buf[128];
  std::snprintf(buf, sizeof buf, "oracle: calibrated in %d sweep(s), max simulated residual %.4f, %zu records",
                cal.iterations, worst, d.records.size());
  log(buf);
}

void Pipeline::train(Writer& w) {
  const auto trials = load_trials(*this);
  ChannelSet channels = load_channels(*this);
  FeatureTable table;
  {
    const auto inputs = load_inputs(*this, trials);
    table = feature_table(channels, trials, inputs);
  }
  log("train: fused features " + std::to_string(table.rows()) + " x " + std::to_string(table.dim));
  const BehavioralDataset data = load_dataset(path("responses.jsonl"));
  require(size_t(config_.folds) <= data.subjects().size(), "folds exceeds the number of subjects");

  LoocvOptions o;
  o.dropout_rate = static_cast<float>(config_.dropout);
  o.fusion.epochs = config_.fusion_epochs;
  o.fusion.batch_size = config_.fusion_batch;
  o.fusion.learning_rate = config_.learning_rate;
  o.fusion.seed = mix_seed(config_.seed, 0xf0);
  o.folds = config_.folds;
  const auto folds = loocv(data, table, o);

  BehavioralDataset model;
  model.header = {{"source", "model"},
                  {"seed", config_.seed},
                  {"folds", config_.folds},
                  {"behaviour_source", data.header.value("source", "unknown")}};
  json fj = json::array();
  for (const auto& f : folds) {
    fj.push_back({{"subject_id", f.subject_id}, {"training_records", f.training_records}, {"losses", f.losses}});
    model.records.insert(model.records.end(), f.responses.begin(), f.responses.end());
    char buf[128];
    std::snprintf(buf, sizeof buf, "train: fold %s loss %.4f -> %.4f", f.subject_id.c_str(),
                  f.losses.empty() ? 0.0 : f.losses.front(), f.losses.empty() ? 0.0 : f.losses.back());
    log(buf);
  }
  w.put("folds.json", dump(fj));
  w.put("model_responses.jsonl", encode_dataset(model));
}

void Pipeline::evaluate(Writer& w) {
  const BehavioralDataset data = load_dataset(path("responses.jsonl"));
  const BehavioralDataset model = load_dataset(path("model_responses.jsonl"));
  const auto subjects = model.subjects();
  const auto matched = select_subjects(data.records, subjects);
  const TimeoutPolicy policy = config_.timeouts;
  const AnovaResult cmp = compare_human_model(matched, model.records, policy);
  const auto data_bias = ventriloquism_bias(data.records, policy);
  const auto model_bias = ventriloquism_bias(model.records, policy);

  int congruent = 0, congruent_correct = 0;
  for (const auto& r : model.records) {
    if (!is_scored(r, policy) || trial_category(r.trial) != DistanceCategory::kCongruent) continue;
    ++congruent;
    if (r.correct()) ++congruent_correct;
  }
  auto bias_json = [](const std::vector<BiasEntry>& b) {
    json j = json::object();
    for (const auto& e : b) j[e.cue] = e.proportion();
    return j;
  };
  json j;
  j["subjects"] = subjects.size();
  j["behaviour_source"] = data.header.value("source", "unknown");
  j["behaviour_error_rate"] = pooled_error_rate(matched, policy);
  j["model_error_rate"] = pooled_error_rate(model.records, policy);
  j["comparison"] = {{"F", cmp.F},
                     {"p", cmp.p},
                     {"eta_squared", cmp.eta_squared},
                     {"df_effect", cmp.df_effect},
                     {"df_error", cmp.df_error},
                     {"degenerate", cmp.degenerate},
                     {"not_significant", cmp.p > 0.05}};
  j["model_congruent_accuracy"] = congruent ? double(congruent_correct) / congruent : 0.0;
  j["behaviour_bias"] = bias_json(data_bias);
  j["model_bias"] = bias_json(model_bias);
  j["behaviour_bias_ordering"] = bias_ordering_holds(data_bias);
  j["model_bias_ordering"] = bias_ordering_holds(model_bias);
  w.put("evaluation.json", dump(j));
  char buf[160];
  std::snprintf(buf, sizeof buf, "evaluate: ER behaviour %.3f model %.3f, F(%d, %d) = %.3f, p = %.3f",
                j["behaviour_error_rate"].get<double>(), j["model_error_rate"].get<double>(), cmp.df_effect,
                cmp.df_error, cmp.F, cmp.p);
  log(buf);
}

namespace {

std::vector<std::pair<std::string, std::string>> report_files(std::span<const SetAnalysis> sets,
                                                              const std::optional<Comparison>& cmp) {
  return {{"reports/er_by_category.csv", rates_csv(sets, GroupBy::kCategory)},
          {"reports/er_by_condition.csv", rates_csv(sets, GroupBy::kCondition)},
          {"reports/er_by_strategy.csv", rates_csv(sets, GroupBy::kStrategy)},
          {"reports/er_by_session.csv", rates_csv(sets, GroupBy::kSession)},
          {"reports/ventriloquism.csv", bias_csv(sets)},
          {"reports/tests.csv", tests_csv(sets, cmp)},
          {"reports/summary.txt", summary_text(sets, cmp)},
          {"reports/er_by_category.svg", category_svg(sets)}};
}

}  // namespace

void Pipeline::analyze(Writer& w) {
  const BehavioralDataset data = load_dataset(path("responses.jsonl"));
  const BehavioralDataset model = load_dataset(path("model_responses.jsonl"));
  const std::string label = data.header.value("source", "behaviour");
  const TimeoutPolicy policy = config_.timeouts;
  const auto subjects = model.subjects();
  const auto matched = select_subjects(data.records, subjects);
  std::vector<SetAnalysis> sets;
  sets.push_back(analyze_set(label, data.records, policy));
  if (subjects.size() < data.subjects().size()) {
    sets.push_back(analyze_set(label + " (held-out subjects)", matched, policy));
  }
  sets.push_back(analyze_set("model", model.records, policy));
  Comparison c;
  c.human_label = label;
  c.model_label = "model";
  c.subjects = static_cast<int>(subjects.size());
  c.anova = compare_human_model(matched, model.records, policy);
  fs::create_directories(path("reports"));
  for (const auto& [rel, bytes] : report_files(sets, c)) w.put(rel, bytes);
}

int analyze_dataset(const fs::path& dataset, const fs::path& out_dir, TimeoutPolicy policy) {
  const BehavioralDataset d = load_dataset(dataset);
  std::vector<SetAnalysis> sets;
  sets.push_back(analyze_set(d.header.value("source", "behaviour"), d.records, policy));
  fs::create_directories(out_dir / "reports");
  int n = 0;
  for (const auto& [rel, bytes] : report_files(sets, std::nullopt)) {
    write_file_if_changed(out_dir / rel, bytes);
    ++n;
  }
  return n;
}

}  // namespace xmodal
