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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "xmodal/checkpoint.hpp"
#include "xmodal/error.hpp"
#include "xmodal/model.hpp"
#include "xmodal/oracle.hpp"

namespace xmodal {
namespace {

// Output side of a 3x3 convolution.
int ConvOut(int n, int stride, int padding) { return (n + 2 * padding - 3) / stride + 1; }

std::vector<ModelInput> Render(const std::vector<TrialSpec>& trials) {
  std::vector<ModelInput> out;
  for (const auto& t : trials) out.push_back(preprocess(render_bundle(t)));
  return out;
}

std::vector<const Conv2d<float>*> Convs(const Network<float>& n) {
  std::vector<const Conv2d<float>*> out;
  for (size_t i = 0; i < n.layer_count(); ++i)
    if (auto* c = dynamic_cast<const Conv2d<float>*>(&n.layer(i))) out.push_back(c);
  return out;
}

TEST(ChannelShapeTest, AudioFourConvPairs) {
  const ChannelNet net = build_channel(Modality::kAudio, 1);
  EXPECT_EQ(net.graph.input_shape(), (Shape{1, 512, 26}));
  const auto convs = Convs(net.graph);
  ASSERT_EQ(convs.size(), 8u);
  const int filters[] = {8, 8, 16, 16, 24, 24, 32, 32};
  const int strides[] = {1, 2, 1, 2, 1, 2, 1, 2};
  int h = 512, w = 26, seen = 0;
  for (size_t i = 0; i < net.graph.layer_count(); ++i) {
    const LayerSpec s = net.graph.layer(i).spec();
    if (s.kind != LayerKind::kConv2d) continue;
    EXPECT_EQ(s.out, filters[seen]);
    EXPECT_EQ(s.stride, strides[seen]);
    h = ConvOut(h, s.stride, s.padding);
    w = ConvOut(w, s.stride, s.padding);
    EXPECT_EQ(net.graph.layer_output_shape(i), (Shape{filters[seen], h, w})) << i;
    ++seen;
  }
  // Four stride-2 layers halve the time axis four times.
  EXPECT_EQ(h, 512 / 16);
  EXPECT_EQ(net.feature_dim, 32 * h * w);
}

TEST(ChannelShapeTest, FaceAndBody) {
  for (Modality m : {Modality::kFace, Modality::kBody}) {
    const ChannelNet net = build_channel(m, 1);
    std::vector<LayerKind> kinds;
    for (size_t i = 0; i < net.graph.layer_count(); ++i) kinds.push_back(net.graph.layer(i).spec().kind);
    const std::vector<LayerKind> expected = {LayerKind::kConv2d, LayerKind::kReLU, LayerKind::kConv2d,
                                             LayerKind::kReLU, LayerKind::kMaxPool2x2, LayerKind::kDropout};
    EXPECT_EQ(kinds, expected);
    for (const auto* c : Convs(net.graph)) {
      EXPECT_EQ(c->spec().out, 16);
      EXPECT_EQ(c->spec().stride, 1);
    }
  }
  const ChannelNet face = build_channel(Modality::kFace, 1);
  EXPECT_EQ(face.graph.output_shape(), (Shape{16, 58, 58}));
  EXPECT_EQ(face.feature_dim, 16 * 58 * 58);
  const ChannelNet body = build_channel(Modality::kBody, 1);
  EXPECT_EQ(body.graph.input_shape(), (Shape{1, 60, 80}));
  EXPECT_EQ(body.graph.output_shape(), (Shape{16, (60 - 4) / 2, (80 - 4) / 2}));
}

TEST(ChannelShapeTest, FusedWidth) {
  const ChannelSet c = build_channels(3);
  EXPECT_EQ(fused_dim(c), 2 * c.audio.feature_dim + 4 * c.face.feature_dim + c.body.feature_dim);
  EXPECT_EQ(fused_dim(c), 236416);
  const Network<float> fusion = build_fusion(fused_dim(c), 1);
  EXPECT_EQ(fusion.layer_output_shape(0), (Shape{kFusionHidden}));
  EXPECT_EQ(fusion.output_shape(), (Shape{4}));
}

TEST(ChannelTest, SameSeedSameParameters) {
  const ChannelNet a = build_channel(Modality::kBody, 9), b = build_channel(Modality::kBody, 9);
  EXPECT_EQ(encode_checkpoint(a.graph), encode_checkpoint(b.graph));
  EXPECT_EQ(encode_checkpoint(a.head), encode_checkpoint(b.head));
  EXPECT_NE(encode_checkpoint(a.graph), encode_checkpoint(build_channel(Modality::kBody, 10).graph));
}

TEST(ChannelTest, LabelsAndSyntheticTrials) {
  TrialSpec t;
  t.condition = Condition::kArm;
  t.audio_pos = AvatarIndex(1);
  t.arm_pos = AvatarIndex(3);
  EXPECT_EQ(channel_label(Modality::kAudio, t), 1);
  EXPECT_EQ(channel_label(Modality::kFace, t), kAbsentClass);
  EXPECT_EQ(channel_label(Modality::kBody, t), 3);
  const auto trials = synthetic_trials(4, 500);
  std::array<int, kConditionCount> per{};
  for (const auto& s : trials) {
    s.validate();
    ++per[static_cast<int>(s.condition)];
  }
  for (int c : per) EXPECT_GT(c, 50);
  EXPECT_EQ(synthetic_trials(4, 500), trials);
}

TEST(PretrainTest, AudioLearnsCleanBinauralCues) {
  const auto trials = synthetic_trials(21, 480);
  const auto inputs = Render(trials);
  std::vector<int> labels;
  for (const auto& t : trials) labels.push_back(channel_label(Modality::kAudio, t));
  ChannelNet net = build_channel(Modality::kAudio, 5);
  PretrainOptions o;
  o.max_epochs = 10;
  o.seed = 2;
  const PretrainResult r = pretrain_channel(net, inputs, labels, o);
  EXPECT_TRUE(net.pretrained);
  EXPECT_GE(r.heldout_accuracy, 0.95);
  ASSERT_GE(r.epoch_losses.size(), 1u);
  const auto pred = channel_predict(net, inputs);
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  EXPECT_GT(correct, 0.9 * pred.size());
}

TEST(PretrainTest, LossFallsOverFiveEpochs) {
  const auto trials = synthetic_trials(22, 80);
  const auto inputs = Render(trials);
  std::vector<int> labels;
  for (const auto& t : trials) labels.push_back(channel_label(Modality::kBody, t));
  ChannelNet net = build_channel(Modality::kBody, 6);
  PretrainOptions o;
  o.max_epochs = 6;
  o.patience = 100;
  o.validation_fraction = 0.0;
  o.holdout_fraction = 0.0;
  o.seed = 3;
  const PretrainResult r = pretrain_channel(net, inputs, labels, o);
  ASSERT_GE(r.epoch_losses.size(), 2u);
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(PretrainTest, ShuffledLabelsStayNearChance) {
  const auto trials = synthetic_trials(23, 500);
  const auto inputs = Render(trials);
  std::vector<int> labels;
  for (const auto& t : trials) labels.push_back(channel_label(Modality::kAudio, t));
  Rng rng(77);
  rng.shuffle(labels.begin(), labels.end());
  ChannelNet net = build_channel(Modality::kAudio, 7);
  PretrainOptions o;
  o.max_epochs = 6;
  o.seed = 4;
  const PretrainResult r = pretrain_channel(net, inputs, labels, o);
  EXPECT_GE(r.heldout_accuracy, 0.15);
  EXPECT_LE(r.heldout_accuracy, 0.35);
}

TEST(PretrainTest, RejectsBadInput) {
  ChannelNet net = build_channel(Modality::kBody, 1);
  EXPECT_THROW(pretrain_channel(net, {}, {}, PretrainOptions{}), Error);
  const auto inputs = Render({TrialSpec{}});
  const std::vector<int> bad = {7};
  EXPECT_THROW(pretrain_channel(net, inputs, bad, PretrainOptions{}), Error);
}

TEST(FuseTest, RequiresPretrainedChannelsAndKeepsBlockOrder) {
  ChannelSet c = build_channels(2);
  TrialSpec t;
  t.condition = Condition::kLips;
  t.lips_pos = AvatarIndex(0);
  ModelInput in = preprocess(render_bundle(t));
  try {
    fuse_features(c, in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
  c.audio.pretrained = c.face.pretrained = c.body.pretrained = true;
  const auto f = fuse_features(c, in);
  ASSERT_EQ(f.size(), 236416u);
  EXPECT_EQ(fuse_features(c, in), f);

  std::swap(in.faces[0], in.faces[2]);
  const auto g = fuse_features(c, in);
  const size_t a = 2 * c.audio.feature_dim, fd = c.face.feature_dim;
  EXPECT_TRUE(std::equal(f.begin() + a, f.begin() + a + fd, g.begin() + a + 2 * fd));
  EXPECT_TRUE(std::equal(f.begin() + a + 2 * fd, f.begin() + a + 3 * fd, g.begin() + a));
  EXPECT_TRUE(std::equal(f.begin() + a + fd, f.begin() + a + 2 * fd, g.begin() + a + fd));
  EXPECT_TRUE(std::equal(f.begin(), f.begin() + a, g.begin()));
}

TEST(FuseTest, FusionTrainingLeavesChannelsUntouched) {
  ChannelSet c = build_channels(4);
  c.audio.pretrained = c.face.pretrained = c.body.pretrained = true;
  const std::string before = encode_checkpoint(c.audio.graph) + encode_checkpoint(c.face.graph) +
                             encode_checkpoint(c.body.graph);
  std::vector<TrialSpec> trials = enumerate_trials(1, 1);
  trials.resize(3);
  const auto table = feature_table(c, trials, Render(trials));
  EXPECT_EQ(table.rows(), 3);
  EXPECT_EQ(table.dim, 236416);
  std::vector<float> counts(3 * 4, 0.0f);
  for (int i = 0; i < 3; ++i) counts[i * 4 + trials[i].audio_pos.value()] = 1.0f;
  Network<float> fusion = build_fusion(table.dim, 1);
  FusionOptions o;
  o.epochs = 1;
  train_fusion(fusion, table, counts, o);
  EXPECT_EQ(encode_checkpoint(c.audio.graph) + encode_checkpoint(c.face.graph) + encode_checkpoint(c.body.graph),
            before);
}

// Synthetic feature table: one-hot audio position plus seeded noise.
FeatureTable ToyTable(const std::vector<TrialSpec>& trials, uint64_t seed) {
  FeatureTable t;
  t.dim = 12;
  Rng rng(seed);
  for (const auto& tr : trials) {
    t.trial_ids.push_back(tr.trial_id);
    for (int k = 0; k < t.dim; ++k) {
      const double base = k == tr.audio_pos.value() ? 2.0 : 0.0;
      t.values.push_back(static_cast<float>(base + 0.3 * rng.normal()));
    }
  }
  return t;
}

TEST(FusionTest, LearnsAudioTeachingSignal) {
  const auto trials = enumerate_trials(2, 1);
  const auto table = ToyTable(trials, 5);
  std::vector<float> counts(trials.size() * 4, 0.0f);
  for (size_t i = 0; i < trials.size(); ++i) counts[i * 4 + trials[i].audio_pos.value()] = 3.0f;
  Network<float> fusion = build_fusion(table.dim, 2);
  FusionOptions o;
  o.epochs = 30;
  o.batch_size = 16;
  o.learning_rate = 1e-2;
  const auto losses = train_fusion(fusion, table, counts, o);
  EXPECT_LT(losses.back(), losses.front());
  int correct = 0;
  for (int i = 0; i < table.rows(); ++i) {
    const auto p = infer(fusion, table.row(i));
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-6);
    correct += argmax(p) == trials[i].audio_pos.value();
  }
  EXPECT_GT(correct, 0.9 * table.rows());
  EXPECT_EQ(infer(fusion, table.row(0)), infer(fusion, table.row(0)));
}

TEST(FusionTest, ConstantTargetGivesConstantAnswer) {
  const auto trials = enumerate_trials(3, 1);
  const auto table = ToyTable(trials, 6);
  std::vector<float> counts(trials.size() * 4, 0.0f);
  for (size_t i = 0; i < trials.size(); ++i) counts[i * 4] = 1.0f;
  Network<float> fusion = build_fusion(table.dim, 3);
  FusionOptions o;
  o.epochs = 15;
  o.learning_rate = 1e-2;
  train_fusion(fusion, table, counts, o);
  for (int i = 0; i < table.rows(); ++i) EXPECT_EQ(argmax(infer(fusion, table.row(i))), 0);
}

TEST(FusionTest, DeterministicGivenSeed) {
  const auto trials = enumerate_trials(3, 1);
  const auto table = ToyTable(trials, 7);
  std::vector<float> counts(trials.size() * 4, 1.0f);
  auto run = [&] {
    Network<float> f = build_fusion(table.dim, 4);
    FusionOptions o;
    o.epochs = 3;
    o.seed = 11;
    train_fusion(f, table, counts, o);
    return encode_checkpoint(f);
  };
  EXPECT_EQ(run(), run());
  Network<float> f = build_fusion(table.dim + 1, 4);
  EXPECT_THROW(train_fusion(f, table, counts, FusionOptions{}), Error);
  std::vector<float> zero(trials.size() * 4, 0.0f);
  Network<float> g = build_fusion(table.dim, 4);
  EXPECT_THROW(train_fusion(g, table, zero, FusionOptions{}), Error);
}

TEST(FusionTest, ResponseCountsSkipTimeoutsAndPractice) {
  const auto trials = enumerate_trials(3, 1);
  const auto table = ToyTable(trials, 8);
  std::vector<ResponseRecord> records(4);
  for (auto& r : records) r.trial = trials[5];
  records[0].response = 2;
  records[1].response = 2;
  records[2].response = kTimeoutResponse;
  records[3].response = 1;
  records[3].trial.session = 0;
  const auto counts = response_counts(table, records);
  const int row = table.index_of(trials[5].trial_id);
  EXPECT_EQ(counts[row * 4 + 2], 2.0f);
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), 0.0f), 2.0f);
  records[0].trial.trial_id = 5000;
  EXPECT_THROW(response_counts(table, records), Error);
}

TEST(LoocvTest, FullCohortSizes) {
  const auto trials = enumerate_trials(1);
  const OracleTargets targets;
  const OracleParams params = make_params({0.2, 0.6, 0.4}, {0.1, 0.9, 0.8, 0.8, 0.7}, 0.05);
  const BehavioralDataset data = generate_dataset(params, targets, trials, 3);
  ASSERT_EQ(data.records.size(), 33u * 600u);
  const auto table = ToyTable(trials, 9);
  LoocvOptions o;
  o.folds = 33;
  o.fusion.epochs = 1;
  o.fusion.batch_size = 64;
  const auto folds = loocv(data, table, o);
  ASSERT_EQ(folds.size(), 33u);
  size_t total = 0;
  const auto subjects = data.subjects();
  for (size_t i = 0; i < folds.size(); ++i) {
    EXPECT_EQ(folds[i].subject_id, subjects[i]);
    EXPECT_EQ(folds[i].training_records, 32 * 600);
    EXPECT_EQ(folds[i].responses.size(), 600u);
    for (const auto& r : folds[i].responses) {
      EXPECT_EQ(r.source, Source::kModel);
      EXPECT_EQ(r.subject_id, subjects[i]);
      ASSERT_TRUE(r.probs.has_value());
      EXPECT_EQ(r.response, argmax(*r.probs));
    }
    total += folds[i].responses.size();
  }
  EXPECT_EQ(total, 19800u);

  o.folds = 34;
  EXPECT_THROW(loocv(data, table, o), Error);
}

TEST(LoocvTest, FoldsAreIndependentOfFoldCount) {
  const auto trials = enumerate_trials(1);
  const OracleParams params = make_params({0.2, 0.6, 0.4}, {0.1, 0.9, 0.8, 0.8, 0.7}, 0.05);
  const BehavioralDataset data = generate_dataset(params, OracleTargets{}, trials, 4);
  const auto table = ToyTable(trials, 10);
  LoocvOptions o;
  o.fusion.epochs = 2;
  o.folds = 2;
  const auto two = loocv(data, table, o);
  o.folds = 3;
  const auto three = loocv(data, table, o);
  EXPECT_EQ(two[1].responses, three[1].responses);
  EXPECT_EQ(two[0].losses, three[0].losses);
}

}  // namespace
}  // namespace xmodal
