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
#include <span>
#include <string_view>
#include <vector>

#include "xmodal/dataset.hpp"
#include "xmodal/dsp.hpp"
#include "xmodal/network.hpp"

namespace xmodal {

enum class Modality { kAudio, kFace, kBody };
std::string_view to_string(Modality m);

// Class index used by the visual heads when a trial has no cue of that kind.
inline constexpr int kAbsentClass = 4;
inline constexpr int kFusionHidden = 128;
inline constexpr float kDefaultDropout = 0.5f;

// Convolutional feature extractor plus the linear head used only while the
// channel is pretrained. The head sees the concatenated features of all
// inputs the channel receives per trial (two spectrograms, four faces, one
// body image).
struct ChannelNet {
  Modality modality = Modality::kAudio;
  Network<float> graph;
  Network<float> head;
  int feature_dim = 0;
  bool pretrained = false;
};

// Inputs per trial for a modality: 2 (audio), 4 (face) or 1 (body).
int inputs_per_trial(Modality m);
int class_count(Modality m);
Shape channel_input_shape(Modality m);

ChannelNet build_channel(Modality m, uint64_t seed, float dropout_rate = kDefaultDropout);

// Stacks the channel inputs of several trials into one batch tensor; audio
// log energies are rescaled from [log 1e-10, ~0] to roughly [0, 1].
Tensor<float> channel_batch(Modality m, std::span<const ModelInput* const> inputs);

// Pretraining target for a trial: the audio position, or the lips/arm
// position with kAbsentClass when that cue is missing.
int channel_label(Modality m, const TrialSpec& trial);

// Random trials over every condition, used for unisensory pretraining.
std::vector<TrialSpec> synthetic_trials(uint64_t seed, int count);

struct PretrainOptions {
  int max_epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double holdout_fraction = 0.2;    // reserved for the reported accuracy
  double validation_fraction = 0.1; // of the remainder, for early stopping
  int patience = 3;
  uint64_t seed = 1;
};

struct PretrainResult {
  double heldout_accuracy = 0.0;
  double validation_accuracy = 0.0;
  int epochs_run = 0;
  // Mean minibatch loss of each epoch.
  std::vector<double> epoch_losses;
};

// Trains graph + head with softmax cross-entropy and marks the channel
// pretrained. The best validation snapshot is kept.
PretrainResult pretrain_channel(ChannelNet& net, std::span<const ModelInput> inputs,
                                std::span<const int> labels, const PretrainOptions& options);

// Argmax predictions of graph + head.
std::vector<int> channel_predict(ChannelNet& net, std::span<const ModelInput> inputs);

struct ChannelSet {
  ChannelNet audio;
  ChannelNet face;
  ChannelNet body;
};

ChannelSet build_channels(uint64_t seed);
int fused_dim(const ChannelSet& channels);

// Frozen penultimate features: audio(left), audio(right), faces 0..3, body.
std::vector<float> fuse_features(ChannelSet& channels, const ModelInput& input);

// One fused feature row per trial, in input order.
struct FeatureTable {
  int dim = 0;
  std::vector<int> trial_ids;
  std::vector<float> values;  // trial_ids.size() x dim

  int rows() const { return static_cast<int>(trial_ids.size()); }
  std::span<const float> row(int i) const {
    return {values.data() + size_t(i) * dim, size_t(dim)};
  }
  int index_of(int trial_id) const;
};

FeatureTable feature_table(ChannelSet& channels, std::span<const TrialSpec> trials,
                           std::span<const ModelInput> inputs);

Network<float> build_fusion(int input_dim, uint64_t seed, float dropout_rate = kDefaultDropout);

// Per-trial response counts ([rows x 4], row order of `table`) over the
// answered records of the given subjects. Timeouts are skipped.
std::vector<float> response_counts(const FeatureTable& table,
                                   std::span<const ResponseRecord> records);

struct FusionOptions {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  uint64_t seed = 1;
};

// Cross-entropy against the recorded responses. Records that share a trial
// are aggregated into response counts, which leaves the summed loss
// unchanged. Returns the mean per-record training loss of each epoch.
std::vector<double> train_fusion(Network<float>& fusion, const FeatureTable& table,
                                 std::span<const float> counts, const FusionOptions& options);

std::array<double, kAvatarCount> infer(Network<float>& fusion, std::span<const float> features);
int argmax(const std::array<double, kAvatarCount>& probs);

struct LoocvOptions {
  int folds = 33;  // leading subjects held out in turn
  FusionOptions fusion;
  float dropout_rate = kDefaultDropout;
};

struct FoldResult {
  std::string subject_id;
  int training_records = 0;
  std::vector<double> losses;
  std::vector<ResponseRecord> responses;  // model responses on the held-out subject
};

// Leave-one-subject-out: each fold trains a freshly initialized fusion net
// (seed + fold) on every other subject and answers the held-out subject's
// trials with the argmax response.
std::vector<FoldResult> loocv(const BehavioralDataset& data, const FeatureTable& table,
                              const LoocvOptions& options);

}  // namespace xmodal
