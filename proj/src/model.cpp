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

#include "xmodal/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "xmodal/optimizer.hpp"

namespace xmodal {
namespace {

// log(kLogFloorEnergy); spectrogram values are shifted and scaled by it.
const float kAudioScale = -std::log(kLogFloorEnergy);
constexpr int kEvalBatch = 16;

void copy_matrix(const Matrix& m, float* dst, bool audio) {
  if (!audio) {
    std::copy(m.values.begin(), m.values.end(), dst);
    return;
  }
  for (size_t i = 0; i < m.values.size(); ++i) dst[i] = (m.values[i] + kAudioScale) / kAudioScale;
}

std::vector<const ModelInput*> pointers(std::span<const ModelInput> inputs, std::span<const int> idx) {
  std::vector<const ModelInput*> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(&inputs[i]);
  return out;
}

// Runs graph + head; leaves activations cached for backward.
Tensor<float> channel_logits(ChannelNet& net, const Tensor<float>& x, Mode mode, Rng& rng,
                             int trials) {
  Tensor<float> f = net.graph.forward(x, mode, rng);
  f.reshape({trials, static_cast<int>(f.size() / trials)});
  return net.head.forward(f, mode, rng);
}

std::vector<Param<float>*> channel_params(ChannelNet& net) {
  auto ps = net.graph.params();
  for (auto* p : net.head.params()) ps.push_back(p);
  return ps;
}

double accuracy(ChannelNet& net, std::span<const ModelInput> inputs, std::span<const int> labels,
                std::span<const int> idx) {
  if (idx.empty()) return 0.0;
  int correct = 0;
  for (size_t start = 0; start < idx.size(); start += kEvalBatch) {
    const size_t end = std::min(idx.size(), start + kEvalBatch);
    const std::span<const int> chunk = idx.subspan(start, end - start);
    const auto ptrs = pointers(inputs, chunk);
    Rng rng(0);
    const Tensor<float> logits = channel_logits(net, channel_batch(net.modality, ptrs),
                                                Mode::kInference, rng, static_cast<int>(chunk.size()));
    const size_t k = logits.stride0();
    for (size_t b = 0; b < chunk.size(); ++b) {
      const float* row = logits.ptr() + b * k;
      const int pred = static_cast<int>(std::max_element(row, row + k) - row);
      correct += pred == labels[chunk[b]];
    }
  }
  return double(correct) / double(idx.size());
}

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kAudio: return "audio";
    case Modality::kFace: return "face";
    case Modality::kBody: return "body";
  }
  return "?";
}

int inputs_per_trial(Modality m) {
  switch (m) {
    case Modality::kAudio: return 2;
    case Modality::kFace: return kAvatarCount;
    case Modality::kBody: return 1;
  }
  return 0;
}

int class_count(Modality m) { return m == Modality::kAudio ? kAvatarCount : kAvatarCount + 1; }

Shape channel_input_shape(Modality m) {
  switch (m) {
    case Modality::kAudio: return {1, kSpecFrames, kSpecBands};
    case Modality::kFace: return {1, kFaceSize, kFaceSize};
    case Modality::kBody: return {1, kBodyHeight, kBodyWidth};
  }
  return {};
}

ChannelNet build_channel(Modality m, uint64_t seed, float dropout_rate) {
  ChannelNet net{m, Network<float>(channel_input_shape(m)), Network<float>({1}), 0, false};
  if (m == Modality::kAudio) {
    // Spectrograms are only 26 bins wide, so the convolutions keep a one-pixel
    // border; the stride-2 layer of each pair halves both axes.
    for (int filters : {8, 16, 24, 32}) {
      net.graph.conv2d(filters, 1, 1).relu().conv2d(filters, 2, 1).relu();
    }
  } else {
    net.graph.conv2d(16).relu().conv2d(16).relu().maxpool2x2().dropout(dropout_rate);
  }
  net.feature_dim = static_cast<int>(shape_size(net.graph.output_shape()));
  net.head = Network<float>({net.feature_dim * inputs_per_trial(m)});
  net.head.dense(class_count(m));
  net.graph.init_he_uniform(mix_seed(seed, static_cast<uint64_t>(m), 1));
  net.head.init_he_uniform(mix_seed(seed, static_cast<uint64_t>(m), 2));
  return net;
}

Tensor<float> channel_batch(Modality m, std::span<const ModelInput* const> inputs) {
  require(!inputs.empty(), "empty channel batch");
  const int k = inputs_per_trial(m);
  Shape dims = channel_input_shape(m);
  dims.insert(dims.begin(), static_cast<int>(inputs.size()) * k);
  Tensor<float> x(dims);
  const size_t stride = x.stride0();
  float* dst = x.ptr();
  for (const ModelInput* in : inputs) {
    switch (m) {
      case Modality::kAudio:
        copy_matrix(in->spec_left, dst, true);
        copy_matrix(in->spec_right, dst + stride, true);
        break;
      case Modality::kFace:
        for (int f = 0; f < kAvatarCount; ++f) copy_matrix(in->faces[f], dst + f * stride, false);
        break;
      case Modality::kBody:
        copy_matrix(in->body, dst, false);
        break;
    }
    dst += k * stride;
  }
  return x;
}

int channel_label(Modality m, const TrialSpec& trial) {
  switch (m) {
    case Modality::kAudio: return trial.audio_pos.value();
    case Modality::kFace: return trial.lips_pos ? trial.lips_pos->value() : kAbsentClass;
    case Modality::kBody: return trial.arm_pos ? trial.arm_pos->value() : kAbsentClass;
  }
  return 0;
}

std::vector<TrialSpec> synthetic_trials(uint64_t seed, int count) {
  require(count > 0, "synthetic trial count must be positive");
  Rng rng(seed);
  std::vector<TrialSpec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    TrialSpec t;
    t.condition = static_cast<Condition>(rng.below(kConditionCount));
    t.audio_pos = AvatarIndex(static_cast<int>(rng.below(kAvatarCount)));
    const AvatarIndex a(static_cast<int>(rng.below(kAvatarCount)));
    switch (t.condition) {
      case Condition::kBaseline: break;
      case Condition::kLips: t.lips_pos = a; break;
      case Condition::kArm: t.arm_pos = a; break;
      case Condition::kLipsArm: t.lips_pos = a; t.arm_pos = a; break;
      case Condition::kLipsVsArm: {
        t.lips_pos = a;
        const int shift = 1 + static_cast<int>(rng.below(kAvatarCount - 1));
        t.arm_pos = AvatarIndex((a.value() + shift) % kAvatarCount);
        break;
      }
    }
    t.syllables = syllable_permutations()[rng.below(6)];
    t.trial_id = i;
    t.session = 1;
    t.validate();
    out.push_back(t);
  }
  return out;
}

PretrainResult pretrain_channel(ChannelNet& net, std::span<const ModelInput> inputs,
                                std::span<const int> labels, const PretrainOptions& o) {
  require(!inputs.empty(), "pretraining set is empty");
  require(inputs.size() == labels.size(), "one label per input required");
  require(o.max_epochs > 0 && o.batch_size > 0, "epochs and batch size must be positive");
  require(o.holdout_fraction >= 0.0 && o.holdout_fraction < 1.0 && o.validation_fraction >= 0.0 &&
              o.validation_fraction < 1.0,
          "split fractions must lie in [0, 1)");
  const int classes = class_count(net.modality);
  for (int l : labels) require(l >= 0 && l < classes, "pretraining label out of range");

  std::vector<int> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(mix_seed(o.seed, 0x5117));
  split_rng.shuffle(order.begin(), order.end());
  const size_t n_hold = static_cast<size_t>(std::floor(order.size() * o.holdout_fraction));
  const size_t n_rest = order.size() - n_hold;
  const size_t n_val = static_cast<size_t>(std::floor(n_rest * o.validation_fraction));
  require(n_rest - n_val > 0, "no training examples left after the splits");
  const std::vector<int> heldout(order.begin(), order.begin() + n_hold);
  const std::vector<int> validation(order.begin() + n_hold, order.begin() + n_hold + n_val);
  std::vector<int> train(order.begin() + n_hold + n_val, order.end());

  AdamState<float> adam;
  adam.learning_rate = o.learning_rate;
  Rng dropout_rng(mix_seed(o.seed, 0xd40));
  PretrainResult result;
  double best_val = -1.0;
  int since_best = 0;
  ChannelNet best = net;

  for (int epoch = 0; epoch < o.max_epochs; ++epoch) {
    Rng order_rng(mix_seed(o.seed, epoch));
    order_rng.shuffle(train.begin(), train.end());
    double loss_sum = 0.0;
    for (size_t start = 0; start < train.size(); start += o.batch_size) {
      const size_t end = std::min(train.size(), start + o.batch_size);
      const std::span<const int> chunk(train.data() + start, end - start);
      const int trials = static_cast<int>(chunk.size());
      std::vector<int> targets;
      for (int i : chunk) targets.push_back(labels[i]);
      net.graph.zero_grad();
      net.head.zero_grad();
      const auto ptrs = pointers(inputs, chunk);
      const Tensor<float> logits =
          channel_logits(net, channel_batch(net.modality, ptrs), Mode::kTraining, dropout_rng, trials);
      const auto loss = softmax_cross_entropy<float>(logits, targets);
      loss_sum += loss.loss * trials;
      Tensor<float> g = net.head.backward(loss.grad, true);
      Shape gd = net.graph.output_shape();
      gd.insert(gd.begin(), trials * inputs_per_trial(net.modality));
      g.reshape(gd);
      net.graph.backward(g, false);
      auto ps = channel_params(net);
      adam_step<float>(adam, ps);
    }
    result.epoch_losses.push_back(loss_sum / double(train.size()));
    result.epochs_run = epoch + 1;
    const double val = validation.empty() ? accuracy(net, inputs, labels, train)
                                          : accuracy(net, inputs, labels, validation);
    if (val > best_val) {
      best_val = val;
      best = net;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (best_val >= 1.0 || since_best >= o.patience) break;
  }
  net = std::move(best);
  net.pretrained = true;
  result.validation_accuracy = best_val;
  result.heldout_accuracy = accuracy(net, inputs, labels, heldout);
  return result;
}

std::vector<int> channel_predict(ChannelNet& net, std::span<const ModelInput> inputs) {
  std::vector<int> out;
  for (size_t start = 0; start < inputs.size(); start += kEvalBatch) {
    const size_t end = std::min(inputs.size(), start + kEvalBatch);
    std::vector<const ModelInput*> ptrs;
    for (size_t i = start; i < end; ++i) ptrs.push_back(&inputs[i]);
    Rng rng(0);
    const Tensor<float> logits = channel_logits(net, channel_batch(net.modality, ptrs),
                                                Mode::kInference, rng, static_cast<int>(ptrs.size()));
    const size_t k = logits.stride0();
    for (size_t b = 0; b < ptrs.size(); ++b) {
      const float* row = logits.ptr() + b * k;
      out.push_back(static_cast<int>(std::max_element(row, row + k) - row));
    }
  }
  return out;
}

ChannelSet build_channels(uint64_t seed) {
  return {build_channel(Modality::kAudio, seed), build_channel(Modality::kFace, seed),
          build_channel(Modality::kBody, seed)};
}

int fused_dim(const ChannelSet& c) {
  return 2 * c.audio.feature_dim + kAvatarCount * c.face.feature_dim + c.body.feature_dim;
}

namespace {

// Writes the fused features of several inputs into consecutive rows.
void fuse_rows(ChannelSet& channels, std::span<const ModelInput* const> inputs, float* out) {
  const int dim = fused_dim(channels);
  const int trials = static_cast<int>(inputs.size());
  size_t offset = 0;
  for (ChannelNet* net : {&channels.audio, &channels.face, &channels.body}) {
    require(net->pretrained, std::string(to_string(net->modality)) + " channel is not pretrained",
            ErrorCode::kState);
    Rng rng(0);
    const Tensor<float> f = net->graph.forward(channel_batch(net->modality, inputs),
                                               Mode::kInference, rng);
    const size_t block = size_t(net->feature_dim) * inputs_per_trial(net->modality);
    for (int b = 0; b < trials; ++b) {
      std::copy_n(f.ptr() + b * block, block, out + size_t(b) * dim + offset);
    }
    offset += block;
  }
}

}  // namespace

std::vector<float> fuse_features(ChannelSet& channels, const ModelInput& input) {
  std::vector<float> out(fused_dim(channels));
  const ModelInput* p = &input;
  fuse_rows(channels, std::span<const ModelInput* const>(&p, 1), out.data());
  return out;
}

int FeatureTable::index_of(int trial_id) const {
  const auto it = std::find(trial_ids.begin(), trial_ids.end(), trial_id);
  return it == trial_ids.end() ? -1 : static_cast<int>(it - trial_ids.begin());
}

FeatureTable feature_table(ChannelSet& channels, std::span<const TrialSpec> trials,
                           std::span<const ModelInput> inputs) {
  require(trials.size() == inputs.size() && !trials.empty(), "one input per trial required");
  FeatureTable t;
  t.dim = fused_dim(channels);
  t.values.resize(trials.size() * size_t(t.dim));
  for (const auto& tr : trials) {
    require(t.index_of(tr.trial_id) < 0, "duplicate trial id in feature table");
    t.trial_ids.push_back(tr.trial_id);
  }
  for (size_t start = 0; start < inputs.size(); start += kEvalBatch) {
    const size_t end = std::min(inputs.size(), start + kEvalBatch);
    std::vector<const ModelInput*> ptrs;
    for (size_t i = start; i < end; ++i) ptrs.push_back(&inputs[i]);
    fuse_rows(channels, ptrs, t.values.data() + start * t.dim);
  }
  return t;
}

Network<float> build_fusion(int input_dim, uint64_t seed, float dropout_rate) {
  Network<float> net({input_dim});
  net.dense(kFusionHidden).relu().dropout(dropout_rate).dense(kAvatarCount);
  net.init_he_uniform(seed);
  return net;
}

std::vector<float> response_counts(const FeatureTable& table,
                                   std::span<const ResponseRecord> records) {
  std::unordered_map<int, int> index;
  for (int i = 0; i < table.rows(); ++i) index[table.trial_ids[i]] = i;
  std::vector<float> counts(size_t(table.rows()) * kAvatarCount, 0.0f);
  for (const auto& r : records) {
    if (r.timed_out() || r.trial.practice()) continue;
    const auto it = index.find(r.trial.trial_id);
    require(it != index.end(), "record refers to unknown trial " + std::to_string(r.trial.trial_id),
            ErrorCode::kFormat);
    counts[size_t(it->second) * kAvatarCount + r.response] += 1.0f;
  }
  return counts;
}

std::vector<double> train_fusion(Network<float>& fusion, const FeatureTable& table,
                                 std::span<const float> counts, const FusionOptions& o) {
  require(o.epochs > 0 && o.batch_size > 0, "epochs and batch size must be positive");
  require(counts.size() == size_t(table.rows()) * kAvatarCount, "counts must match the table",
          ErrorCode::kShapeMismatch);
  require(fusion.input_shape() == Shape{table.dim}, "fusion input width mismatch",
          ErrorCode::kShapeMismatch);
  std::vector<int> rows;
  for (int i = 0; i < table.rows(); ++i) {
    float total = 0.0f;
    for (int k = 0; k < kAvatarCount; ++k) total += counts[size_t(i) * kAvatarCount + k];
    if (total > 0.0f) rows.push_back(i);
  }
  require(!rows.empty(), "no training records for the fusion net");

  AdamState<float> adam;
  adam.learning_rate = o.learning_rate;
  Rng dropout_rng(mix_seed(o.seed, 0xd40));
  std::vector<double> losses;
  for (int epoch = 0; epoch < o.epochs; ++epoch) {
    Rng order_rng(mix_seed(o.seed, epoch));
    order_rng.shuffle(rows.begin(), rows.end());
    double weighted = 0.0, records = 0.0;
    for (size_t start = 0; start < rows.size(); start += o.batch_size) {
      const size_t end = std::min(rows.size(), start + o.batch_size);
      const int b = static_cast<int>(end - start);
      Tensor<float> x({b, table.dim});
      std::vector<float> c(size_t(b) * kAvatarCount);
      double batch_records = 0.0;
      for (int i = 0; i < b; ++i) {
        const int r = rows[start + i];
        const auto src = table.row(r);
        std::copy(src.begin(), src.end(), x.ptr() + size_t(i) * table.dim);
        for (int k = 0; k < kAvatarCount; ++k) {
          c[size_t(i) * kAvatarCount + k] = counts[size_t(r) * kAvatarCount + k];
          batch_records += counts[size_t(r) * kAvatarCount + k];
        }
      }
      fusion.zero_grad();
      const Tensor<float> logits = fusion.forward(x, Mode::kTraining, dropout_rng);
      const auto loss = softmax_cross_entropy_counts<float>(logits, c);
      fusion.backward(loss.grad, false);
      auto ps = fusion.params();
      adam_step<float>(adam, ps);
      weighted += loss.loss * batch_records;
      records += batch_records;
    }
    losses.push_back(weighted / records);
  }
  return losses;
}

std::array<double, kAvatarCount> infer(Network<float>& fusion, std::span<const float> features) {
  require(features.size() == shape_size(fusion.input_shape()), "feature width mismatch",
          ErrorCode::kShapeMismatch);
  Tensor<float> x({1, static_cast<int>(features.size())});
  std::copy(features.begin(), features.end(), x.ptr());
  Rng rng(0);
  const Tensor<float> logits = fusion.forward(x, Mode::kInference, rng);
  require(logits.size() == kAvatarCount, "fusion net must emit four logits", ErrorCode::kShapeMismatch);
  std::array<double, kAvatarCount> z{};
  for (int i = 0; i < kAvatarCount; ++i) z[i] = logits.data[i];
  const auto p = softmax_row<double>(z);
  std::array<double, kAvatarCount> out{};
  std::copy(p.begin(), p.end(), out.begin());
  return out;
}

int argmax(const std::array<double, kAvatarCount>& probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::vector<FoldResult> loocv(const BehavioralDataset& data, const FeatureTable& table,
                              const LoocvOptions& o) {
  const auto subjects = data.subjects();
  require(subjects.size() >= 2, "leave-one-out needs at least two subjects", ErrorCode::kFormat);
  require(o.folds >= 1 && size_t(o.folds) <= subjects.size(),
          "fold count must lie in [1, subject count]");
  std::vector<FoldResult> results;
  for (int fold = 0; fold < o.folds; ++fold) {
    const std::string& held = subjects[fold];
    std::vector<ResponseRecord> train;
    std::vector<const ResponseRecord*> test;
    for (const auto& r : data.records) {
      if (r.trial.practice()) continue;
      if (r.subject_id == held) {
        test.push_back(&r);
      } else if (!r.timed_out()) {
        train.push_back(r);
      }
    }
    FoldResult fr;
    fr.subject_id = held;
    fr.training_records = static_cast<int>(train.size());
    FusionOptions fo = o.fusion;
    fo.seed = o.fusion.seed + fold;
    Network<float> fusion = build_fusion(table.dim, fo.seed, o.dropout_rate);
    fr.losses = train_fusion(fusion, table, response_counts(table, train), fo);

    std::unordered_map<int, std::array<double, kAvatarCount>> cache;
    for (const ResponseRecord* r : test) {
      auto it = cache.find(r->trial.trial_id);
      if (it == cache.end()) {
        const int row = table.index_of(r->trial.trial_id);
        require(row >= 0, "held-out trial missing from the feature table", ErrorCode::kFormat);
        it = cache.emplace(r->trial.trial_id, infer(fusion, table.row(row))).first;
      }
      ResponseRecord m;
      m.subject_id = held;
      m.trial = r->trial;
      m.probs = it->second;
      m.response = argmax(it->second);
      m.reaction_ms = 0;
      m.source = Source::kModel;
      fr.responses.push_back(std::move(m));
    }
    results.push_back(std::move(fr));
  }
  return results;
}

}  // namespace xmodal
