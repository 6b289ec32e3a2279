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
#include <memory>
#include <span>
#include <vector>

#include "xmodal/rng.hpp"
#include "xmodal/tensor.hpp"

namespace xmodal {

enum class LayerKind : uint32_t {
  kConv2d = 1,
  kMaxPool2x2 = 2,
  kReLU = 3,
  kDropout = 4,
  kDense = 5,
  kSoftmax = 6,
};

enum class Mode { kTraining, kInference };

// Enough to rebuild a layer without its weights.
struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  int in = 0;       // input channels (conv) or input features (dense)
  int out = 0;      // output channels (conv) or units (dense)
  int stride = 1;
  int padding = 0;
  float rate = 0.0f;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerSpec spec() const = 0;
  // Per-example output shape for a per-example input shape.
  virtual Shape output_shape(const Shape& in) const = 0;
  // `in` and `out` carry a leading batch dimension. Layers cache what their
  // backward pass needs.
  virtual void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) = 0;
  // Accumulates parameter gradients; writes the input gradient when asked.
  virtual void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) = 0;
  virtual std::vector<Param<T>*> params() { return {}; }
  virtual std::unique_ptr<Layer<T>> clone() const = 0;
};

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec);

// 3x3 cross-correlation, weights [out, in, 3, 3], bias [out].
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(int in_channels, int out_channels, int stride, int padding);
  LayerSpec spec() const override;
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) override;
  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override;
  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  int in_, out_, stride_, padding_;
  Param<T> weight_;
  Param<T> bias_;
  Tensor<T> input_;
};

// 2x2 max pooling with stride 2. Odd trailing rows/columns are dropped; the
// gradient goes to the first maximum in row-major order.
template <typename T>
class MaxPool2x2 final : public Layer<T> {
 public:
  LayerSpec spec() const override { return {LayerKind::kMaxPool2x2}; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) override;
  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2x2>(*this); }

 private:
  Shape in_dims_;
  std::vector<uint32_t> argmax_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  LayerSpec spec() const override { return {LayerKind::kReLU}; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) override;
  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  Tensor<T> output_;
};

// Inverted dropout: survivors are scaled by 1/(1-rate) in training, identity
// at inference. A frozen mask is reused across forward passes.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(float rate);
  LayerSpec spec() const override;
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) override;
  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }

  void freeze_mask(bool frozen) { frozen_ = frozen; }
  const std::vector<T>& mask() const { return mask_; }

 private:
  float rate_;
  bool frozen_ = false;
  bool active_ = false;
  std::vector<T> mask_;
};

// Affine map over the flattened per-example input; weights [out, in].
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(int in_features, int units);
  LayerSpec spec() const override;
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) override;
  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override;
  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  int in_, out_;
  Param<T> weight_;
  Param<T> bias_;
  Tensor<T> input_;
};

// Row-wise max-subtracted softmax over the flattened per-example input.
template <typename T>
class Softmax final : public Layer<T> {
 public:
  LayerSpec spec() const override { return {LayerKind::kSoftmax}; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) override;
  void backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Softmax>(*this); }

 private:
  Tensor<T> output_;
};

// Functional forms of the layer kernels, used directly by tests.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                 int stride, int padding = 0);
template <typename T>
Tensor<T> maxpool2x2(const Tensor<T>& input);
template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);
template <typename T>
Tensor<T> dropout(const Tensor<T>& input, float rate, Mode mode, uint64_t seed);

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d logits
};

// Mean cross-entropy over the batch; logits are [N, K].
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> targets);

// Cross-entropy against response counts ([N, K], nonnegative), normalized by
// the total count. Equals the per-record loss summed over all records that
// share an input.
template <typename T>
LossResult<T> softmax_cross_entropy_counts(const Tensor<T>& logits, std::span<const T> counts);

template <typename T>
std::vector<T> softmax_row(std::span<const T> logits);

}  // namespace xmodal
