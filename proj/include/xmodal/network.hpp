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

#include <memory>
#include <vector>

#include "xmodal/layers.hpp"

namespace xmodal {

// Ordered stack of layers with shapes checked as layers are appended.
template <typename T>
class Network {
 public:
  explicit Network(Shape input_shape);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Appends a layer. Input channels/features of conv and dense layers are
  // taken from the current output shape; LayerSpec widths are checked if set.
  Network& add(LayerSpec spec);
  Network& conv2d(int out_channels, int stride = 1, int padding = 0);
  Network& maxpool2x2();
  Network& relu();
  Network& dropout(float rate);
  Network& dense(int units);
  Network& softmax();

  const Shape& input_shape() const { return input_shape_; }
  Shape output_shape() const { return shapes_.back(); }
  // Per-example shape after layer i.
  const Shape& layer_output_shape(size_t i) const { return shapes_.at(i + 1); }
  size_t layer_count() const { return layers_.size(); }
  Layer<T>& layer(size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(size_t i) const { return *layers_.at(i); }
  std::vector<LayerSpec> specs() const;

  void init_he_uniform(uint64_t seed);

  // `batch` is [N, input_shape...]. With keep_activations the input to every
  // layer is retained for forward_from.
  Tensor<T> forward(const Tensor<T>& batch, Mode mode, Rng& rng, bool keep_activations = false);
  // Runs layers [first, end) starting from `in`.
  Tensor<T> forward_from(size_t first, const Tensor<T>& in, Mode mode, Rng& rng);
  // Input of layer i from the last forward with keep_activations.
  const Tensor<T>& activation(size_t i) const { return activations_.at(i); }

  // Backpropagates from the output gradient, accumulating parameter
  // gradients. Returns the input gradient when requested.
  Tensor<T> backward(const Tensor<T>& grad_out, bool input_grad = false);

  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;
  size_t param_count() const;
  void zero_grad();
  void freeze_dropout_masks(bool frozen);
  bool all_finite() const;

  template <typename U>
  Network<U> cast() const {
    Network<U> out(input_shape_);
    for (const auto& s : specs()) out.add(s);
    auto dst = out.params();
    auto src = params();
    for (size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<U>();
    return out;
  }

 private:
  Shape input_shape_;
  std::vector<Shape> shapes_;  // shapes_[0] is the input, shapes_[i + 1] after layer i
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<Tensor<T>> activations_;
};

}  // namespace xmodal
