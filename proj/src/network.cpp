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

#include "xmodal/network.hpp"

#include <cmath>

namespace xmodal {

template <typename T>
Network<T>::Network(Shape input_shape) : input_shape_(std::move(input_shape)) {
  require(!input_shape_.empty(), "network input shape is empty", ErrorCode::kShapeMismatch);
  for (int d : input_shape_) require(d > 0, "network input dims must be positive", ErrorCode::kShapeMismatch);
  shapes_.push_back(input_shape_);
}

template <typename T>
Network<T>::Network(const Network& other)
    : input_shape_(other.input_shape_), shapes_(other.shapes_) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
Network<T>& Network<T>::add(LayerSpec spec) {
  const Shape& cur = shapes_.back();
  if (spec.kind == LayerKind::kConv2d) {
    require(cur.size() == 3, "conv2d needs a C x H x W input, got " + shape_string(cur),
            ErrorCode::kShapeMismatch);
    require(spec.in == 0 || spec.in == cur[0], "conv2d input channels disagree with the graph",
            ErrorCode::kShapeMismatch);
    spec.in = cur[0];
  } else if (spec.kind == LayerKind::kDense) {
    const int features = static_cast<int>(shape_size(cur));
    require(spec.in == 0 || spec.in == features, "dense input width disagrees with the graph",
            ErrorCode::kShapeMismatch);
    spec.in = features;
  }
  auto layer = make_layer<T>(spec);
  Shape next = layer->output_shape(cur);
  layers_.push_back(std::move(layer));
  shapes_.push_back(std::move(next));
  return *this;
}

template <typename T>
Network<T>& Network<T>::conv2d(int out_channels, int stride, int padding) {
  return add({LayerKind::kConv2d, 0, out_channels, stride, padding, 0.0f});
}
template <typename T>
Network<T>& Network<T>::maxpool2x2() { return add({LayerKind::kMaxPool2x2}); }
template <typename T>
Network<T>& Network<T>::relu() { return add({LayerKind::kReLU}); }
template <typename T>
Network<T>& Network<T>::dropout(float rate) {
  LayerSpec s{LayerKind::kDropout};
  s.rate = rate;
  return add(s);
}
template <typename T>
Network<T>& Network<T>::dense(int units) { return add({LayerKind::kDense, 0, units, 1, 0, 0.0f}); }
template <typename T>
Network<T>& Network<T>::softmax() { return add({LayerKind::kSoftmax}); }

template <typename T>
std::vector<LayerSpec> Network<T>::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

template <typename T>
void Network<T>::init_he_uniform(uint64_t seed) {
  for (size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec s = layers_[i]->spec();
    auto ps = layers_[i]->params();
    if (ps.empty()) continue;
    const int fan_in = s.kind == LayerKind::kConv2d ? s.in * 9 : s.in;
    const double limit = std::sqrt(6.0 / fan_in);
    Rng rng(mix_seed(seed, i));
    for (auto& w : ps[0]->value.data) w = static_cast<T>((2.0 * rng.uniform() - 1.0) * limit);
    std::fill(ps[1]->value.data.begin(), ps[1]->value.data.end(), T(0));
  }
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, Mode mode, Rng& rng, bool keep_activations) {
  require(batch.dims.size() == input_shape_.size() + 1 &&
              Shape(batch.dims.begin() + 1, batch.dims.end()) == input_shape_,
          "network expects [N]" + shape_string(input_shape_) + " input, got " +
              shape_string(batch.dims),
          ErrorCode::kShapeMismatch);
  activations_.clear();
  if (keep_activations) activations_.push_back(batch);
  Tensor<T> cur = batch;
  Tensor<T> next;
  for (size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward(cur, next, mode, rng);
    std::swap(cur, next);
    if (keep_activations && i + 1 < layers_.size()) activations_.push_back(cur);
  }
  return cur;
}

template <typename T>
Tensor<T> Network<T>::forward_from(size_t first, const Tensor<T>& in, Mode mode, Rng& rng) {
  require(first <= layers_.size(), "forward_from start is past the last layer");
  Tensor<T> cur = in;
  Tensor<T> next;
  for (size_t i = first; i < layers_.size(); ++i) {
    layers_[i]->forward(cur, next, mode, rng);
    std::swap(cur, next);
  }
  return cur;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_out, bool input_grad) {
  Tensor<T> g = grad_out;
  Tensor<T> gi;
  for (size_t i = layers_.size(); i-- > 0;) {
    const bool want = i > 0 || input_grad;
    layers_[i]->backward(g, want ? &gi : nullptr);
    if (!want) break;
    std::swap(g, gi);
  }
  return input_grad ? g : Tensor<T>();
}

template <typename T>
std::vector<Param<T>*> Network<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& l : layers_) {
    for (auto* p : l->params()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<const Param<T>*> Network<T>::params() const {
  std::vector<const Param<T>*> out;
  for (const auto& l : layers_) {
    for (auto* p : const_cast<Layer<T>&>(*l).params()) out.push_back(p);
  }
  return out;
}

template <typename T>
size_t Network<T>::param_count() const {
  size_t n = 0;
  for (const auto* p : params()) n += p->value.size();
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

template <typename T>
void Network<T>::freeze_dropout_masks(bool frozen) {
  for (auto& l : layers_) {
    if (auto* d = dynamic_cast<Dropout<T>*>(l.get())) d->freeze_mask(frozen);
  }
}

template <typename T>
bool Network<T>::all_finite() const {
  for (const auto* p : params()) {
    for (T v : p->value.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template class Network<float>;
template class Network<double>;

}  // namespace xmodal
