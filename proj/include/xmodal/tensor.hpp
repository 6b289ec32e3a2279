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

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xmodal/error.hpp"

namespace xmodal {

using Shape = std::vector<int>;

// Storage aligned for the widest vector unit so kernels take the same path
// on every allocation.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

inline size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), size_t{1},
                         [](size_t a, int d) { return a * static_cast<size_t>(d); });
}

std::string shape_string(const Shape& s);

// Dense row-major tensor. The leading dimension is the batch wherever a
// layer consumes one.
template <typename T>
struct Tensor {
  Shape dims;
  AlignedVector<T> data;

  Tensor() = default;
  explicit Tensor(Shape d, T fill = T(0)) : dims(std::move(d)), data(shape_size(dims), fill) {
    for (int x : dims) require(x > 0, "tensor dims must be positive", ErrorCode::kShapeMismatch);
  }

  size_t size() const { return data.size(); }
  int batch() const { return dims.empty() ? 0 : dims[0]; }
  // Elements per batch entry.
  size_t stride0() const { return dims.empty() ? 0 : data.size() / dims[0]; }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  void reshape(Shape d) {
    require(shape_size(d) == data.size(), "reshape changes element count", ErrorCode::kShapeMismatch);
    dims = std::move(d);
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.dims = dims;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

// Trainable parameter with its gradient accumulator.
template <typename T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;

  explicit Param(Shape dims = {1}) : value(dims), grad(dims) {}
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), T(0)); }
};

}  // namespace xmodal
