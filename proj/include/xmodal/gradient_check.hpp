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

#include <span>

#include "xmodal/network.hpp"

namespace xmodal {

struct GradientCheckResult {
  double max_rel_error = 0.0;
  size_t parameters_checked = 0;
};

// Compares backprop gradients of the mean softmax cross-entropy against
// central differences on every parameter. The network's last layer must emit
// logits. In training mode dropout masks are drawn once and held fixed.
// Perturbing a layer only re-runs the layers from it onwards.
GradientCheckResult gradient_check(Network<double>& net, const Tensor<double>& input,
                                   std::span<const int> targets, double epsilon = 1e-4,
                                   Mode mode = Mode::kInference, uint64_t seed = 1);

}  // namespace xmodal
