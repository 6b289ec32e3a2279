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

#include "xmodal/gradient_check.hpp"

#include <algorithm>
#include <cmath>

namespace xmodal {

GradientCheckResult gradient_check(Network<double>& net, const Tensor<double>& input,
                                   std::span<const int> targets, double epsilon, Mode mode,
                                   uint64_t seed) {
  require(epsilon > 0.0, "epsilon must be positive");
  Rng rng(seed);
  net.freeze_dropout_masks(false);
  net.zero_grad();
  const Tensor<double> logits = net.forward(input, mode, rng, /*keep_activations=*/true);
  net.freeze_dropout_masks(true);
  const auto loss = softmax_cross_entropy<double>(logits, targets);
  net.backward(loss.grad);

  GradientCheckResult result;
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const Tensor<double> start = net.activation(l);
    for (auto* p : net.layer(l).params()) {
      const auto analytic = p->grad.data;
      for (size_t i = 0; i < p->value.size(); ++i) {
        double& w = p->value.data[i];
        const double saved = w;
        w = saved + epsilon;
        const double up = softmax_cross_entropy<double>(net.forward_from(l, start, mode, rng), targets).loss;
        w = saved - epsilon;
        const double down = softmax_cross_entropy<double>(net.forward_from(l, start, mode, rng), targets).loss;
        w = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic[i] - numeric) / denom);
        ++result.parameters_checked;
      }
    }
  }
  net.freeze_dropout_masks(false);
  return result;
}

}  // namespace xmodal
