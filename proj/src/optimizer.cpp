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

#include "xmodal/optimizer.hpp"

#include <cmath>

namespace xmodal {

template <typename T>
void adam_step(AdamState<T>& state, std::span<Param<T>* const> params) {
  require(state.learning_rate > 0.0, "learning rate must be positive");
  if (state.m.empty() && state.step == 0) {
    for (const auto* p : params) {
      state.m.emplace_back(p->value.size(), T(0));
      state.v.emplace_back(p->value.size(), T(0));
    }
  }
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          "optimizer state does not match the parameter list", ErrorCode::kShapeMismatch);
  for (size_t i = 0; i < params.size(); ++i) {
    const Param<T>& p = *params[i];
    require(p.grad.size() == p.value.size() && state.m[i].size() == p.value.size(),
            "optimizer moment shape mismatch", ErrorCode::kShapeMismatch);
  }
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, double(state.step));
  const double c2 = 1.0 - std::pow(b2, double(state.step));
  const double lr = state.learning_rate;
  for (size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i]->value.data;
    const auto& g = params[i]->grad.data;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      w[j] = static_cast<T>(w[j] - lr * (mj / c1) / (std::sqrt(vj / c2) + state.epsilon));
    }
  }
}

template void adam_step<float>(AdamState<float>&, std::span<Param<float>* const>);
template void adam_step<double>(AdamState<double>&, std::span<Param<double>* const>);

}  // namespace xmodal
