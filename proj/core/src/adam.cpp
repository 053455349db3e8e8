// Copyright 2026 The Psychstate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "psychstate/error.hpp"
#include "psychstate/fusion.hpp"

namespace psychstate::fusion {

AdamState AdamState::for_params(const ModelParams& p) {
  return {p.zeros_like(), p.zeros_like(), 0};
}

void adam_update(const std::vector<TensorView>& p, const std::vector<TensorView>& g,
                 const std::vector<TensorView>& m, const std::vector<TensorView>& v, long t, double lr) {
  if (t < 1) throw ConfigError("Adam step index must be >= 1");
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw DimensionError("Adam state does not match the parameters");
  }
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k].size() != p[k].size()) throw DimensionError("gradient shape mismatch for " + p[k].name);
    for (Eigen::Index i = 0; i < p[k].size(); ++i) {
      const double gi = g[k].data[i];
      double& mi = m[k].data[i];
      double& vi = v[k].data[i];
      mi = kAdamBeta1 * mi + (1.0 - kAdamBeta1) * gi;
      vi = kAdamBeta2 * vi + (1.0 - kAdamBeta2) * gi * gi;
      p[k].data[i] -= lr * (mi / c1) / (std::sqrt(vi / c2) + kAdamEps);
    }
  }
}

void adam_step(ModelParams& params, ModelParams& grads, AdamState& state, long t, double lr) {
  adam_update(params.tensors(), grads.tensors(), state.m.tensors(), state.v.tensors(), t, lr);
  state.t = t;
}

}  // namespace psychstate::fusion
