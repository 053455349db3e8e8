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

#include <algorithm>
#include <cmath>

#include "psychstate/error.hpp"
#include "fusion_internal.hpp"

namespace psychstate::fusion {

GradCheckReport gradient_check(const ModelParams& params,
                               const std::vector<const RecordFeatures*>& batch,
                               const LossConfig& loss, const GradCheckOptions& options) {
  BatchResult analytic = backward(batch, params, loss, options.dropout, options.seed);
  auto grads = analytic.grads.tensors();
  if (options.corrupt_tensor) {
    const auto it = std::find_if(grads.begin(), grads.end(),
                                 [&](const TensorView& t) { return t.name == *options.corrupt_tensor; });
    if (it == grads.end()) throw LookupError("no parameter tensor named " + *options.corrupt_tensor);
    for (Eigen::Index i = 0; i < it->size(); ++i) it->data[i] += 1e-3 * (1.0 + std::abs(it->data[i]));
  }

  ModelParams probe = params;
  auto tensors = probe.tensors();
  std::vector<bool> base_pattern, pattern;
  detail::batch_loss_with_pattern(batch, probe, loss, options.dropout, options.seed, base_pattern);
  bool smooth = true;
  const auto f = [&] {
    const double v =
        detail::batch_loss_with_pattern(batch, probe, loss, options.dropout, options.seed, pattern);
    smooth = smooth && pattern == base_pattern;
    return v;
  };

  GradCheckReport report;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < tensors[k].size(); ++i) {
      double& x = tensors[k].data[i];
      const double x0 = x;
      double fd = 0.0;
      // A stencil that crosses a ReLU kink or the probability clamp does not
      // estimate the derivative at x0; shrink the step until it stays on one
      // smooth piece.
      for (double h = options.step; h >= options.min_step; h /= 10.0) {
        smooth = true;
        x = x0 + 2 * h;
        const double f2 = f();
        x = x0 + h;
        const double f1 = f();
        x = x0 - h;
        const double fm1 = f();
        x = x0 - 2 * h;
        const double fm2 = f();
        x = x0;
        // Fourth-order central difference.
        fd = (-f2 + 8.0 * f1 - 8.0 * fm1 + fm2) / (12.0 * h);
        if (smooth) break;
        ++report.refined_elements;
      }
      const double err = std::abs(grads[k].data[i] - fd) / std::max(std::abs(fd), 1e-8);
      worst = std::max(worst, err);
    }
    report.per_tensor.emplace_back(tensors[k].name, worst);
    if (k == 0 || worst > report.max_relative_error) {
      report.max_relative_error = worst;
      report.worst_tensor = tensors[k].name;
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

TinyProblem make_tiny_problem(std::uint64_t seed) {
  // Row 6 ("w6") is never used by any record.
  const std::vector<std::string> tokens = {"<UNK>", "w1", "w2", "w3", "w4", "w5", "w6"};
  TinyProblem p{initialize({8, 8}, textproc::Vocabulary::from_tokens(tokens), seed), {}};
  CounterRng rng(seed, 0x74696e79ULL);
  const std::array<int, 4> lengths = {1, 3, 5, 4};
  for (std::size_t r = 0; r < lengths.size(); ++r) {
    RecordFeatures f;
    f.record_id = "tiny" + std::to_string(r);
    for (int t = 0; t < lengths[r]; ++t) f.token_ids.push_back(static_cast<int>(rng.below(6)));
    f.prosody = Eigen::MatrixXd::Zero(kProsodyWidth, lengths[r]);
    f.voiced = r % 2 == 0;
    if (f.voiced) {
      for (Eigen::Index t = 0; t < lengths[r]; ++t) {
        for (Eigen::Index j = 0; j + 1 < kProsodyWidth; ++j) f.prosody(j, t) = rng.normal();
        f.prosody(kProsodyWidth - 1, t) = 1.0;
      }
    }
    for (auto& l : f.labels) l = kAllLevels[rng.below(kNumLevels)];
    p.records.push_back(std::move(f));
  }
  return p;
}

}  // namespace psychstate::fusion
