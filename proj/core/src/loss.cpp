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

#include "fusion_internal.hpp"
#include "psychstate/error.hpp"

namespace psychstate::fusion {

ClassWeights unit_weights() {
  ClassWeights w;
  for (auto& row : w) row.fill(1.0);
  return w;
}

ClassWeights inverse_frequency_weights(const std::vector<RecordFeatures>& records) {
  ClassWeights w = unit_weights();
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    std::array<double, kNumLevels> count{};
    for (const auto& r : records) count[index(r.labels[k])] += 1.0;
    double largest = 0.0;
    for (std::size_t j = 0; j < kNumLevels; ++j) {
      w[k][j] = count[j] > 0.0 ? 1.0 / count[j] : 0.0;
      largest = std::max(largest, w[k][j]);
    }
    if (largest == 0.0) {
      w[k].fill(1.0);
      continue;
    }
    double sum = 0.0;
    for (auto& x : w[k]) {
      if (x == 0.0) x = largest;
      sum += x;
    }
    for (auto& x : w[k]) x *= static_cast<double>(kNumLevels) / sum;
  }
  return w;
}

double focal_loss(const Prediction& prediction, const StateLabels& labels, double gamma,
                  const ClassWeights& alpha) {
  double loss = 0.0;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const std::size_t y = index(labels[k]);
    const double p = std::clamp(prediction.probs[k][y], kProbFloor, 1.0 - kProbFloor);
    loss += -alpha[k][y] * std::pow(1.0 - p, gamma) * std::log(p);
  }
  return loss;
}

Eigen::Vector3d focal_logit_gradient(const std::array<double, kNumLevels>& probs, Level label,
                                     double gamma, double alpha) {
  const std::size_t y = index(label);
  const double p = probs[y];
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  if (p < kProbFloor || p > 1.0 - kProbFloor) return g;  // clamp is flat there
  const double q = 1.0 - p;
  double dldp = std::pow(q, gamma) / p;
  if (gamma != 0.0) dldp -= gamma * std::pow(q, gamma - 1.0) * std::log(p);
  dldp *= -alpha;
  for (std::size_t j = 0; j < kNumLevels; ++j) {
    const double delta = j == y ? 1.0 : 0.0;
    g(static_cast<Eigen::Index>(j)) = dldp * p * (delta - probs[j]);
  }
  return g;
}

namespace {

DropoutState dropout_for(double rate, std::uint64_t seed, std::size_t position) {
  return DropoutState(rate, CounterRng(seed, position));
}

}  // namespace

BatchResult backward(const std::vector<const RecordFeatures*>& batch, const ModelParams& params,
                     const LossConfig& loss, double dropout_rate, std::uint64_t dropout_seed) {
  if (batch.empty()) throw TrainingError("empty batch");
  BatchResult out;
  out.grads = params.zeros_like();
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const RecordFeatures& rec = *batch[i];
    DropoutState dropout = dropout_for(dropout_rate, dropout_seed, i);
    const auto cache = detail::forward(params, rec, &dropout);
    out.loss += focal_loss(cache.prediction, rec.labels, loss.gamma, loss.alpha);
    std::array<Eigen::Vector3d, kNumDimensions> dlogits;
    for (std::size_t k = 0; k < kNumDimensions; ++k) {
      const Level y = rec.labels[k];
      dlogits[k] = scale * focal_logit_gradient(cache.prediction.probs[k], y, loss.gamma,
                                                loss.alpha[k][index(y)]);
    }
    detail::backward(params, rec, cache, dlogits, out.grads);
  }
  out.loss *= scale;
  return out;
}

namespace detail {

double batch_loss_with_pattern(const std::vector<const RecordFeatures*>& batch, const ModelParams& params,
                               const LossConfig& loss, double dropout_rate, std::uint64_t dropout_seed,
                               std::vector<bool>& pattern) {
  if (batch.empty()) throw TrainingError("empty batch");
  pattern.clear();
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    DropoutState dropout = dropout_for(dropout_rate, dropout_seed, i);
    const auto cache = forward(params, *batch[i], &dropout);
    total += focal_loss(cache.prediction, batch[i]->labels, loss.gamma, loss.alpha);
    for (Eigen::Index j = 0; j < cache.pre.size(); ++j) pattern.push_back(cache.pre.data()[j] > 0.0);
    for (std::size_t k = 0; k < kNumDimensions; ++k) {
      const double p = cache.prediction.probs[k][index(batch[i]->labels[k])];
      pattern.push_back(p < kProbFloor || p > 1.0 - kProbFloor);
    }
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace detail

double batch_loss(const std::vector<const RecordFeatures*>& batch, const ModelParams& params,
                  const LossConfig& loss, double dropout_rate, std::uint64_t dropout_seed) {
  std::vector<bool> pattern;
  return detail::batch_loss_with_pattern(batch, params, loss, dropout_rate, dropout_seed, pattern);
}

}  // namespace psychstate::fusion
