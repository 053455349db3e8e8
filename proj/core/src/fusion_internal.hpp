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

#pragma once

// Forward traces and reverse-mode passes shared by the fusion sources.

#include <array>

#include "psychstate/fusion.hpp"

namespace psychstate::fusion::detail {

/// Activations of one LSTM direction, stored by sequence position.
struct LstmTrace {
  Eigen::MatrixXd gates;  // 4H x T, post-activation (i, f, o, g)
  Eigen::MatrixXd c;      // H x T
  Eigen::MatrixXd h;      // H x T
  bool reverse = false;
};

LstmTrace lstm_run(const LstmWeights& w, const Eigen::MatrixXd& X, bool reverse);

/// Accumulates weight gradients into `grad` and returns d loss / d X.
Eigen::MatrixXd lstm_backward(const LstmWeights& w, LstmWeights& grad, const Eigen::MatrixXd& X,
                              const LstmTrace& trace, const Eigen::MatrixXd& dH);

struct ForwardCache {
  Eigen::MatrixXd x0;    // D x T
  LstmTrace f1, b1;
  Eigen::MatrixXd o1;    // 2H x T
  Eigen::MatrixXd pre;   // projection pre-activation
  Eigen::MatrixXd mask;  // dropout mask (empty when inactive)
  Eigen::MatrixXd z;     // layer-2 input
  LstmTrace f2, b2;
  Eigen::MatrixXd o2;    // 2H x T
  Eigen::MatrixXd att;   // tanh(W_a o2)
  Attention attention;
  std::array<Eigen::Vector3d, kNumDimensions> logits;
  Prediction prediction;
};

ForwardCache forward(const ModelParams& params, const RecordFeatures& features, DropoutState* dropout);

void backward(const ModelParams& params, const RecordFeatures& features, const ForwardCache& cache,
              const std::array<Eigen::Vector3d, kNumDimensions>& dlogits, ModelParams& grads);

/// Mean batch loss plus the ReLU on/off pattern of every record, so callers
/// can tell whether a perturbation crossed a kink.
double batch_loss_with_pattern(const std::vector<const RecordFeatures*>& batch, const ModelParams& params,
                               const LossConfig& loss, double dropout_rate, std::uint64_t dropout_seed,
                               std::vector<bool>& pattern);

Eigen::Vector3d softmax3(const Eigen::Vector3d& z);

}  // namespace psychstate::fusion::detail
