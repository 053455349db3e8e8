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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "psychstate/features.hpp"
#include "psychstate/rng.hpp"
#include "psychstate/textproc.hpp"
#include "psychstate/types.hpp"

namespace psychstate::fusion {

struct ModelConfig {
  int d_text = 64;
  int hidden = 128;
  /// Embedding rows start uniform in [-embedding_scale, embedding_scale].
  double embedding_scale = 1.0;

  int input_dim() const { return d_text + kProsodyWidth; }
  int width() const { return 2 * hidden; }
};

/// Gate blocks are stacked in the order i, f, o, g: W is 4H x D, U is 4H x H.
struct LstmWeights {
  Eigen::MatrixXd W;
  Eigen::MatrixXd U;
  Eigen::VectorXd b;

  int hidden() const { return static_cast<int>(U.cols()); }
  int input() const { return static_cast<int>(W.cols()); }
};

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// One LSTM step. Throws DimensionError on any shape mismatch.
CellState lstm_cell(const Eigen::VectorXd& x, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                    const LstmWeights& w);

struct Heads {
  std::array<Eigen::MatrixXd, kNumDimensions> M;  // 3 x 2H
  std::array<Eigen::VectorXd, kNumDimensions> b;  // 3
};

/// A named, contiguous view of one parameter tensor (column-major).
struct TensorView {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

struct ModelParams {
  ModelConfig config;
  textproc::EmbeddingTable embedding;
  LstmWeights l1_fwd, l1_bwd;
  Eigen::MatrixXd proj_W;  // 2H x 2H
  Eigen::VectorXd proj_b;
  LstmWeights l2_fwd, l2_bwd;
  Eigen::MatrixXd att_W;  // 2H x 2H
  Eigen::VectorXd att_v;  // 2H
  Heads heads;

  /// Every trainable tensor, in a fixed order shared by the optimizer,
  /// the gradient check and the checkpoint format.
  std::vector<TensorView> tensors();
  std::size_t parameter_count() const;

  /// Same shapes, all zeros (used for gradients and optimizer moments).
  ModelParams zeros_like() const;
  void set_zero();
  bool all_finite() const;
};

ModelParams initialize(const ModelConfig& config, textproc::Vocabulary vocabulary, std::uint64_t seed);

/// Inverted dropout masks drawn lazily from a counter-based stream.
class DropoutState {
 public:
  DropoutState(double rate, CounterRng rng) : rate_(rate), rng_(rng) {}
  double rate() const { return rate_; }
  /// A rows x cols mask with entries in {0, 1/(1-rate)}.
  Eigen::MatrixXd mask(Eigen::Index rows, Eigen::Index cols);

 private:
  double rate_;
  CounterRng rng_;
};

/// D x T fused input: embedding rows stacked over the prosody block.
Eigen::MatrixXd fuse(const ModelParams& params, const RecordFeatures& features);

/// Layer-2 concatenated states (2H x T). `dropout` null means inference.
Eigen::MatrixXd bilstm_forward(const Eigen::MatrixXd& fused, const ModelParams& params,
                               DropoutState* dropout);

struct Attention {
  Eigen::VectorXd context;
  Eigen::VectorXd weights;
};

Attention additive_attention(const Eigen::MatrixXd& hiddens, const Eigen::MatrixXd& W,
                             const Eigen::VectorXd& v);

Prediction classify(const Eigen::VectorXd& context, const Heads& heads);

/// Class weights indexed [dimension][level].
using ClassWeights = std::array<std::array<double, kNumLevels>, kNumDimensions>;
ClassWeights unit_weights();
/// Inverse class frequency per dimension, rescaled to mean 1. Absent classes
/// get the largest weight present.
ClassWeights inverse_frequency_weights(const std::vector<RecordFeatures>& records);

inline constexpr double kProbFloor = 1e-7;

double focal_loss(const Prediction& prediction, const StateLabels& labels, double gamma,
                  const ClassWeights& alpha);

/// d loss / d logits for one dimension's softmax output.
Eigen::Vector3d focal_logit_gradient(const std::array<double, kNumLevels>& probs, Level label,
                                     double gamma, double alpha);

struct LossConfig {
  double gamma = 2.0;
  ClassWeights alpha = unit_weights();
};

struct BatchResult {
  double loss = 0.0;  // mean over the batch
  ModelParams grads;
};

/// Mean focal loss and its exact gradient over `batch`. Dropout masks come
/// from `dropout_seed` (one stream per batch position); pass rate 0 for a
/// deterministic network.
BatchResult backward(const std::vector<const RecordFeatures*>& batch, const ModelParams& params,
                     const LossConfig& loss, double dropout_rate, std::uint64_t dropout_seed);

/// Mean focal loss only, same masks as backward() for the same arguments.
double batch_loss(const std::vector<const RecordFeatures*>& batch, const ModelParams& params,
                  const LossConfig& loss, double dropout_rate, std::uint64_t dropout_seed);

struct AdamState {
  ModelParams m;
  ModelParams v;
  long t = 0;
  static AdamState for_params(const ModelParams& p);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// One Adam update at step t (t >= 1) over matching tensor lists.
void adam_update(const std::vector<TensorView>& params, const std::vector<TensorView>& grads,
                 const std::vector<TensorView>& m, const std::vector<TensorView>& v, long t, double lr);

/// One Adam update at step t (t >= 1).
void adam_step(ModelParams& params, ModelParams& grads, AdamState& state, long t, double lr);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double lr = 1e-4;
  double dropout = 0.3;
  double gamma = 2.0;
  std::optional<ClassWeights> alpha;
  std::uint64_t seed = 42;
  double max_grad_norm = 0.0;  // 0 disables clipping
  ModelConfig model;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::array<double, kNumDimensions> val_f1{};
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

TrainResult train(const std::vector<RecordFeatures>& train_set,
                  const std::vector<RecordFeatures>& val_set, const textproc::Vocabulary& vocabulary,
                  const TrainConfig& config);

struct Inference {
  Prediction prediction;
  Eigen::VectorXd attention;
};

Inference predict(const ModelParams& params, const RecordFeatures& features);
std::vector<Prediction> predict_all(const ModelParams& params, const std::vector<RecordFeatures>& set);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

/// Everything inference needs: weights (embedding included), vocabulary and
/// prosody normalization.
struct Checkpoint {
  ModelParams params;
  prosody::NormalizationStats stats;
};

inline constexpr std::string_view kCheckpointMagic = "PSYM1";

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::vector<std::pair<std::string, double>> per_tensor;  // max relative error per tensor
  /// Stencils retried with a smaller step because they crossed a kink.
  std::size_t refined_elements = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-3;
  double min_step = 1e-7;
  double dropout = 0.3;
  std::uint64_t seed = 7;
  /// Test hook: adds this offset to the analytic gradient of the named
  /// tensor so the check must fail and name it.
  std::optional<std::string> corrupt_tensor;
};

/// Compares analytic gradients against a fourth-order central difference on
/// every parameter element: |g - g_fd| / max(|g_fd|, 1e-8).
GradCheckReport gradient_check(const ModelParams& params,
                               const std::vector<const RecordFeatures*>& batch,
                               const LossConfig& loss, const GradCheckOptions& options = {});

/// Tiny model (H=8, d_text=8), batch of 4 random sequences of length 1..5.
struct TinyProblem {
  ModelParams params;
  std::vector<RecordFeatures> records;
};
TinyProblem make_tiny_problem(std::uint64_t seed);

}  // namespace psychstate::fusion
