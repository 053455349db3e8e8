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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "psychstate/corpus.hpp"
#include "psychstate/features.hpp"
#include "psychstate/fusion.hpp"
#include "psychstate/types.hpp"

namespace psychstate::eval {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<long, kNumLevels>, kNumLevels> counts{};

  long total() const;
  void add(Level truth, Level predicted) { ++counts[index(truth)][index(predicted)]; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

using DimensionConfusion = std::array<ConfusionMatrix, kNumDimensions>;

/// Predicted class = Prediction::argmax (ties to the lower index). Throws
/// DimensionError on a length mismatch or empty input.
DimensionConfusion confusion(const std::vector<StateLabels>& truth,
                             const std::vector<Prediction>& predictions);
ConfusionMatrix confusion(const std::vector<Level>& truth, const std::vector<Level>& predicted);

// All of these throw DimensionError on an empty matrix. Per-class 0/0 is 0.
double accuracy(const ConfusionMatrix& cm);
double macro_precision(const ConfusionMatrix& cm);
double macro_recall(const ConfusionMatrix& cm);
double macro_f1(const ConfusionMatrix& cm);
/// p_e == 1 gives 0.
double cohen_kappa(const ConfusionMatrix& cm);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
};

Metrics metrics(const ConfusionMatrix& cm);
/// Unweighted mean of the four per-dimension metrics.
Metrics mean_over_dimensions(const std::array<Metrics, kNumDimensions>& dims);

struct FoldResult {
  int fold = 0;
  DimensionConfusion confusion{};
  std::array<Metrics, kNumDimensions> dimensions{};
  Metrics overall() const { return mean_over_dimensions(dimensions); }
};

FoldResult score_fold(int fold, const std::vector<StateLabels>& truth,
                      const std::vector<Prediction>& predictions);

struct MetricsReport {
  std::string model;
  std::vector<FoldResult> folds;

  /// Mean over folds of the per-dimension mean.
  Metrics mean() const;
  /// Sample standard deviation across folds of the per-dimension mean (0
  /// for a single fold).
  Metrics stddev() const;
  /// Per-dimension mean across folds.
  std::array<Metrics, kNumDimensions> per_dimension() const;
};

// ---------------------------------------------------------------------------
// Baselines

/// Mean-pooled token embeddings followed by the four softmax heads, trained
/// with the same focal loss and Adam settings as the fusion model.
struct TextOnlyModel {
  textproc::EmbeddingTable embedding;
  fusion::Heads heads;

  std::vector<fusion::TensorView> tensors();
  TextOnlyModel zeros_like() const;
};

TextOnlyModel initialize_text_only(const textproc::Vocabulary& vocabulary, int d_text, std::uint64_t seed,
                                   double embedding_scale = 0.05);
Prediction predict(const TextOnlyModel& model, const RecordFeatures& features);
double text_only_loss(const TextOnlyModel& model, const std::vector<const RecordFeatures*>& batch,
                      const fusion::LossConfig& loss);
/// Mean focal loss over `batch` and its gradient.
double text_only_backward(const TextOnlyModel& model, const std::vector<const RecordFeatures*>& batch,
                          const fusion::LossConfig& loss, TextOnlyModel& grads);
TextOnlyModel train_text_only(const std::vector<RecordFeatures>& train_set,
                              const textproc::Vocabulary& vocabulary, const fusion::TrainConfig& config);

struct SvmConfig {
  double lambda = 1e-3;
  int epochs = 200;
  std::uint64_t seed = 42;
};

/// One-vs-rest linear SVMs on clip-level prosody; one weight row per
/// (dimension, class) with the bias as the last column.
struct ProsodySvm {
  std::array<Eigen::MatrixXd, kNumDimensions> weights;  // 3 x (F + 1)

  std::array<Eigen::Vector3d, kNumDimensions> decision(const Eigen::VectorXd& x) const;
};

/// Pegasos-style subgradient descent on hinge loss + (lambda/2)||w||^2.
Eigen::VectorXd train_binary_svm(const std::vector<Eigen::VectorXd>& xs, const std::vector<int>& ys,
                                 const SvmConfig& config, std::uint64_t stream);
double mean_hinge_loss(const Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& xs,
                       const std::vector<int>& ys);

ProsodySvm train_prosody_svm(const std::vector<RecordFeatures>& train_set, const SvmConfig& config);
/// Decision values pass through a softmax so the output is a valid
/// Prediction; argmax equals argmax of the decision values.
Prediction predict(const ProsodySvm& model, const RecordFeatures& features);

MetricsReport baseline_text_only(const std::vector<RecordFeatures>& train_set,
                                 const std::vector<RecordFeatures>& test_set,
                                 const textproc::Vocabulary& vocabulary, const fusion::TrainConfig& config);
MetricsReport baseline_prosody_svm(const std::vector<RecordFeatures>& train_set,
                                   const std::vector<RecordFeatures>& test_set, const SvmConfig& config);

// ---------------------------------------------------------------------------
// Evaluation runner

enum class ModelKind { Fusion, TextOnly, ProsodySvm };
std::string_view name(ModelKind kind);

struct Protocol {
  enum class Kind { Split, KFold };
  Kind kind = Kind::Split;
  double test_fraction = 0.2;
  int folds = 5;
  Dimension stratify_by = Dimension::Stress;
};

/// Parses "split" or "kfold<k>" (e.g. "kfold5"). Throws ConfigError.
Protocol parse_protocol(std::string_view text);

struct EvalConfig {
  fusion::TrainConfig train;
  SvmConfig svm;
  int min_count = 2;
};

/// Train/test partitions of a manifest as record-index lists.
struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

std::vector<Partition> partitions(const corpus::DatasetManifest& manifest, const Protocol& protocol,
                                  std::uint64_t seed);

/// Runs every requested model on the same partitions. Features (vocabulary,
/// normalization) are refitted on each training partition.
std::vector<MetricsReport> evaluate(const std::vector<ModelKind>& kinds,
                                    const corpus::DatasetManifest& manifest, const Protocol& protocol,
                                    const EvalConfig& config, std::uint64_t seed);

MetricsReport evaluate(ModelKind kind, const corpus::DatasetManifest& manifest,
                       const Protocol& protocol, const EvalConfig& config, std::uint64_t seed);

/// CSV `model,dimension,fold,accuracy,precision,recall,f1,kappa`: one row per
/// (model, dimension, fold) plus `mean` rows per dimension and `all`.
std::string report_csv(const std::vector<MetricsReport>& reports);
/// Table with one row per model (accuracy, precision, recall, F1, kappa).
std::string report_markdown(const std::vector<MetricsReport>& reports);
std::string confusion_markdown(const std::vector<MetricsReport>& reports);

}  // namespace psychstate::eval
