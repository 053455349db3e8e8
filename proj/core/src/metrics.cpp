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
#include "psychstate/eval.hpp"

namespace psychstate::eval {
namespace {

void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw DimensionError("metrics need a non-empty confusion matrix");
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

long row_sum(const ConfusionMatrix& cm, std::size_t i) {
  long s = 0;
  for (long v : cm.counts[i]) s += v;
  return s;
}

long col_sum(const ConfusionMatrix& cm, std::size_t j) {
  long s = 0;
  for (const auto& row : cm.counts) s += row[j];
  return s;
}

double precision(const ConfusionMatrix& cm, std::size_t c) {
  return ratio(static_cast<double>(cm.counts[c][c]), static_cast<double>(col_sum(cm, c)));
}

double recall(const ConfusionMatrix& cm, std::size_t c) {
  return ratio(static_cast<double>(cm.counts[c][c]), static_cast<double>(row_sum(cm, c)));
}

}  // namespace

long ConfusionMatrix::total() const {
  long s = 0;
  for (const auto& row : counts) {
    for (long v : row) s += v;
  }
  return s;
}

ConfusionMatrix confusion(const std::vector<Level>& truth, const std::vector<Level>& predicted) {
  if (truth.size() != predicted.size()) throw DimensionError("label and prediction counts differ");
  if (truth.empty()) throw DimensionError("confusion matrix needs at least one record");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

DimensionConfusion confusion(const std::vector<StateLabels>& truth,
                             const std::vector<Prediction>& predictions) {
  if (truth.size() != predictions.size()) throw DimensionError("label and prediction counts differ");
  if (truth.empty()) throw DimensionError("confusion matrix needs at least one record");
  DimensionConfusion out{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (Dimension d : kAllDimensions) out[index(d)].add(truth[i][index(d)], predictions[i].argmax(d));
  }
  return out;
}

double accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  long diag = 0;
  for (std::size_t c = 0; c < kNumLevels; ++c) diag += cm.counts[c][c];
  return static_cast<double>(diag) / static_cast<double>(cm.total());
}

double macro_precision(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double s = 0.0;
  for (std::size_t c = 0; c < kNumLevels; ++c) s += precision(cm, c);
  return s / kNumLevels;
}

double macro_recall(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double s = 0.0;
  for (std::size_t c = 0; c < kNumLevels; ++c) s += recall(cm, c);
  return s / kNumLevels;
}

double macro_f1(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double s = 0.0;
  for (std::size_t c = 0; c < kNumLevels; ++c) {
    const double p = precision(cm, c);
    const double r = recall(cm, c);
    s += ratio(2.0 * p * r, p + r);
  }
  return s / kNumLevels;
}

double cohen_kappa(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  const double n = static_cast<double>(cm.total());
  const double po = accuracy(cm);
  double pe = 0.0;
  for (std::size_t c = 0; c < kNumLevels; ++c) {
    pe += static_cast<double>(row_sum(cm, c)) * static_cast<double>(col_sum(cm, c));
  }
  pe /= n * n;
  if (pe == 1.0) return 0.0;
  return (po - pe) / (1.0 - pe);
}

Metrics metrics(const ConfusionMatrix& cm) {
  return {accuracy(cm), macro_precision(cm), macro_recall(cm), macro_f1(cm), cohen_kappa(cm)};
}

Metrics mean_over_dimensions(const std::array<Metrics, kNumDimensions>& dims) {
  Metrics m;
  for (const auto& d : dims) {
    m.accuracy += d.accuracy;
    m.precision += d.precision;
    m.recall += d.recall;
    m.f1 += d.f1;
    m.kappa += d.kappa;
  }
  const double n = kNumDimensions;
  return {m.accuracy / n, m.precision / n, m.recall / n, m.f1 / n, m.kappa / n};
}

FoldResult score_fold(int fold, const std::vector<StateLabels>& truth,
                      const std::vector<Prediction>& predictions) {
  FoldResult r;
  r.fold = fold;
  r.confusion = confusion(truth, predictions);
  for (std::size_t k = 0; k < kNumDimensions; ++k) r.dimensions[k] = metrics(r.confusion[k]);
  return r;
}

Metrics MetricsReport::mean() const {
  Metrics m;
  if (folds.empty()) return m;
  for (const auto& f : folds) {
    const Metrics o = f.overall();
    m.accuracy += o.accuracy;
    m.precision += o.precision;
    m.recall += o.recall;
    m.f1 += o.f1;
    m.kappa += o.kappa;
  }
  const double n = static_cast<double>(folds.size());
  return {m.accuracy / n, m.precision / n, m.recall / n, m.f1 / n, m.kappa / n};
}

Metrics MetricsReport::stddev() const {
  Metrics s;
  if (folds.size() < 2) return s;
  const Metrics mu = mean();
  for (const auto& f : folds) {
    const Metrics o = f.overall();
    s.accuracy += std::pow(o.accuracy - mu.accuracy, 2);
    s.precision += std::pow(o.precision - mu.precision, 2);
    s.recall += std::pow(o.recall - mu.recall, 2);
    s.f1 += std::pow(o.f1 - mu.f1, 2);
    s.kappa += std::pow(o.kappa - mu.kappa, 2);
  }
  const double d = static_cast<double>(folds.size() - 1);
  return {std::sqrt(s.accuracy / d), std::sqrt(s.precision / d), std::sqrt(s.recall / d),
          std::sqrt(s.f1 / d), std::sqrt(s.kappa / d)};
}

std::array<Metrics, kNumDimensions> MetricsReport::per_dimension() const {
  std::array<Metrics, kNumDimensions> out{};
  if (folds.empty()) return out;
  const double n = static_cast<double>(folds.size());
  for (const auto& f : folds) {
    for (std::size_t k = 0; k < kNumDimensions; ++k) {
      out[k].accuracy += f.dimensions[k].accuracy / n;
      out[k].precision += f.dimensions[k].precision / n;
      out[k].recall += f.dimensions[k].recall / n;
      out[k].f1 += f.dimensions[k].f1 / n;
      out[k].kappa += f.dimensions[k].kappa / n;
    }
  }
  return out;
}

}  // namespace psychstate::eval
