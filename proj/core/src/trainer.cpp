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
#include <fstream>
#include <numeric>

#include "psychstate/error.hpp"
#include "psychstate/eval.hpp"
#include "psychstate/fusion.hpp"

namespace psychstate::fusion {
namespace {

constexpr std::uint64_t kStreamShuffle = 0x73687566ULL;
constexpr std::uint64_t kDropoutSalt = 0x64726f70ULL;

void clip_global_norm(ModelParams& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& t : grads.tensors()) {
    for (Eigen::Index i = 0; i < t.size(); ++i) sq += t.data[i] * t.data[i];
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (auto& t : grads.tensors()) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] *= s;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(max_grad_norm >= 0.0)) throw ConfigError("max_grad_norm must be >= 0");
  if (model.d_text < 1 || model.hidden < 1) throw ConfigError("model sizes must be >= 1");
  if (alpha) {
    for (const auto& row : *alpha) {
      for (double a : row) {
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alpha weights must be positive");
      }
    }
  }
}

TrainResult train(const std::vector<RecordFeatures>& train_set,
                  const std::vector<RecordFeatures>& val_set, const textproc::Vocabulary& vocabulary,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw TrainingError("training split is empty");
  if (val_set.empty()) throw TrainingError("validation split is empty");

  TrainResult result{initialize(config.model, vocabulary, config.seed), {}};
  if (config.epochs == 0) return result;

  const LossConfig loss{config.gamma, config.alpha.value_or(inverse_frequency_weights(train_set))};
  AdamState adam = AdamState::for_params(result.params);
  CounterRng shuffle_rng(config.seed, kStreamShuffle);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const RecordFeatures*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      const std::uint64_t dropout_seed =
          mix64(config.seed ^ kDropoutSalt) ^ mix64((static_cast<std::uint64_t>(epoch) << 32) | batch_index++);
      BatchResult br = backward(batch, result.params, loss, config.dropout, dropout_seed);
      if (!std::isfinite(br.loss)) throw TrainingError("training loss is not finite");
      total += br.loss * static_cast<double>(batch.size());
      if (config.max_grad_norm > 0.0) clip_global_norm(br.grads, config.max_grad_norm);
      adam_step(result.params, br.grads, adam, ++step, config.lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(train_set.size());
    std::vector<StateLabels> truth;
    truth.reserve(val_set.size());
    for (const auto& r : val_set) truth.push_back(r.labels);
    const auto cms = eval::confusion(truth, predict_all(result.params, val_set));
    for (std::size_t k = 0; k < kNumDimensions; ++k) rec.val_f1[k] = eval::macro_f1(cms[k]);
    result.history.push_back(rec);
  }
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write history: " + path.string());
  out << "epoch,train_loss";
  for (Dimension d : kAllDimensions) out << ",f1_" << key(d);
  out << '\n';
  char buf[64];
  for (const auto& r : history) {
    out << r.epoch;
    std::snprintf(buf, sizeof buf, ",%.10f", r.train_loss);
    out << buf;
    for (double f : r.val_f1) {
      std::snprintf(buf, sizeof buf, ",%.6f", f);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace psychstate::fusion
