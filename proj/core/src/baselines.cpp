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
#include <numeric>

#include "psychstate/error.hpp"
#include "psychstate/eval.hpp"

namespace psychstate::eval {
namespace {

constexpr std::uint64_t kStreamTextHeads = 0x7478746865ULL;
constexpr std::uint64_t kStreamTextShuffle = 0x74787473ULL;
constexpr std::uint64_t kStreamSvm = 0x73766dULL;

Eigen::VectorXd mean_embedding(const TextOnlyModel& m, const RecordFeatures& f) {
  if (f.token_ids.empty()) throw SequenceError("empty feature sequence");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m.embedding.vectors.cols());
  for (int id : f.token_ids) e += m.embedding.vectors.row(id).transpose();
  return e / static_cast<double>(f.token_ids.size());
}

Eigen::VectorXd augmented(const RecordFeatures& f) {
  const Eigen::VectorXd p = pooled_prosody(f);
  Eigen::VectorXd x(p.size() + 1);
  x << p, 1.0;
  return x;
}

}  // namespace

std::vector<fusion::TensorView> TextOnlyModel::tensors() {
  std::vector<fusion::TensorView> out;
  auto& e = embedding.vectors;
  out.push_back({"embedding", e.data(), e.rows(), e.cols()});
  for (Dimension d : kAllDimensions) {
    const std::string prefix = "head_" + std::string(key(d));
    auto& M = heads.M[index(d)];
    auto& b = heads.b[index(d)];
    out.push_back({prefix + ".M", M.data(), M.rows(), M.cols()});
    out.push_back({prefix + ".b", b.data(), b.size(), 1});
  }
  return out;
}

TextOnlyModel TextOnlyModel::zeros_like() const {
  TextOnlyModel z = *this;
  for (auto& t : z.tensors()) std::fill(t.data, t.data + t.size(), 0.0);
  return z;
}

TextOnlyModel initialize_text_only(const textproc::Vocabulary& vocabulary, int d_text, std::uint64_t seed,
                                   double embedding_scale) {
  TextOnlyModel m;
  m.embedding = textproc::EmbeddingTable::initialize(vocabulary, d_text, seed, embedding_scale);
  CounterRng rng(seed, kStreamTextHeads);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_text));
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    m.heads.M[k].resize(kNumLevels, d_text);
    for (Eigen::Index c = 0; c < d_text; ++c) {
      for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(kNumLevels); ++r) {
        m.heads.M[k](r, c) = rng.uniform(-bound, bound);
      }
    }
    m.heads.b[k] = Eigen::VectorXd::Zero(kNumLevels);
  }
  return m;
}

Prediction predict(const TextOnlyModel& model, const RecordFeatures& features) {
  return fusion::classify(mean_embedding(model, features), model.heads);
}

double text_only_loss(const TextOnlyModel& model, const std::vector<const RecordFeatures*>& batch,
                      const fusion::LossConfig& loss) {
  double total = 0.0;
  for (const auto* r : batch) total += fusion::focal_loss(predict(model, *r), r->labels, loss.gamma, loss.alpha);
  return total / static_cast<double>(batch.size());
}

double text_only_backward(const TextOnlyModel& model, const std::vector<const RecordFeatures*>& batch,
                          const fusion::LossConfig& loss, TextOnlyModel& grads) {
  if (batch.empty()) throw TrainingError("empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto* r : batch) {
    const Eigen::VectorXd e = mean_embedding(model, *r);
    const Prediction p = fusion::classify(e, model.heads);
    total += fusion::focal_loss(p, r->labels, loss.gamma, loss.alpha);
    Eigen::VectorXd de = Eigen::VectorXd::Zero(e.size());
    for (std::size_t k = 0; k < kNumDimensions; ++k) {
      const Level y = r->labels[k];
      const Eigen::Vector3d g =
          scale * fusion::focal_logit_gradient(p.probs[k], y, loss.gamma, loss.alpha[k][index(y)]);
      grads.heads.M[k].noalias() += g * e.transpose();
      grads.heads.b[k] += g;
      de.noalias() += model.heads.M[k].transpose() * g;
    }
    de /= static_cast<double>(r->token_ids.size());
    for (int id : r->token_ids) grads.embedding.vectors.row(id) += de.transpose();
  }
  return total * scale;
}

TextOnlyModel train_text_only(const std::vector<RecordFeatures>& train_set,
                              const textproc::Vocabulary& vocabulary, const fusion::TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw TrainingError("training split is empty");
  TextOnlyModel model = initialize_text_only(vocabulary, config.model.d_text, config.seed);
  const fusion::LossConfig loss{config.gamma,
                                config.alpha.value_or(fusion::inverse_frequency_weights(train_set))};
  TextOnlyModel m = model.zeros_like();
  TextOnlyModel v = model.zeros_like();
  CounterRng rng(config.seed, kStreamTextShuffle);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const RecordFeatures*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      TextOnlyModel grads = model.zeros_like();
      text_only_backward(model, batch, loss, grads);
      fusion::adam_update(model.tensors(), grads.tensors(), m.tensors(), v.tensors(), ++step, config.lr);
    }
  }
  return model;
}

double mean_hinge_loss(const Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& xs,
                       const std::vector<int>& ys) {
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += std::max(0.0, 1.0 - ys[i] * w.dot(xs[i]));
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

Eigen::VectorXd train_binary_svm(const std::vector<Eigen::VectorXd>& xs, const std::vector<int>& ys,
                                 const SvmConfig& config, std::uint64_t stream) {
  if (xs.empty()) throw TrainingError("SVM training set is empty");
  if (!(config.lambda > 0.0) || config.epochs < 0) throw ConfigError("invalid SVM configuration");
  const Eigen::Index dim = xs.front().size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  CounterRng rng(config.seed, kStreamSvm + stream);
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  const double radius = 1.0 / std::sqrt(config.lambda);
  long t = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      const double eta = 1.0 / (config.lambda * static_cast<double>(++t));
      const bool violated = ys[i] * w.dot(xs[i]) < 1.0;
      w *= 1.0 - eta * config.lambda;
      if (violated) w += eta * ys[i] * xs[i];
      const double n = w.norm();
      if (n > radius) w *= radius / n;
    }
  }
  return w;
}

std::array<Eigen::Vector3d, kNumDimensions> ProsodySvm::decision(const Eigen::VectorXd& x) const {
  std::array<Eigen::Vector3d, kNumDimensions> out;
  for (std::size_t k = 0; k < kNumDimensions; ++k) out[k] = weights[k] * x;
  return out;
}

ProsodySvm train_prosody_svm(const std::vector<RecordFeatures>& train_set, const SvmConfig& config) {
  if (train_set.empty()) throw TrainingError("training split is empty");
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(train_set.size());
  for (const auto& r : train_set) xs.push_back(augmented(r));
  ProsodySvm svm;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    svm.weights[k].resize(kNumLevels, xs.front().size());
    for (std::size_t c = 0; c < kNumLevels; ++c) {
      std::vector<int> ys;
      ys.reserve(train_set.size());
      for (const auto& r : train_set) ys.push_back(index(r.labels[k]) == c ? 1 : -1);
      svm.weights[k].row(static_cast<Eigen::Index>(c)) =
          train_binary_svm(xs, ys, config, k * kNumLevels + c).transpose();
    }
  }
  return svm;
}

Prediction predict(const ProsodySvm& model, const RecordFeatures& features) {
  const auto scores = model.decision(augmented(features));
  Prediction p;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const Eigen::Vector3d e = (scores[k].array() - scores[k].maxCoeff()).exp().matrix();
    const Eigen::Vector3d probs = e / e.sum();
    for (std::size_t j = 0; j < kNumLevels; ++j) p.probs[k][j] = probs(static_cast<Eigen::Index>(j));
  }
  return p;
}

namespace {

template <typename Model>
MetricsReport score(std::string name, const Model& model, const std::vector<RecordFeatures>& test_set) {
  std::vector<StateLabels> truth;
  std::vector<Prediction> preds;
  for (const auto& r : test_set) {
    truth.push_back(r.labels);
    preds.push_back(predict(model, r));
  }
  return {std::move(name), {score_fold(0, truth, preds)}};
}

}  // namespace

MetricsReport baseline_text_only(const std::vector<RecordFeatures>& train_set,
                                 const std::vector<RecordFeatures>& test_set,
                                 const textproc::Vocabulary& vocabulary, const fusion::TrainConfig& config) {
  return score(std::string(name(ModelKind::TextOnly)), train_text_only(train_set, vocabulary, config), test_set);
}

MetricsReport baseline_prosody_svm(const std::vector<RecordFeatures>& train_set,
                                   const std::vector<RecordFeatures>& test_set, const SvmConfig& config) {
  return score(std::string(name(ModelKind::ProsodySvm)), train_prosody_svm(train_set, config), test_set);
}

}  // namespace psychstate::eval
