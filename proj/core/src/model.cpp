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

#include "fusion_internal.hpp"
#include "psychstate/error.hpp"

namespace psychstate::fusion {
namespace {

constexpr std::uint64_t kStreamL1F = 0x6c3166ULL;
constexpr std::uint64_t kStreamL1B = 0x6c3162ULL;
constexpr std::uint64_t kStreamL2F = 0x6c3266ULL;
constexpr std::uint64_t kStreamL2B = 0x6c3262ULL;
constexpr std::uint64_t kStreamProj = 0x70726f6aULL;
constexpr std::uint64_t kStreamAtt = 0x617474ULL;
constexpr std::uint64_t kStreamHeads = 0x6865616473ULL;

void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, double bound, CounterRng& rng) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-bound, bound);
  }
}

LstmWeights init_lstm(int input, int hidden, std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmWeights w;
  w.W.resize(4 * hidden, input);
  w.U.resize(4 * hidden, hidden);
  w.b.resize(4 * hidden);
  fill_uniform(w.W, bound, rng);
  fill_uniform(w.U, bound, rng);
  fill_uniform(w.b, bound, rng);
  // Forget gates start open so early gradients survive the recurrence.
  w.b.segment(hidden, hidden).array() += 1.0;
  return w;
}

void push(std::vector<TensorView>& out, std::string name, Eigen::MatrixXd& m) {
  out.push_back({std::move(name), m.data(), m.rows(), m.cols()});
}

void push(std::vector<TensorView>& out, std::string name, Eigen::VectorXd& v) {
  out.push_back({std::move(name), v.data(), v.size(), 1});
}

void push(std::vector<TensorView>& out, const std::string& prefix, LstmWeights& w) {
  push(out, prefix + ".W", w.W);
  push(out, prefix + ".U", w.U);
  push(out, prefix + ".b", w.b);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& e) {
  const Eigen::VectorXd ex = (e.array() - e.maxCoeff()).exp().matrix();
  return ex / ex.sum();
}

}  // namespace

std::vector<TensorView> ModelParams::tensors() {
  std::vector<TensorView> out;
  push(out, "embedding", embedding.vectors);
  push(out, "l1_fwd", l1_fwd);
  push(out, "l1_bwd", l1_bwd);
  push(out, "proj.W", proj_W);
  push(out, "proj.b", proj_b);
  push(out, "l2_fwd", l2_fwd);
  push(out, "l2_bwd", l2_bwd);
  push(out, "att.W", att_W);
  push(out, "att.v", att_v);
  for (Dimension d : kAllDimensions) {
    const std::string prefix = "head_" + std::string(key(d));
    push(out, prefix + ".M", heads.M[index(d)]);
    push(out, prefix + ".b", heads.b[index(d)]);
  }
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : const_cast<ModelParams*>(this)->tensors()) n += static_cast<std::size_t>(t.size());
  return n;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.set_zero();
  return z;
}

void ModelParams::set_zero() {
  for (auto& t : tensors()) std::fill(t.data, t.data + t.size(), 0.0);
}

bool ModelParams::all_finite() const {
  for (const auto& t : const_cast<ModelParams*>(this)->tensors()) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t.data[i])) return false;
    }
  }
  return true;
}

ModelParams initialize(const ModelConfig& config, textproc::Vocabulary vocabulary, std::uint64_t seed) {
  if (config.d_text < 1 || config.hidden < 1) throw ConfigError("model sizes must be >= 1");
  const int H = config.hidden;
  const int W = config.width();
  ModelParams p;
  p.config = config;
  p.embedding = textproc::EmbeddingTable::initialize(std::move(vocabulary), config.d_text, seed,
                                                     config.embedding_scale);
  p.l1_fwd = init_lstm(config.input_dim(), H, seed, kStreamL1F);
  p.l1_bwd = init_lstm(config.input_dim(), H, seed, kStreamL1B);
  p.l2_fwd = init_lstm(W, H, seed, kStreamL2F);
  p.l2_bwd = init_lstm(W, H, seed, kStreamL2B);

  CounterRng proj_rng(seed, kStreamProj);
  p.proj_W.resize(W, W);
  fill_uniform(p.proj_W, std::sqrt(6.0 / W), proj_rng);  // He-uniform for the ReLU layer
  p.proj_b = Eigen::VectorXd::Zero(W);

  CounterRng att_rng(seed, kStreamAtt);
  const double att_bound = 1.0 / std::sqrt(static_cast<double>(W));
  p.att_W.resize(W, W);
  p.att_v.resize(W);
  fill_uniform(p.att_W, att_bound, att_rng);
  fill_uniform(p.att_v, att_bound, att_rng);

  CounterRng head_rng(seed, kStreamHeads);
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    p.heads.M[k].resize(kNumLevels, W);
    fill_uniform(p.heads.M[k], att_bound, head_rng);
    p.heads.b[k] = Eigen::VectorXd::Zero(kNumLevels);
  }
  return p;
}

Eigen::MatrixXd DropoutState::mask(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  const double keep = 1.0 - rate_;
  const double scale = 1.0 / keep;
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng_.uniform() < keep ? scale : 0.0;
  }
  return m;
}

Eigen::MatrixXd fuse(const ModelParams& params, const RecordFeatures& features) {
  const auto T = static_cast<Eigen::Index>(features.token_ids.size());
  if (T == 0) throw SequenceError("empty feature sequence");
  if (features.prosody.rows() != kProsodyWidth || features.prosody.cols() != T) {
    throw DimensionError("prosody block must be " + std::to_string(kProsodyWidth) + " x T");
  }
  const int d = params.config.d_text;
  const auto& table = params.embedding.vectors;
  Eigen::MatrixXd x(params.config.input_dim(), T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const int id = features.token_ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= table.rows()) throw DimensionError("token id outside the embedding table");
    x.col(t).head(d) = table.row(id).transpose();
  }
  x.bottomRows(kProsodyWidth) = features.prosody;
  return x;
}

Attention additive_attention(const Eigen::MatrixXd& hiddens, const Eigen::MatrixXd& W,
                             const Eigen::VectorXd& v) {
  if (hiddens.cols() == 0) throw SequenceError("attention needs at least one hidden state");
  if (W.cols() != hiddens.rows() || W.rows() != v.size()) throw DimensionError("attention shape mismatch");
  const Eigen::VectorXd e = (v.transpose() * (W * hiddens).array().tanh().matrix()).transpose();
  Attention a;
  a.weights = softmax(e);
  a.context = hiddens * a.weights;
  return a;
}

Prediction classify(const Eigen::VectorXd& context, const Heads& heads) {
  Prediction p;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    if (heads.M[k].cols() != context.size()) throw DimensionError("head width does not match context");
    const Eigen::Vector3d probs = detail::softmax3(heads.M[k] * context + heads.b[k]);
    for (std::size_t j = 0; j < kNumLevels; ++j) p.probs[k][j] = probs(static_cast<Eigen::Index>(j));
  }
  return p;
}

namespace detail {

Eigen::Vector3d softmax3(const Eigen::Vector3d& z) {
  const Eigen::Vector3d e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

ForwardCache forward(const ModelParams& params, const RecordFeatures& features, DropoutState* dropout) {
  ForwardCache c;
  const Eigen::Index H = params.config.hidden;
  c.x0 = fuse(params, features);
  const Eigen::Index T = c.x0.cols();
  c.f1 = lstm_run(params.l1_fwd, c.x0, false);
  c.b1 = lstm_run(params.l1_bwd, c.x0, true);
  c.o1.resize(2 * H, T);
  c.o1 << c.f1.h, c.b1.h;
  c.pre = (params.proj_W * c.o1).colwise() + params.proj_b;
  c.z = c.pre.cwiseMax(0.0);
  if (dropout != nullptr && dropout->rate() > 0.0) {
    c.mask = dropout->mask(c.z.rows(), T);
    c.z = c.z.cwiseProduct(c.mask);
  }
  c.f2 = lstm_run(params.l2_fwd, c.z, false);
  c.b2 = lstm_run(params.l2_bwd, c.z, true);
  c.o2.resize(2 * H, T);
  c.o2 << c.f2.h, c.b2.h;
  c.att = (params.att_W * c.o2).array().tanh().matrix();
  const Eigen::VectorXd e = (params.att_v.transpose() * c.att).transpose();
  c.attention.weights = softmax(e);
  c.attention.context = c.o2 * c.attention.weights;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    c.logits[k] = params.heads.M[k] * c.attention.context + params.heads.b[k];
    const Eigen::Vector3d probs = softmax3(c.logits[k]);
    for (std::size_t j = 0; j < kNumLevels; ++j) c.prediction.probs[k][j] = probs(static_cast<Eigen::Index>(j));
  }
  return c;
}

void backward(const ModelParams& params, const RecordFeatures& features, const ForwardCache& c,
              const std::array<Eigen::Vector3d, kNumDimensions>& dlogits, ModelParams& g) {
  const Eigen::Index H = params.config.hidden;
  const Eigen::VectorXd& ctx = c.attention.context;
  const Eigen::VectorXd& alpha = c.attention.weights;

  Eigen::VectorXd dctx = Eigen::VectorXd::Zero(ctx.size());
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    g.heads.M[k].noalias() += dlogits[k] * ctx.transpose();
    g.heads.b[k] += dlogits[k];
    dctx.noalias() += params.heads.M[k].transpose() * dlogits[k];
  }

  // context = o2 * alpha, alpha = softmax(v^T tanh(W o2)).
  Eigen::MatrixXd do2 = dctx * alpha.transpose();
  const Eigen::VectorXd dalpha = c.o2.transpose() * dctx;
  const Eigen::VectorXd de = alpha.cwiseProduct((dalpha.array() - alpha.dot(dalpha)).matrix());
  g.att_v.noalias() += c.att * de;
  const Eigen::MatrixXd dpre_att =
      (params.att_v * de.transpose()).cwiseProduct((1.0 - c.att.array().square()).matrix());
  g.att_W.noalias() += dpre_att * c.o2.transpose();
  do2.noalias() += params.att_W.transpose() * dpre_att;

  Eigen::MatrixXd dz = lstm_backward(params.l2_fwd, g.l2_fwd, c.z, c.f2, do2.topRows(H));
  dz += lstm_backward(params.l2_bwd, g.l2_bwd, c.z, c.b2, do2.bottomRows(H));
  if (c.mask.size() > 0) dz = dz.cwiseProduct(c.mask);
  const Eigen::MatrixXd dpre = dz.cwiseProduct((c.pre.array() > 0.0).cast<double>().matrix());
  g.proj_W.noalias() += dpre * c.o1.transpose();
  g.proj_b += dpre.rowwise().sum();
  const Eigen::MatrixXd do1 = params.proj_W.transpose() * dpre;

  Eigen::MatrixXd dx = lstm_backward(params.l1_fwd, g.l1_fwd, c.x0, c.f1, do1.topRows(H));
  dx += lstm_backward(params.l1_bwd, g.l1_bwd, c.x0, c.b1, do1.bottomRows(H));
  const int d = params.config.d_text;
  for (std::size_t t = 0; t < features.token_ids.size(); ++t) {
    g.embedding.vectors.row(features.token_ids[t]) +=
        dx.col(static_cast<Eigen::Index>(t)).head(d).transpose();
  }
}

}  // namespace detail

Eigen::MatrixXd bilstm_forward(const Eigen::MatrixXd& fused, const ModelParams& params,
                               DropoutState* dropout) {
  if (fused.cols() == 0) throw SequenceError("empty fused sequence");
  const Eigen::Index H = params.config.hidden;
  const Eigen::Index T = fused.cols();
  const auto f1 = detail::lstm_run(params.l1_fwd, fused, false);
  const auto b1 = detail::lstm_run(params.l1_bwd, fused, true);
  Eigen::MatrixXd o1(2 * H, T);
  o1 << f1.h, b1.h;
  Eigen::MatrixXd z = ((params.proj_W * o1).colwise() + params.proj_b).cwiseMax(0.0);
  if (dropout != nullptr && dropout->rate() > 0.0) z = z.cwiseProduct(dropout->mask(z.rows(), T));
  const auto f2 = detail::lstm_run(params.l2_fwd, z, false);
  const auto b2 = detail::lstm_run(params.l2_bwd, z, true);
  Eigen::MatrixXd o2(2 * H, T);
  o2 << f2.h, b2.h;
  return o2;
}

Inference predict(const ModelParams& params, const RecordFeatures& features) {
  const auto cache = detail::forward(params, features, nullptr);
  return {cache.prediction, cache.attention.weights};
}

std::vector<Prediction> predict_all(const ModelParams& params, const std::vector<RecordFeatures>& set) {
  std::vector<Prediction> out;
  out.reserve(set.size());
  for (const auto& f : set) out.push_back(predict(params, f).prediction);
  return out;
}

}  // namespace psychstate::fusion
