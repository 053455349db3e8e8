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

#include <gtest/gtest.h>

#include "psychstate/corpus.hpp"
#include "psychstate/error.hpp"
#include "psychstate/features.hpp"
#include "psychstate/fusion.hpp"
#include "psychstate/rng.hpp"
#include "test_support.hpp"

namespace psychstate::fusion {
namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, CounterRng& rng, double scale = 0.5) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

LstmWeights random_lstm(int in, int h, CounterRng& rng) {
  return {random_matrix(4 * h, in, rng), random_matrix(4 * h, h, rng), random_matrix(4 * h, 1, rng)};
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

TEST(LstmCell, MatchesScalarOracle) {
  CounterRng rng(1, 1);
  const int D = 3, H = 2;
  const auto w = random_lstm(D, H, rng);
  const Eigen::VectorXd x = random_matrix(D, 1, rng), h = random_matrix(H, 1, rng), c = random_matrix(H, 1, rng);
  const auto out = lstm_cell(x, h, c, w);
  for (int j = 0; j < H; ++j) {
    // Pre-activation of gate block k for unit j, summed element by element.
    const auto pre = [&](int k) {
      const int row = k * H + j;
      double s = w.b(row);
      for (int d = 0; d < D; ++d) s += w.W(row, d) * x(d);
      for (int u = 0; u < H; ++u) s += w.U(row, u) * h(u);
      return s;
    };
    const double i = sigmoid(pre(0)), f = sigmoid(pre(1)), o = sigmoid(pre(2)), g = std::tanh(pre(3));
    const double c_new = f * c(j) + i * g;
    EXPECT_NEAR(out.c(j), c_new, 1e-12);
    EXPECT_NEAR(out.h(j), o * std::tanh(c_new), 1e-12);
  }
}

TEST(LstmCell, ZeroEverythingGivesZero) {
  const LstmWeights w{Eigen::MatrixXd::Zero(8, 3), Eigen::MatrixXd::Zero(8, 2), Eigen::VectorXd::Zero(8)};
  const auto out = lstm_cell(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), w);
  EXPECT_EQ(out.h, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(out.c, Eigen::VectorXd::Zero(2));
}

TEST(LstmCell, SaturatedGatesKeepCell) {
  CounterRng rng(2, 1);
  auto w = random_lstm(3, 2, rng);
  w.b.segment(0, 2).setConstant(-1e3);  // input gate closed
  w.b.segment(2, 2).setConstant(1e3);   // forget gate open
  const Eigen::VectorXd c = random_matrix(2, 1, rng);
  const auto out = lstm_cell(random_matrix(3, 1, rng), random_matrix(2, 1, rng), c, w);
  EXPECT_NEAR((out.c - c).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(LstmCell, ShapeMismatch) {
  CounterRng rng(3, 1);
  const auto w = random_lstm(3, 2, rng);
  EXPECT_THROW(lstm_cell(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), w),
               DimensionError);
  EXPECT_THROW(lstm_cell(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), w),
               DimensionError);
}

ModelParams small_params(std::uint64_t seed) {
  return initialize({4, 3, 0.5}, textproc::Vocabulary::from_tokens({"a", "b", "c"}), seed);
}

TEST(BiLstm, SingleStepAndEmptySequence) {
  auto p = small_params(1);
  CounterRng rng(4, 1);
  const auto one = random_matrix(p.config.input_dim(), 1, rng);
  const auto out = bilstm_forward(one, p, nullptr);
  EXPECT_EQ(out.rows(), 6);
  EXPECT_EQ(out.cols(), 1);
  EXPECT_THROW(bilstm_forward(Eigen::MatrixXd(p.config.input_dim(), 0), p, nullptr), SequenceError);
}

TEST(BiLstm, ZeroDropoutMatchesInference) {
  auto p = small_params(2);
  CounterRng rng(5, 1);
  const auto x = random_matrix(p.config.input_dim(), 4, rng);
  DropoutState none(0.0, CounterRng(1, 1));
  EXPECT_EQ(bilstm_forward(x, p, &none), bilstm_forward(x, p, nullptr));
}

TEST(BiLstm, ReversalSwapsDirections) {
  const auto p = small_params(3);
  const int H = p.config.hidden;
  CounterRng rng(6, 1);
  const auto x = random_matrix(p.config.input_dim(), 3, rng);
  // Mirror network: forward and backward weights exchanged; the projection
  // undoes the half swap of its input so layer 2 sees the same vectors.
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * H, 2 * H);
  P.topRightCorner(H, H).setIdentity();
  P.bottomLeftCorner(H, H).setIdentity();
  ModelParams q = p;
  std::swap(q.l1_fwd, q.l1_bwd);
  std::swap(q.l2_fwd, q.l2_bwd);
  q.proj_W = p.proj_W * P;
  const Eigen::MatrixXd reversed = x.rowwise().reverse();
  const Eigen::MatrixXd a = bilstm_forward(x, p, nullptr);
  const Eigen::MatrixXd b = bilstm_forward(reversed, q, nullptr);
  const Eigen::MatrixXd expected = (P * a).rowwise().reverse();
  EXPECT_LT((b - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, Properties) {
  CounterRng rng(7, 1);
  const auto W = random_matrix(4, 4, rng);
  const Eigen::VectorXd v = random_matrix(4, 1, rng);
  const Eigen::MatrixXd one = random_matrix(4, 1, rng);
  const auto single = additive_attention(one, W, v);
  EXPECT_DOUBLE_EQ(single.weights(0), 1.0);
  EXPECT_LT((single.context - one.col(0)).norm(), 1e-15);

  const Eigen::MatrixXd same = one.replicate(1, 5);
  const auto uniform = additive_attention(same, W, v);
  for (Eigen::Index t = 0; t < 5; ++t) EXPECT_NEAR(uniform.weights(t), 0.2, 1e-15);

  const auto hs = random_matrix(4, 7, rng, 3.0);
  const auto att = additive_attention(hs, W, v);
  EXPECT_NEAR(att.weights.sum(), 1.0, 1e-9);
  EXPECT_GT(att.weights.minCoeff(), 0.0);
  // Softmax of v . tanh(W h_t), recomputed directly.
  Eigen::VectorXd s(7);
  for (Eigen::Index t = 0; t < 7; ++t) s(t) = v.dot((W * hs.col(t)).array().tanh().matrix());
  const Eigen::VectorXd e = (s.array() - s.maxCoeff()).exp();
  EXPECT_LT((att.weights - e / e.sum()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((att.context - hs * att.weights).cwiseAbs().maxCoeff(), 1e-12);
}

Heads zero_heads(int width) {
  Heads h;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    h.M[d] = Eigen::MatrixXd::Zero(3, width);
    h.b[d] = Eigen::VectorXd::Zero(3);
  }
  return h;
}

TEST(Classify, Properties) {
  const auto p = classify(Eigen::VectorXd::Zero(6), zero_heads(6));
  for (Dimension d : kAllDimensions) {
    for (double v : p[d]) EXPECT_NEAR(v, 1.0 / 3, 1e-15);
  }
  CounterRng rng(8, 1);
  Heads h = zero_heads(6);
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    h.M[d] = random_matrix(3, 6, rng, 2.0);
    h.b[d] = random_matrix(3, 1, rng, 2.0);
  }
  const Eigen::VectorXd ctx = random_matrix(6, 1, rng);
  const auto a = classify(ctx, h);
  EXPECT_TRUE(a.valid(1e-6));
  h.b[1].array() += 17.0;
  const auto b = classify(ctx, h);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a.probs[1][k], b.probs[1][k], 1e-9);
}

Prediction random_prediction(CounterRng& rng) {
  Prediction p;
  for (auto& row : p.probs) {
    double s = 0;
    for (auto& v : row) s += (v = rng.uniform(0.05, 1.0));
    for (auto& v : row) v /= s;
  }
  return p;
}

StateLabels random_labels(CounterRng& rng) {
  StateLabels l{};
  for (auto& v : l) v = kAllLevels[rng.below(kNumLevels)];
  return l;
}

TEST(FocalLoss, GammaZeroIsCrossEntropy) {
  CounterRng rng(9, 1);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_prediction(rng);
    const auto y = random_labels(rng);
    double ce = 0;
    for (std::size_t d = 0; d < kNumDimensions; ++d) ce -= std::log(p.probs[d][index(y[d])]);
    EXPECT_NEAR(focal_loss(p, y, 0.0, unit_weights()), ce, 1e-12);
  }
}

TEST(FocalLoss, WorkedValues) {
  Prediction p;
  for (auto& row : p.probs) row = {0.0, 1.0, 0.0};
  StateLabels y{};
  y.fill(Level::Neutral);
  EXPECT_NEAR(focal_loss(p, y, 2.0, unit_weights()), 0.0, 1e-12);
  p[Dimension::Stress] = {0.5, 0.25, 0.25};
  y[index(Dimension::Stress)] = Level::Negative;
  EXPECT_NEAR(focal_loss(p, y, 2.0, unit_weights()), 0.25 * std::log(2.0), 1e-12);
  auto alpha = unit_weights();
  alpha[index(Dimension::Stress)][index(Level::Negative)] = 3.0;
  EXPECT_NEAR(focal_loss(p, y, 2.0, alpha), 0.75 * std::log(2.0), 1e-12);
  // Clamped at a floor, never infinite.
  p[Dimension::Stress] = {0.0, 0.5, 0.5};
  EXPECT_TRUE(std::isfinite(focal_loss(p, y, 2.0, unit_weights())));
}

TEST(FocalLoss, LogitGradientMatchesFiniteDifference) {
  CounterRng rng(10, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d z = random_matrix(3, 1, rng, 3.0);
    const Level y = kAllLevels[rng.below(3)];
    const auto loss_at = [&](const Eigen::Vector3d& logits) {
      const Eigen::Vector3d e = (logits.array() - logits.maxCoeff()).exp();
      const double py = e(index(y)) / e.sum();
      return -1.7 * std::pow(1 - py, 2.0) * std::log(py);
    };
    const Eigen::Vector3d e = (z.array() - z.maxCoeff()).exp();
    const Eigen::Vector3d probs = e / e.sum();
    const auto g = focal_logit_gradient({probs(0), probs(1), probs(2)}, y, 2.0, 1.7);
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d up = z, down = z;
      up(k) += 1e-5;
      down(k) -= 1e-5;
      EXPECT_NEAR(g(k), (loss_at(up) - loss_at(down)) / 2e-5, 1e-7);
    }
  }
}

std::vector<const RecordFeatures*> pointers(const std::vector<RecordFeatures>& v) {
  std::vector<const RecordFeatures*> out;
  for (const auto& r : v) out.push_back(&r);
  return out;
}

TEST(Backward, GradientCheckPasses) {
  auto tiny = make_tiny_problem(42);
  const LossConfig loss{2.0, inverse_frequency_weights(tiny.records)};
  const auto report = gradient_check(tiny.params, pointers(tiny.records), loss);
  EXPECT_TRUE(report.passed) << report.worst_tensor << " " << report.max_relative_error;
  EXPECT_LE(report.max_relative_error, 1e-4);
  EXPECT_EQ(report.per_tensor.size(), tiny.params.tensors().size());
}

TEST(Backward, CorruptedTensorIsNamed) {
  auto tiny = make_tiny_problem(42);
  GradCheckOptions options;
  options.corrupt_tensor = "l2_bwd.U";
  const auto report = gradient_check(tiny.params, pointers(tiny.records), LossConfig{}, options);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.worst_tensor, "l2_bwd.U");
}

TEST(Backward, UnusedEmbeddingRowHasZeroGradient) {
  auto tiny = make_tiny_problem(5);
  const auto result = backward(pointers(tiny.records), tiny.params, LossConfig{}, 0.3, 11);
  // Row 6 is never referenced by the tiny batch.
  EXPECT_EQ(result.grads.embedding.vectors.row(6), Eigen::RowVectorXd::Zero(8));
  EXPECT_GT(result.grads.embedding.vectors.cwiseAbs().sum(), 0.0);
}

TEST(Backward, DuplicatedBatchKeepsMeanGradient) {
  auto tiny = make_tiny_problem(6);
  auto once = pointers(tiny.records);
  auto twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  auto a = backward(once, tiny.params, LossConfig{}, 0.0, 1);
  auto b = backward(twice, tiny.params, LossConfig{}, 0.0, 1);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  const auto ta = a.grads.tensors(), tb = b.grads.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    for (Eigen::Index k = 0; k < ta[i].size(); ++k) EXPECT_NEAR(ta[i].data[k], tb[i].data[k], 1e-12) << ta[i].name;
  }
  EXPECT_DOUBLE_EQ(batch_loss(once, tiny.params, LossConfig{}, 0.0, 1), a.loss);
}

TEST(Adam, ZeroGradientIsNoOp) {
  auto tiny = make_tiny_problem(7);
  auto params = tiny.params;
  auto grads = params.zeros_like();
  auto state = AdamState::for_params(params);
  adam_step(params, grads, state, 1, 1e-3);
  EXPECT_EQ(params.proj_W, tiny.params.proj_W);
  EXPECT_EQ(params.embedding.vectors, tiny.params.embedding.vectors);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p = {1.0, -2.0, 0.5}, g = {0.3, -4.0, 1e-3}, m(3, 0.0), v(3, 0.0);
  const auto view = [](std::vector<double>& x) { return std::vector<TensorView>{{"x", x.data(), 3, 1}}; };
  const std::vector<double> before = p;
  adam_update(view(p), view(g), view(m), view(v), 1, 0.01);
  // Bias-corrected moments at t = 1 are g and g^2, so the step is
  // lr * g / (|g| + eps).
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(before[i] - p[i], 0.01 * g[i] / (std::abs(g[i]) + kAdamEps), 1e-15);
    EXPECT_NEAR(std::abs(before[i] - p[i]), 0.01, 1e-7);
  }
}

TEST(Dropout, ExpectationIsPreserved) {
  for (double rate : {0.1, 0.3, 0.5}) {
    DropoutState d(rate, CounterRng(3, 4));
    const auto mask = d.mask(100000, 1);
    EXPECT_NEAR(mask.mean(), 1.0, 0.01) << rate;
    for (Eigen::Index i = 0; i < 100; ++i) {
      EXPECT_TRUE(mask(i) == 0.0 || std::abs(mask(i) - 1.0 / (1.0 - rate)) < 1e-15);
    }
  }
}

TEST(Checkpoint, RoundTripAndErrors) {
  test::TempDir dir;
  auto tiny = make_tiny_problem(8);
  Checkpoint cp{tiny.params, {}};
  cp.stats.mean[3] = 1.5;
  cp.stats.stddev[3] = 2.5;
  save_checkpoint(dir / "m.psym", cp);
  const auto back = load_checkpoint(dir / "m.psym");
  EXPECT_EQ(back.params.embedding.vocabulary, cp.params.embedding.vocabulary);
  EXPECT_EQ(back.params.config.hidden, 8);
  const auto ta = cp.params.tensors();
  auto tb = const_cast<ModelParams&>(back.params).tensors();
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    EXPECT_EQ(ta[i].name, tb[i].name);
    for (Eigen::Index k = 0; k < ta[i].size(); ++k) ASSERT_EQ(ta[i].data[k], tb[i].data[k]);
  }
  EXPECT_EQ(back.stats.mean, cp.stats.mean);
  EXPECT_EQ(back.stats.stddev, cp.stats.stddev);

  EXPECT_THROW(load_checkpoint(dir / "none.psym"), MissingArtifactError);
  std::ofstream(dir / "bad.psym", std::ios::binary) << "NOTACHECKPOINT";
  EXPECT_THROW(load_checkpoint(dir / "bad.psym"), FormatError);
  std::string bytes;
  {
    std::ifstream in(dir / "m.psym", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::ofstream(dir / "cut.psym", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(load_checkpoint(dir / "cut.psym"), FormatError);
}

struct SmallData {
  std::vector<RecordFeatures> train, val;
  textproc::Vocabulary vocab;
};

const SmallData& small_data() {
  static const SmallData data = [] {
    corpus::GenConfig cfg;
    cfg.total = 60;
    const auto m = corpus::generate_synthetic_corpus(cfg, 42);
    const auto raw = extract_raw(m, textproc::default_stoplist());
    const std::vector<RawRecord> tr(raw.begin(), raw.begin() + 45), va(raw.begin() + 45, raw.end());
    const auto space = FeatureSpace::fit(tr, 1);
    return SmallData{space.transform(tr), space.transform(va), space.vocabulary};
  }();
  return data;
}

TrainConfig small_config(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 8;
  c.lr = 3e-3;
  c.model.d_text = 8;
  c.model.hidden = 8;
  return c;
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto& d = small_data();
  const auto r = train(d.train, d.val, d.vocab, small_config(0));
  EXPECT_TRUE(r.history.empty());
  const auto init = initialize(small_config(0).model, d.vocab, small_config(0).seed);
  EXPECT_EQ(r.params.proj_W, init.proj_W);
  EXPECT_EQ(r.params.embedding.vectors, init.embedding.vectors);
}

TEST(Train, DeterministicAndDescending) {
  const auto& d = small_data();
  const auto a = train(d.train, d.val, d.vocab, small_config(6));
  const auto b = train(d.train, d.val, d.vocab, small_config(6));
  ASSERT_EQ(a.history.size(), 6u);
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
    EXPECT_EQ(a.history[e].val_f1, b.history[e].val_f1);
  }
  EXPECT_EQ(a.params.att_W, b.params.att_W);
  EXPECT_LT(a.history.back().train_loss, a.history.front().train_loss);
}

TEST(Train, EmptySplitAndBadConfig) {
  const auto& d = small_data();
  EXPECT_THROW(train({}, d.val, d.vocab, small_config(1)), TrainingError);
  auto c = small_config(1);
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Predict, ValidAndDeterministic) {
  const auto& d = small_data();
  const auto r = train(d.train, d.val, d.vocab, small_config(1));
  for (const auto& rec : d.val) {
    const auto a = predict(r.params, rec);
    const auto b = predict(r.params, rec);
    EXPECT_EQ(a.prediction, b.prediction);
    EXPECT_TRUE(a.prediction.valid(1e-6));
    EXPECT_EQ(a.attention.size(), static_cast<Eigen::Index>(rec.length()));
    EXPECT_NEAR(a.attention.sum(), 1.0, 1e-9);
  }
  RecordFeatures empty;
  empty.prosody = Eigen::MatrixXd(kProsodyWidth, 0);
  EXPECT_THROW(predict(r.params, empty), SequenceError);
}

}  // namespace
}  // namespace psychstate::fusion
