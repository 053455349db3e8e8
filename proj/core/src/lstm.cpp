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

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_shapes(const LstmWeights& w) {
  const Eigen::Index H = w.U.cols();
  if (w.U.rows() != 4 * H || w.W.rows() != 4 * H || w.b.size() != 4 * H) {
    throw DimensionError("LSTM weights must have 4H rows");
  }
}

// Pre-activations in, activations out (gate order i, f, o, g).
void activate(Eigen::Ref<Eigen::VectorXd> z, Eigen::Index H) {
  for (Eigen::Index k = 0; k < 3 * H; ++k) z(k) = sigmoid(z(k));
  for (Eigen::Index k = 3 * H; k < 4 * H; ++k) z(k) = std::tanh(z(k));
}

}  // namespace

CellState lstm_cell(const Eigen::VectorXd& x, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                    const LstmWeights& w) {
  check_shapes(w);
  const Eigen::Index H = w.U.cols();
  if (x.size() != w.W.cols()) throw DimensionError("LSTM input size does not match W");
  if (h.size() != H || c.size() != H) throw DimensionError("LSTM state size does not match U");
  Eigen::VectorXd z = w.W * x + w.U * h + w.b;
  activate(z, H);
  CellState out;
  out.c = z.segment(H, H).cwiseProduct(c) + z.segment(0, H).cwiseProduct(z.segment(3 * H, H));
  out.h = z.segment(2 * H, H).cwiseProduct(out.c.array().tanh().matrix());
  return out;
}

namespace detail {

LstmTrace lstm_run(const LstmWeights& w, const Eigen::MatrixXd& X, bool reverse) {
  check_shapes(w);
  if (X.rows() != w.W.cols()) throw DimensionError("LSTM input size does not match W");
  const Eigen::Index H = w.U.cols();
  const Eigen::Index T = X.cols();
  LstmTrace tr;
  tr.reverse = reverse;
  tr.gates = (w.W * X).colwise() + w.b;
  tr.c.resize(H, T);
  tr.h.resize(H, T);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
  for (Eigen::Index k = 0; k < T; ++k) {
    const Eigen::Index t = reverse ? T - 1 - k : k;
    auto z = tr.gates.col(t);
    z.noalias() += w.U * h;
    activate(z, H);
    c = z.segment(H, H).cwiseProduct(c) + z.segment(0, H).cwiseProduct(z.segment(3 * H, H));
    h = z.segment(2 * H, H).cwiseProduct(c.array().tanh().matrix());
    tr.c.col(t) = c;
    tr.h.col(t) = h;
  }
  return tr;
}

Eigen::MatrixXd lstm_backward(const LstmWeights& w, LstmWeights& grad, const Eigen::MatrixXd& X,
                              const LstmTrace& tr, const Eigen::MatrixXd& dH) {
  const Eigen::Index H = w.U.cols();
  const Eigen::Index T = X.cols();
  Eigen::MatrixXd dZ(4 * H, T);
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(H, T);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(H);

  for (Eigen::Index k = T - 1; k >= 0; --k) {
    const Eigen::Index t = tr.reverse ? T - 1 - k : k;
    const Eigen::Index prev = tr.reverse ? t + 1 : t - 1;
    const bool has_prev = prev >= 0 && prev < T;
    const auto g = tr.gates.col(t);
    const auto i_g = g.segment(0, H).array();
    const auto f_g = g.segment(H, H).array();
    const auto o_g = g.segment(2 * H, H).array();
    const auto c_g = g.segment(3 * H, H).array();
    const Eigen::ArrayXd tc = tr.c.col(t).array().tanh();
    const Eigen::ArrayXd c_prev = has_prev ? Eigen::ArrayXd(tr.c.col(prev).array()) : zero.array();
    if (has_prev) h_prev.col(t) = tr.h.col(prev);

    const Eigen::ArrayXd dh = dH.col(t).array() + dh_next.array();
    const Eigen::ArrayXd dc = dc_next.array() + dh * o_g * (1.0 - tc.square());
    auto dz = dZ.col(t);
    dz.segment(0, H) = (dc * c_g * i_g * (1.0 - i_g)).matrix();
    dz.segment(H, H) = (dc * c_prev * f_g * (1.0 - f_g)).matrix();
    dz.segment(2 * H, H) = (dh * tc * o_g * (1.0 - o_g)).matrix();
    dz.segment(3 * H, H) = (dc * i_g * (1.0 - c_g.square())).matrix();
    dc_next = (dc * f_g).matrix();
    dh_next.noalias() = w.U.transpose() * dz;
  }
  grad.W.noalias() += dZ * X.transpose();
  grad.U.noalias() += dZ * h_prev.transpose();
  grad.b += dZ.rowwise().sum();
  return w.W.transpose() * dZ;
}

}  // namespace detail
}  // namespace psychstate::fusion
