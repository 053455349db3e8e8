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

// Built-in verification suite: analytic gradients against finite
// differences, the MFCC/pitch front end against direct references, and the
// metrics against hand-derived values.

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "commands.hpp"
#include "psychstate/error.hpp"
#include "psychstate/prosody.hpp"

namespace psychstate::cli {
namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool check_gradients(const RunConfig& c, std::ostream& out) {
  auto problem = fusion::make_tiny_problem(c.seed);
  std::vector<const RecordFeatures*> batch;
  for (const auto& r : problem.records) batch.push_back(&r);
  const fusion::LossConfig loss{c.train.gamma, fusion::inverse_frequency_weights(problem.records)};
  fusion::GradCheckOptions options;
  options.dropout = c.train.dropout;
  if (!c.inject_fault.empty()) options.corrupt_tensor = c.inject_fault;
  const auto report = fusion::gradient_check(problem.params, batch, loss, options);
  for (const auto& [tensor, err] : report.per_tensor) {
    if (err > options.tolerance) out << "gradcheck FAIL tensor " << tensor << " max_rel_err " << fmt("%.3e", err) << '\n';
  }
  out << "gradcheck " << (report.passed ? "PASS" : "FAIL") << " max_rel_err "
      << fmt("%.3e", report.max_relative_error) << " (" << report.worst_tensor << ", "
      << report.per_tensor.size() << " tensors)\n";
  return report.passed;
}

// Direct O(N^2) DFT, explicit mel weights and a plain DCT-II.
std::vector<double> reference_mfcc(const std::vector<double>& frame, int rate) {
  const prosody::MfccConfig cfg;
  const std::size_t n = cfg.n_fft;
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < frame.size() && i < n; ++i) {
    x[i] = frame[i] - (i > 0 ? cfg.preemphasis * frame[i - 1] : 0.0);
  }
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * k * t / n);
    mag[k] = std::abs(acc);
  }
  const auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const std::size_t M = cfg.n_mels;
  std::vector<double> energy(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double lo = hz(mel(rate / 2.0) * m / (M + 1));
    const double mid = hz(mel(rate / 2.0) * (m + 1) / (M + 1));
    const double hi = hz(mel(rate / 2.0) * (m + 2) / (M + 1));
    double e = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
      const double f = static_cast<double>(k) * rate / n;
      double w = 0.0;
      if (f > lo && f < mid) w = (f - lo) / (mid - lo);
      if (f >= mid && f < hi) w = (hi - f) / (hi - mid);
      e += w * mag[k];
    }
    energy[m] = std::log(std::max(e, cfg.log_floor));
  }
  std::vector<double> out(cfg.n_coeffs);
  for (std::size_t q = 0; q < out.size(); ++q) {
    double acc = 0.0;
    for (std::size_t m = 0; m < M; ++m) acc += energy[m] * std::cos(std::numbers::pi * q * (2.0 * m + 1.0) / (2.0 * M));
    out[q] = acc * std::sqrt((q == 0 ? 1.0 : 2.0) / M);
  }
  return out;
}

bool check_dsp(const RunConfig& c, std::ostream& out) {
  constexpr int kRate = 16000;
  constexpr std::size_t kFrame = 400;
  CounterRng rng(c.seed, 0x647370ULL);
  const auto window = prosody::hamming(kFrame);
  double worst_mfcc = 0.0;
  for (int f = 0; f < 100; ++f) {
    std::vector<double> frame(kFrame);
    for (std::size_t i = 0; i < kFrame; ++i) frame[i] = rng.uniform(-1.0, 1.0) * window[i];
    const auto got = prosody::mfcc(frame, kRate);
    const auto want = reference_mfcc(frame, kRate);
    for (std::size_t q = 0; q < got.size(); ++q) worst_mfcc = std::max(worst_mfcc, std::abs(got[q] - want[q]));
  }
  const bool mfcc_ok = worst_mfcc <= 1e-6;
  out << "mfcc " << (mfcc_ok ? "PASS" : "FAIL") << " max_abs_err " << fmt("%.3e", worst_mfcc)
      << " over 100 frames\n";

  double worst_pitch = 0.0;
  for (int f0 = 80; f0 <= 400; f0 += 5) {
    std::vector<double> frame(kFrame);
    for (std::size_t i = 0; i < kFrame; ++i) frame[i] = 0.5 * std::sin(2.0 * std::numbers::pi * f0 * i / kRate);
    worst_pitch = std::max(worst_pitch, std::abs(prosody::estimate_pitch(frame, kRate) - f0));
  }
  const bool pitch_ok = worst_pitch <= 2.0;
  out << "pitch " << (pitch_ok ? "PASS" : "FAIL") << " max_err " << fmt("%.3f", worst_pitch)
      << " Hz over 80-400 Hz tones\n";
  return mfcc_ok && pitch_ok;
}

struct MetricCase {
  std::array<std::array<long, 3>, 3> counts;
  double accuracy, precision, recall, f1, kappa;
};

bool check_metrics(std::ostream& out) {
  // Expected values worked by hand from the counts; absent classes count as
  // 0 in the macro averages.
  const std::vector<MetricCase> cases = {
      {{{{4, 1, 0}, {1, 4, 0}, {0, 0, 0}}}, 0.8, 1.6 / 3, 1.6 / 3, 1.6 / 3, 0.6},
      {{{{3, 0, 0}, {0, 5, 0}, {0, 0, 2}}}, 1.0, 1.0, 1.0, 1.0, 1.0},
      {{{{0, 2, 0}, {0, 6, 0}, {0, 2, 0}}}, 0.6, 0.2, 1.0 / 3, 0.25, 0.0},
      {{{{5, 2, 1}, {1, 6, 1}, {0, 2, 7}}},
       18.0 / 25,
       (5.0 / 6 + 6.0 / 10 + 7.0 / 9) / 3,
       (5.0 / 8 + 6.0 / 8 + 7.0 / 9) / 3,
       (10.0 / 14 + 12.0 / 18 + 14.0 / 18) / 3,
       241.0 / 416},
      {{{{1, 0, 3}, {2, 2, 0}, {0, 4, 1}}},
       4.0 / 13,
       (1.0 / 3 + 2.0 / 6 + 1.0 / 4) / 3,
       (1.0 / 4 + 2.0 / 4 + 1.0 / 5) / 3,
       (2.0 / 7 + 4.0 / 10 + 2.0 / 9) / 3,
       -4.0 / 113},
      {{{{0, 0, 0}, {0, 7, 0}, {0, 0, 0}}}, 1.0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0},
  };
  double worst = 0.0;
  for (const auto& mc : cases) {
    eval::ConfusionMatrix cm;
    cm.counts = mc.counts;
    const auto m = eval::metrics(cm);
    for (auto [got, want] : {std::pair{m.accuracy, mc.accuracy}, {m.precision, mc.precision},
                             {m.recall, mc.recall}, {m.f1, mc.f1}, {m.kappa, mc.kappa}}) {
      worst = std::max(worst, std::abs(got - want));
    }
  }
  const bool ok = worst <= 1e-12;
  out << "metrics " << (ok ? "PASS" : "FAIL") << " max_abs_err " << fmt("%.3e", worst) << " over "
      << cases.size() << " confusion matrices\n";
  return ok;
}

}  // namespace

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& log) {
  bool ok = check_gradients(c, out);
  if (!c.quick) {
    ok = check_dsp(c, out) && ok;
    ok = check_metrics(out) && ok;
  }
  log << (ok ? "all checks passed\n" : "verification failed\n");
  return ok ? kExitOk : kExitVerification;
}

}  // namespace psychstate::cli
