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

// Hot paths of feature extraction and training.

#include <benchmark/benchmark.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "psychstate/fusion.hpp"
#include "psychstate/prosody.hpp"
#include "psychstate/rng.hpp"

namespace {

using namespace psychstate;

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform(-0.5, 0.5);
  return out;
}

void BM_Fft512(benchmark::State& state) {
  const auto x = noise(512, 1);
  std::vector<std::complex<double>> buf(512);
  for (auto _ : state) {
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
    prosody::fft(buf);
    benchmark::DoNotOptimize(buf.data());
  }
}
BENCHMARK(BM_Fft512);

void BM_Mfcc(benchmark::State& state) {
  const auto frame = noise(400, 2);
  for (auto _ : state) benchmark::DoNotOptimize(prosody::mfcc(frame, 16000));
}
BENCHMARK(BM_Mfcc);

void BM_Pitch(benchmark::State& state) {
  std::vector<double> frame(400);
  for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = std::sin(2 * std::numbers::pi * 180.0 * i / 16000.0);
  for (auto _ : state) benchmark::DoNotOptimize(prosody::estimate_pitch(frame, 16000));
}
BENCHMARK(BM_Pitch);

// One second of audio through the full prosody pipeline.
void BM_ExtractOneSecond(benchmark::State& state) {
  AudioClip clip{noise(16000, 3), 16000};
  for (auto _ : state) benchmark::DoNotOptimize(prosody::extract(clip));
}
BENCHMARK(BM_ExtractOneSecond)->Unit(benchmark::kMillisecond);

// Forward and backward for one sequence of `range(0)` steps at the default
// model size.
fusion::TinyProblem default_size_problem(int steps) {
  auto tiny = fusion::make_tiny_problem(42);
  tiny.params = fusion::initialize(fusion::ModelConfig{}, tiny.params.embedding.vocabulary, 42);
  CounterRng rng(5, 5);
  auto& r = tiny.records.front();
  r.token_ids.resize(steps);
  for (auto& id : r.token_ids) id = static_cast<int>(rng.below(tiny.params.embedding.vocabulary.size()));
  r.prosody = Eigen::MatrixXd::Zero(kProsodyWidth, steps);
  tiny.records.resize(1);
  return tiny;
}

void BM_Forward(benchmark::State& state) {
  const auto p = default_size_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fusion::predict(p.params, p.records.front()));
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Backward(benchmark::State& state) {
  const auto p = default_size_problem(static_cast<int>(state.range(0)));
  const std::vector<const RecordFeatures*> batch = {&p.records.front()};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fusion::backward(batch, p.params, fusion::LossConfig{}, 0.3, 7).loss);
  }
}
BENCHMARK(BM_Backward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
