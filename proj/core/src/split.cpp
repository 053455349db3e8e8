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

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "psychstate/corpus.hpp"
#include "psychstate/error.hpp"

namespace psychstate::corpus {
namespace {

constexpr std::uint64_t kStreamSplit = (1ULL << 42);
constexpr std::uint64_t kStreamFold = (1ULL << 42) + 64;

std::array<std::vector<std::size_t>, kNumLevels> group_by_class(const DatasetManifest& m,
                                                                Dimension d) {
  std::array<std::vector<std::size_t>, kNumLevels> groups;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    groups[index(m.records[i].labels[index(d)])].push_back(i);
  }
  return groups;
}

DatasetManifest subset(const DatasetManifest& m, std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  std::vector<InteractionRecord> records;
  records.reserve(idx.size());
  for (std::size_t i : idx) records.push_back(m.records[i]);
  return make_manifest(std::move(records), m.seed);
}

}  // namespace

Split stratified_split(const DatasetManifest& manifest, double test_fraction, Dimension dimension,
                       std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw StratificationError("test fraction must lie in (0, 1)");
  }
  auto groups = group_by_class(manifest, dimension);
  std::vector<std::size_t> train_idx, test_idx;
  for (Level l : kAllLevels) {
    auto& g = groups[index(l)];
    if (g.empty()) continue;
    if (g.size() < 2) {
      throw StratificationError(std::string(name(dimension)) + "=" + std::string(name(l)) +
                                " has fewer than 2 records");
    }
    CounterRng rng(seed, kStreamSplit + index(l));
    rng.shuffle(g);
    const auto n_test = static_cast<std::size_t>(std::lround(g.size() * test_fraction));
    test_idx.insert(test_idx.end(), g.begin(), g.begin() + static_cast<long>(n_test));
    train_idx.insert(train_idx.end(), g.begin() + static_cast<long>(n_test), g.end());
  }
  return {subset(manifest, std::move(train_idx)), subset(manifest, std::move(test_idx))};
}

std::vector<Fold> kfold(const DatasetManifest& manifest, int k, Dimension dimension,
                        std::uint64_t seed) {
  if (k < 2) throw FoldError("k must be >= 2");
  auto groups = group_by_class(manifest, dimension);
  const auto folds = static_cast<std::size_t>(k);
  for (Level l : kAllLevels) {
    const auto n = groups[index(l)].size();
    if (n > 0 && n < folds) {
      throw FoldError("k=" + std::to_string(k) + " exceeds the " + std::string(name(l)) +
                      " count (" + std::to_string(n) + ") of " + std::string(name(dimension)));
    }
  }
  if (manifest.records.size() < folds) throw FoldError("fewer records than folds");

  // Round-robin per class; each class starts where the previous one stopped so
  // fold sizes stay balanced overall.
  std::vector<std::size_t> assignment(manifest.records.size());
  std::size_t cursor = 0;
  for (Level l : kAllLevels) {
    auto& g = groups[index(l)];
    CounterRng rng(seed, kStreamFold + index(l));
    rng.shuffle(g);
    for (std::size_t i : g) assignment[i] = cursor++ % folds;
  }

  std::vector<Fold> out;
  out.reserve(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      (assignment[i] == f ? val_idx : train_idx).push_back(i);
    }
    out.push_back({subset(manifest, std::move(train_idx)), subset(manifest, std::move(val_idx))});
  }
  return out;
}

}  // namespace psychstate::corpus
