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
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace psychstate {

enum class Dimension : int { Engagement = 0, Stress = 1, Motivation = 2, Understanding = 3 };
enum class Level : int { Negative = 0, Neutral = 1, Positive = 2 };

inline constexpr std::size_t kNumDimensions = 4;
inline constexpr std::size_t kNumLevels = 3;

inline constexpr std::array<Dimension, kNumDimensions> kAllDimensions = {
    Dimension::Engagement, Dimension::Stress, Dimension::Motivation, Dimension::Understanding};
inline constexpr std::array<Level, kNumLevels> kAllLevels = {Level::Negative, Level::Neutral,
                                                             Level::Positive};

constexpr std::size_t index(Dimension d) { return static_cast<std::size_t>(d); }
constexpr std::size_t index(Level l) { return static_cast<std::size_t>(l); }

/// "Engagement", "Stress", ...
std::string_view name(Dimension d);
/// "Negative", "Neutral", "Positive"
std::string_view name(Level l);
/// Lowercase key used in files and CSV headers ("engagement", ...).
std::string_view key(Dimension d);

std::optional<Dimension> parse_dimension(std::string_view s);
std::optional<Level> parse_level(std::string_view s);

/// One level per dimension, indexed by Dimension.
using StateLabels = std::array<Level, kNumDimensions>;

/// Per-dimension 3-vectors (Negative, Neutral, Positive).
using ClassCounts = std::array<std::array<long, kNumLevels>, kNumDimensions>;

/// Four probability distributions over {Negative, Neutral, Positive}.
struct Prediction {
  std::array<std::array<double, kNumLevels>, kNumDimensions> probs{};

  const std::array<double, kNumLevels>& operator[](Dimension d) const { return probs[index(d)]; }
  std::array<double, kNumLevels>& operator[](Dimension d) { return probs[index(d)]; }

  double negative(Dimension d) const { return probs[index(d)][index(Level::Negative)]; }

  /// Argmax per dimension; ties go to the lower class index.
  Level argmax(Dimension d) const;

  /// Every 3-vector is non-negative and sums to 1 within `tol`.
  bool valid(double tol = 1e-6) const;

  static Prediction uniform();
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

}  // namespace psychstate
