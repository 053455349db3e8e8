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

#include "psychstate/types.hpp"

#include <cmath>

namespace psychstate {

std::string_view name(Dimension d) {
  switch (d) {
    case Dimension::Engagement: return "Engagement";
    case Dimension::Stress: return "Stress";
    case Dimension::Motivation: return "Motivation";
    case Dimension::Understanding: return "Understanding";
  }
  return "?";
}

std::string_view name(Level l) {
  switch (l) {
    case Level::Negative: return "Negative";
    case Level::Neutral: return "Neutral";
    case Level::Positive: return "Positive";
  }
  return "?";
}

std::string_view key(Dimension d) {
  switch (d) {
    case Dimension::Engagement: return "engagement";
    case Dimension::Stress: return "stress";
    case Dimension::Motivation: return "motivation";
    case Dimension::Understanding: return "understanding";
  }
  return "?";
}

std::optional<Dimension> parse_dimension(std::string_view s) {
  for (Dimension d : kAllDimensions) {
    if (s == name(d) || s == key(d)) return d;
  }
  return std::nullopt;
}

std::optional<Level> parse_level(std::string_view s) {
  for (Level l : kAllLevels) {
    if (s == name(l)) return l;
  }
  return std::nullopt;
}

Level Prediction::argmax(Dimension d) const {
  const auto& p = probs[index(d)];
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumLevels; ++c) {
    if (p[c] > p[best]) best = c;
  }
  return static_cast<Level>(best);
}

bool Prediction::valid(double tol) const {
  for (const auto& p : probs) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

Prediction Prediction::uniform() {
  Prediction p;
  for (auto& row : p.probs) row.fill(1.0 / 3.0);
  return p;
}

}  // namespace psychstate
