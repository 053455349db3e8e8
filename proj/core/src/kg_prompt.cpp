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

#include <array>
#include <cctype>
#include <string>

#include "psychstate/kg.hpp"

namespace psychstate::kg {
namespace {

constexpr std::string_view kNeutralSummary = "The student's state appears neutral across all dimensions.";
constexpr std::string_view kStudentSubject = "The student ";

struct ClausePair {
  std::string_view negative;
  std::string_view positive;
};

constexpr std::array<ClausePair, kNumDimensions> kClauses = {{
    {"seems disengaged", "appears engaged"},
    {"shows vocal stress", "appears calm"},
    {"shows low motivation", "appears motivated"},
    {"seems confused", "shows solid understanding"},
}};

std::string fill_template(std::string_view tmpl, std::string_view head, std::string_view tail) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.compare(i, 6, "{head}") == 0) {
      out += head;
      i += 6;
    } else if (tmpl.compare(i, 6, "{tail}") == 0) {
      out += tail;
      i += 6;
    } else {
      out += tmpl[i++];
    }
  }
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string render(const KnowledgeGraph& graph, const std::vector<Triple>& triples,
                   std::size_t count, const std::string& clause) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& t = triples[i];
    const std::string sentence =
        fill_template(graph.relation(t.relation).sentence, graph.entity(t.head).label, graph.entity(t.tail).label);
    if (!out.empty()) out += ' ';
    out += sentence;
    const bool last = i + 1 == count;
    if (last && !clause.empty() && sentence.starts_with(kStudentSubject)) {
      out += " and " + clause + ".";
      return out;
    }
    out += '.';
  }
  if (!out.empty()) out += ' ';
  if (clause.empty()) {
    out += kNeutralSummary;
  } else {
    out += std::string(kStudentSubject) + clause + ".";
  }
  return out;
}

}  // namespace

std::string state_clause(const Prediction& prediction) {
  std::string clause;
  for (Dimension d : kAllDimensions) {
    const Level l = prediction.argmax(d);
    if (l == Level::Neutral) continue;
    const auto& pair = kClauses[index(d)];
    if (!clause.empty()) clause += " and ";
    clause += l == Level::Negative ? pair.negative : pair.positive;
  }
  return clause;
}

std::string render_prompt(const KnowledgeGraph& graph, const std::vector<Triple>& triples,
                          const Prediction& prediction) {
  const std::string clause = state_clause(prediction);
  std::size_t count = triples.size();
  std::string out = render(graph, triples, count, clause);
  while (out.size() > kMaxPromptLength && count > 0) {
    out = render(graph, triples, --count, clause);
  }
  return out;
}

}  // namespace psychstate::kg
