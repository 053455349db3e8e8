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
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "bundled_data.hpp"
#include "psychstate/error.hpp"
#include "psychstate/rng.hpp"
#include "psychstate/textproc.hpp"

namespace psychstate::textproc {
namespace {

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0 && c < 0x80; }

bool starts_tag(std::string_view s, std::size_t i) {
  if (s[i] != '<' || i + 1 >= s.size()) return false;
  const auto c = static_cast<unsigned char>(s[i + 1]);
  return std::isalpha(c) || c == '/' || c == '!' || c == '?';
}

// One left-to-right pass; returns true when something was removed.
bool remove_tags(std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool changed = false;
  for (std::size_t i = 0; i < s.size();) {
    if (starts_tag(s, i)) {
      const auto close = s.find('>', i + 1);
      if (close != std::string::npos) {
        i = close + 1;
        changed = true;
        continue;
      }
    }
    out += s[i++];
  }
  s = std::move(out);
  return changed;
}

std::string decode_entities(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, char>, 5> kEntities = {
      {{"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    bool matched = false;
    if (s[i] == '&') {
      for (const auto& [entity, ch] : kEntities) {
        if (s.compare(i, entity.size(), entity) == 0) {
          out += ch;
          i += entity.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out += s[i++];
  }
  return out;
}

}  // namespace

std::string strip_markup(std::string_view text) {
  std::string s(text);
  while (remove_tags(s)) {
  }
  s = decode_entities(s);
  while (remove_tags(s)) {
  }
  std::erase_if(s, [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return (c < 0x20 && c != '\t' && c != '\n' && c != '\r') || c == 0x7f;
  });
  return s;
}

TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  const auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  // Length of an apostrophe at i (1 for ASCII, 3 for UTF-8 U+2019), else 0.
  const auto apostrophe = [&](std::size_t i) -> std::size_t {
    if (text[i] == '\'') return 1;
    if (i + 2 < text.size() && at(i) == 0xE2 && at(i + 1) == 0x80 && at(i + 2) == 0x99) return 3;
    return 0;
  };

  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_alnum(at(i))) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    std::string token;
    while (i < text.size()) {
      if (is_alnum(at(i))) {
        token += static_cast<char>(std::tolower(at(i)));
        ++i;
        continue;
      }
      const std::size_t apos = apostrophe(i);
      if (apos > 0 && i + apos < text.size() && is_alnum(at(i + apos))) {
        token += '\'';
        i += apos;
        continue;
      }
      break;
    }
    seq.tokens.push_back(std::move(token));
    seq.spans.push_back({begin, i});
  }
  return seq;
}

Stoplist parse_stoplist(std::string_view content) {
  Stoplist out;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& t : tokenize(line).tokens) out.insert(std::move(t));
  }
  return out;
}

Stoplist load_stoplist(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw MissingArtifactError("cannot open stop-word list: " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_stoplist(buf.str());
}

const Stoplist& default_stoplist() {
  static const Stoplist list = parse_stoplist(bundled::kStopwords);
  return list;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const Stoplist& stoplist) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stoplist.contains(t)) out.push_back(t);
  }
  return out;
}

std::string stem(std::string_view word) {
  std::string current(word);
  while (true) {
    std::string next = porter_stem(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::vector<std::string> preprocess(std::string_view text, const Stoplist& stoplist) {
  auto tokens = remove_stopwords(tokenize(strip_markup(text)).tokens, stoplist);
  for (auto& t : tokens) t = stem(t);
  return tokens;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : tokens_{std::string(kUnknownToken)}, index_{{std::string(kUnknownToken), 0}} {}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& documents, int min_count) {
  std::map<std::string, long> freq;
  for (const auto& doc : documents) {
    for (const auto& t : doc) ++freq[t];
  }
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, n] : freq) {
    if (n >= min_count && tok != kUnknownToken) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> ordered;
  ordered.reserve(kept.size());
  for (auto& [tok, n] : kept) ordered.push_back(std::move(tok));
  return from_tokens(ordered);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& ordered_tokens) {
  Vocabulary v;
  for (const auto& t : ordered_tokens) {
    if (t == kUnknownToken) continue;
    if (v.index_.emplace(t, static_cast<int>(v.tokens_.size())).second) v.tokens_.push_back(t);
  }
  return v;
}

int Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::lookup(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(lookup(t));
  return ids;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

double Vocabulary::oov_rate(const std::vector<std::vector<std::string>>& documents) const {
  long total = 0, unknown = 0;
  for (const auto& doc : documents) {
    for (const auto& t : doc) {
      ++total;
      if (lookup(t) == 0) ++unknown;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(unknown) / static_cast<double>(total);
}

EmbeddingTable EmbeddingTable::initialize(Vocabulary vocabulary, int dim, std::uint64_t seed,
                                          double scale) {
  EmbeddingTable table;
  table.vectors.resize(static_cast<Eigen::Index>(vocabulary.size()), dim);
  CounterRng rng(seed, 0x656d62ULL);
  for (Eigen::Index r = 0; r < table.vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.vectors.cols(); ++c) {
      table.vectors(r, c) = rng.uniform(-scale, scale);
    }
  }
  table.vocabulary = std::move(vocabulary);
  return table;
}

Eigen::MatrixXd embed(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tokens.size()), table.vectors.cols());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = table.vectors.row(table.vocabulary.lookup(tokens[i]));
  }
  return out;
}

}  // namespace psychstate::textproc
