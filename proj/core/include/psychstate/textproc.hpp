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

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace psychstate::textproc {

/// Removes `<...>` tags, decodes the five XML entities and drops control
/// characters. Total function.
std::string strip_markup(std::string_view text);

struct Span {
  std::size_t begin = 0;  // byte offset into the source text
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<Span> spans;
};

/// Lowercase ASCII alphanumeric runs. An apostrophe (ASCII or U+2019) between
/// two alphanumerics stays inside the token.
TokenSequence tokenize(std::string_view text);

using Stoplist = std::set<std::string, std::less<>>;

/// One token per line, `#` starts a comment.
Stoplist load_stoplist(const std::filesystem::path& path);
Stoplist parse_stoplist(std::string_view content);
/// The bundled English list (data/stopwords.txt).
const Stoplist& default_stoplist();

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const Stoplist& stoplist);

/// One pass of the original Porter (1980) algorithm.
std::string porter_stem(std::string_view word);

/// Porter stemming iterated to a fixed point, so stem(stem(x)) == stem(x).
std::string stem(std::string_view word);

/// strip_markup -> tokenize -> remove_stopwords -> stem.
std::vector<std::string> preprocess(std::string_view text, const Stoplist& stoplist);

inline constexpr std::string_view kUnknownToken = "<UNK>";

/// Token -> row index. Index 0 is always <UNK>.
class Vocabulary {
 public:
  Vocabulary();

  /// Tokens with frequency >= min_count over `documents`, ordered by
  /// descending frequency then lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>>& documents,
                          int min_count = 2);
  static Vocabulary from_tokens(const std::vector<std::string>& ordered_tokens);

  int lookup(std::string_view token) const;
  std::vector<int> lookup(const std::vector<std::string>& tokens) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Fraction of tokens that map to <UNK>.
  double oov_rate(const std::vector<std::vector<std::string>>& documents) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct EmbeddingTable {
  Vocabulary vocabulary;
  Eigen::MatrixXd vectors;  // |V| x d_text

  /// Rows uniform in [-scale, scale].
  static EmbeddingTable initialize(Vocabulary vocabulary, int dim, std::uint64_t seed,
                                   double scale = 0.05);
  int dim() const { return static_cast<int>(vectors.cols()); }
};

/// (len(tokens) x d_text). Out-of-vocabulary tokens take row 0.
Eigen::MatrixXd embed(const std::vector<std::string>& tokens, const EmbeddingTable& table);

}  // namespace psychstate::textproc
