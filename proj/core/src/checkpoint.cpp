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
#include <bit>
#include <cstring>
#include <fstream>

#include "psychstate/error.hpp"
#include "psychstate/fusion.hpp"

// Layout (all integers little-endian):
//   "PSYM1"
//   u32 d_text, u32 hidden
//   u32 vocabulary size, then per token: u32 byte length + UTF-8 bytes
//   f64[16] normalization mean, f64[16] normalization stddev
//   u32 tensor count, then per tensor: u32 name length + name,
//     u64 rows, u64 cols, f64[rows*cols] in column-major order

namespace psychstate::fusion {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

void put_string(std::ostream& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw FormatError("checkpoint is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 20)) throw FormatError("checkpoint string length is implausible");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw FormatError("checkpoint is truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  ModelParams params = checkpoint.params;
  out.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.config.d_text));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.config.hidden));
  const auto& tokens = params.embedding.vocabulary.tokens();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tokens.size()));
  for (const auto& t : tokens) put_string(out, t);
  for (double m : checkpoint.stats.mean) put<double>(out, m);
  for (double s : checkpoint.stats.stddev) put<double>(out, s);
  const auto tensors = params.tensors();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_string(out, t.name);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols));
    for (Eigen::Index i = 0; i < t.size(); ++i) put<double>(out, t.data[i]);
  }
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open checkpoint: " + path.string());
  std::string magic(kCheckpointMagic.size(), '\0');
  if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kCheckpointMagic) {
    throw FormatError("not a PSYM1 checkpoint: " + path.string());
  }
  ModelConfig config;
  config.d_text = static_cast<int>(get<std::uint32_t>(in));
  config.hidden = static_cast<int>(get<std::uint32_t>(in));
  if (config.d_text < 1 || config.hidden < 1 || config.d_text > 4096 || config.hidden > 4096) {
    throw FormatError("checkpoint model sizes are invalid");
  }
  const auto vocab_size = get<std::uint32_t>(in);
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::uint32_t i = 0; i < vocab_size; ++i) tokens.push_back(get_string(in));

  Checkpoint cp;
  for (double& m : cp.stats.mean) m = get<double>(in);
  for (double& s : cp.stats.stddev) s = get<double>(in);
  cp.params = initialize(config, textproc::Vocabulary::from_tokens(tokens), 0);
  auto tensors = cp.params.tensors();
  const auto count = get<std::uint32_t>(in);
  if (count != tensors.size()) throw FormatError("checkpoint tensor count does not match the model");
  for (auto& t : tensors) {
    const std::string name = get_string(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (name != t.name || rows != static_cast<std::uint64_t>(t.rows) ||
        cols != static_cast<std::uint64_t>(t.cols)) {
      throw FormatError("checkpoint tensor '" + name + "' does not match expected '" + t.name + "'");
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = get<double>(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  if (!cp.params.all_finite()) throw FormatError("checkpoint contains non-finite weights");
  return cp;
}

}  // namespace psychstate::fusion
