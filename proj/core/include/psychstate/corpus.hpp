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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psychstate/audio.hpp"
#include "psychstate/rng.hpp"
#include "psychstate/types.hpp"

namespace psychstate::corpus {

enum class Modality { TextOnly, TextPlusVoice };

std::string_view name(Modality m);
std::optional<Modality> parse_modality(std::string_view s);

/// Audio attached to a record. `path` is relative to the dataset file's
/// directory; `clip` holds the decoded samples.
struct AudioRef {
  std::string path;
  AudioClip clip;
  friend bool operator==(const AudioRef&, const AudioRef&) = default;
};

struct InteractionRecord {
  std::string record_id;
  std::string student_id;
  int session_index = 0;
  Modality modality = Modality::TextOnly;
  std::string text;
  std::vector<std::string> tokens;
  std::optional<AudioRef> audio;
  StateLabels labels{};

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

/// Throws ConfigError when the modality/audio or non-empty-text invariants fail.
void validate(const InteractionRecord& record);

struct DatasetManifest {
  std::vector<InteractionRecord> records;
  std::uint64_t seed = 0;
  ClassCounts class_counts{};

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Per-dimension label tally over `records`.
ClassCounts tally(const std::vector<InteractionRecord>& records);

/// Builds a manifest from records, recomputing class_counts.
DatasetManifest make_manifest(std::vector<InteractionRecord> records, std::uint64_t seed);

/// Class counts of the annotated study corpus (500 labeled interactions).
ClassCounts annotated_class_counts();

struct GenConfig {
  long total = 500;
  double voice_fraction = 0.30;
  /// Per-dimension counts; rescaled with largest-remainder rounding when the
  /// per-dimension sum differs from `total`.
  ClassCounts class_counts = annotated_class_counts();
  /// Association between Stress=Negative and Motivation=Negative.
  double stress_motivation_correlation = 0.3;
  int num_students = 45;
  /// Probability that a text-only record mentions a given dimension.
  double text_marker_rate = 0.92;
  /// Same for voice records on the dimensions that prosody also carries
  /// (Stress, Engagement).
  double voice_text_marker_rate = 0.40;
};

/// Throws ConfigError on negative counts, inconsistent per-dimension sums, or
/// out-of-range fractions.
void validate(const GenConfig& config);

/// Largest-remainder rescaling of one 3-vector to sum to `total`.
std::array<long, kNumLevels> rescale_counts(const std::array<long, kNumLevels>& counts,
                                            long total);

/// The class counts the generator will actually emit for `config`.
ClassCounts effective_counts(const GenConfig& config);

/// Integer 3x3 joint table with exact row/column marginals whose association
/// follows `correlation` (fitted by iterative proportional fitting on a
/// seeded table, then rounded while preserving the marginals).
std::array<std::array<long, kNumLevels>, kNumLevels> joint_table(
    const std::array<long, kNumLevels>& rows, const std::array<long, kNumLevels>& cols,
    double correlation);

/// Deterministic label-conditioned synthetic corpus. Tokens are left empty;
/// textproc fills them.
DatasetManifest generate_synthetic_corpus(const GenConfig& config, std::uint64_t seed);

/// Synthetic voice for one record, conditioned on its labels. Exposed for tests.
struct VoiceProfile {
  double pitch_hz;
  double amplitude;
  double syllable_rate;
  double duration_s;
};
VoiceProfile voice_profile(const StateLabels& labels, double speaker_pitch, std::size_t word_count,
                           CounterRng& rng);
AudioClip synthesize_voice(const VoiceProfile& profile, CounterRng& rng, int sample_rate = 16000);

// ---------------------------------------------------------------------------
// Splits

struct Split {
  DatasetManifest train;
  DatasetManifest test;
};

/// Per-class test count = round(count * test_fraction). Throws
/// StratificationError when a class of `dimension` has fewer than 2 records.
Split stratified_split(const DatasetManifest& manifest, double test_fraction, Dimension dimension,
                       std::uint64_t seed);

struct Fold {
  DatasetManifest train;
  DatasetManifest validation;
};

/// Stratified k-fold. Throws FoldError when k < 2 or k exceeds the smallest
/// class count.
std::vector<Fold> kfold(const DatasetManifest& manifest, int k, Dimension dimension,
                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::string_view kSchemaVersion = "psychstate/1";

/// Writes `path` (JSON lines) and one WAV per voiced record next to it.
void save_dataset(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Throws ParseError (with line number) on malformed content and
/// VersionError on an unknown schema.
DatasetManifest load_dataset(const std::filesystem::path& path);

/// The JSON-lines text that save_dataset writes, without touching disk.
std::string serialize_records(const DatasetManifest& manifest);

}  // namespace psychstate::corpus
