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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "psychstate/corpus.hpp"
#include "psychstate/prosody.hpp"
#include "psychstate/textproc.hpp"

namespace psychstate {

/// Width of the non-text part of a fused frame: 16 prosody features plus the
/// modality indicator (1 = voice present).
inline constexpr int kProsodyWidth = static_cast<int>(prosody::kFeatureDim) + 1;

/// Per-record intermediate: processed tokens and the raw (unnormalized)
/// prosody track, if the record has audio.
struct RawRecord {
  std::string record_id;
  std::string student_id;
  int session_index = 0;
  std::vector<std::string> tokens;
  std::optional<prosody::ProsodyTrack> track;
  StateLabels labels{};
};

/// Model-ready record: token ids and a kProsodyWidth x T block aligned with
/// them.
struct RecordFeatures {
  std::string record_id;
  std::vector<int> token_ids;
  Eigen::MatrixXd prosody;
  StateLabels labels{};
  bool voiced = false;
  std::size_t length() const { return token_ids.size(); }
};

/// Tokens (record.tokens when already filled, otherwise the textproc
/// pipeline) and the prosody track. An all-stopword text becomes a single
/// <UNK> token so every record has at least one step.
RawRecord extract_raw(const corpus::InteractionRecord& record, const textproc::Stoplist& stoplist);
std::vector<RawRecord> extract_raw(const corpus::DatasetManifest& manifest,
                                   const textproc::Stoplist& stoplist);

/// Fills record.tokens for every record in place.
void fill_tokens(corpus::DatasetManifest& manifest, const textproc::Stoplist& stoplist);

/// Vocabulary and prosody normalization fitted on a training split only.
struct FeatureSpace {
  textproc::Vocabulary vocabulary;
  prosody::NormalizationStats stats;

  static FeatureSpace fit(const std::vector<RawRecord>& train, int min_count = 2);
  RecordFeatures transform(const RawRecord& raw) const;
  std::vector<RecordFeatures> transform(const std::vector<RawRecord>& raws) const;
};

/// Mean over steps of the prosody block (kProsodyWidth values): the
/// clip-level input of the prosody-only baseline.
Eigen::VectorXd pooled_prosody(const RecordFeatures& f);

}  // namespace psychstate
