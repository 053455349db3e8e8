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

#include "psychstate/features.hpp"

namespace psychstate {

RawRecord extract_raw(const corpus::InteractionRecord& record, const textproc::Stoplist& stoplist) {
  RawRecord raw;
  raw.record_id = record.record_id;
  raw.student_id = record.student_id;
  raw.session_index = record.session_index;
  raw.labels = record.labels;
  raw.tokens = record.tokens.empty() ? textproc::preprocess(record.text, stoplist) : record.tokens;
  if (raw.tokens.empty()) raw.tokens.emplace_back(textproc::kUnknownToken);
  if (record.audio) raw.track = prosody::extract(record.audio->clip);
  return raw;
}

std::vector<RawRecord> extract_raw(const corpus::DatasetManifest& manifest,
                                   const textproc::Stoplist& stoplist) {
  std::vector<RawRecord> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) out.push_back(extract_raw(r, stoplist));
  return out;
}

void fill_tokens(corpus::DatasetManifest& manifest, const textproc::Stoplist& stoplist) {
  for (auto& r : manifest.records) r.tokens = textproc::preprocess(r.text, stoplist);
}

FeatureSpace FeatureSpace::fit(const std::vector<RawRecord>& train, int min_count) {
  FeatureSpace space;
  std::vector<std::vector<std::string>> docs;
  std::vector<prosody::ProsodyTrack> tracks;
  docs.reserve(train.size());
  for (const auto& r : train) {
    docs.push_back(r.tokens);
    if (r.track) tracks.push_back(*r.track);
  }
  space.vocabulary = textproc::Vocabulary::build(docs, min_count);
  space.stats = prosody::compute_stats(tracks);
  return space;
}

RecordFeatures FeatureSpace::transform(const RawRecord& raw) const {
  RecordFeatures f;
  f.record_id = raw.record_id;
  f.labels = raw.labels;
  f.token_ids = vocabulary.lookup(raw.tokens);
  const auto steps = static_cast<Eigen::Index>(f.token_ids.size());
  f.prosody = Eigen::MatrixXd::Zero(kProsodyWidth, steps);
  if (raw.track) {
    f.voiced = true;
    const auto normalized = prosody::normalize(*raw.track, stats);
    const auto spans = prosody::uniform_spans(f.token_ids.size(), normalized.duration);
    const auto pooled = prosody::align_to_tokens(normalized, spans);
    for (Eigen::Index t = 0; t < steps; ++t) {
      for (std::size_t k = 0; k < prosody::kFeatureDim; ++k) {
        f.prosody(static_cast<Eigen::Index>(k), t) = pooled[static_cast<std::size_t>(t)][k];
      }
      f.prosody(kProsodyWidth - 1, t) = 1.0;
    }
  }
  return f;
}

std::vector<RecordFeatures> FeatureSpace::transform(const std::vector<RawRecord>& raws) const {
  std::vector<RecordFeatures> out;
  out.reserve(raws.size());
  for (const auto& r : raws) out.push_back(transform(r));
  return out;
}

Eigen::VectorXd pooled_prosody(const RecordFeatures& f) {
  if (f.prosody.cols() == 0) return Eigen::VectorXd::Zero(kProsodyWidth);
  return f.prosody.rowwise().mean();
}

}  // namespace psychstate
