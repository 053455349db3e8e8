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
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "psychstate/corpus.hpp"
#include "psychstate/error.hpp"
#include "test_support.hpp"

namespace psychstate::corpus {
namespace {

const DatasetManifest& default_corpus() {
  static const DatasetManifest m = generate_synthetic_corpus(GenConfig{}, 42);
  return m;
}

std::array<long, kNumLevels> counts_of(const DatasetManifest& m, Dimension d) {
  std::array<long, kNumLevels> c{};
  for (const auto& r : m.records) ++c[index(r.labels[index(d)])];
  return c;
}

std::set<std::string> ids(const DatasetManifest& m) {
  std::set<std::string> out;
  for (const auto& r : m.records) out.insert(r.record_id);
  return out;
}

TEST(Generate, DefaultTalliesMatchAnnotatedCorpus) {
  const auto& m = default_corpus();
  ASSERT_EQ(m.records.size(), 500u);
  const ClassCounts want = {{{70, 320, 110}, {40, 410, 50}, {80, 290, 130}, {50, 360, 90}}};
  for (Dimension d : kAllDimensions) {
    EXPECT_EQ(counts_of(m, d), want[index(d)]) << name(d);
    EXPECT_EQ(m.class_counts[index(d)], want[index(d)]) << name(d);
  }
  EXPECT_EQ(tally(m.records), m.class_counts);
}

TEST(Generate, ZeroTotalIsEmpty) {
  GenConfig cfg;
  cfg.total = 0;
  const auto m = generate_synthetic_corpus(cfg, 42);
  EXPECT_TRUE(m.records.empty());
  for (const auto& row : m.class_counts) EXPECT_EQ(row, (std::array<long, 3>{0, 0, 0}));
}

TEST(Generate, DeterministicSerialization) {
  const auto a = generate_synthetic_corpus(GenConfig{}, 42);
  const auto b = generate_synthetic_corpus(GenConfig{}, 42);
  EXPECT_EQ(serialize_records(a), serialize_records(b));
  EXPECT_EQ(a, b);
  const auto c = generate_synthetic_corpus(GenConfig{}, 43);
  EXPECT_NE(serialize_records(a), serialize_records(c));
}

TEST(Generate, RecordInvariants) {
  const auto& m = default_corpus();
  std::size_t voiced = 0;
  for (const auto& r : m.records) {
    EXPECT_NO_THROW(validate(r));
    EXPECT_FALSE(r.text.empty());
    EXPECT_EQ(r.modality == Modality::TextPlusVoice, r.audio.has_value());
    voiced += r.audio.has_value();
  }
  EXPECT_EQ(ids(m).size(), m.records.size());
  EXPECT_EQ(voiced, 150u);
}

TEST(Generate, RescalesToOtherTotals) {
  GenConfig cfg;
  cfg.total = 720;
  cfg.voice_fraction = 0.0;
  const auto m = generate_synthetic_corpus(cfg, 1);
  ASSERT_EQ(m.records.size(), 720u);
  EXPECT_EQ(m.class_counts, effective_counts(cfg));
  for (const auto& row : m.class_counts) EXPECT_EQ(std::accumulate(row.begin(), row.end(), 0L), 720);
  // Largest remainder on (70, 320, 110) * 1.44 = (100.8, 460.8, 158.4).
  EXPECT_EQ(m.class_counts[index(Dimension::Engagement)], (std::array<long, 3>{101, 461, 158}));
}

TEST(Generate, RescaleCountsLargestRemainder) {
  EXPECT_EQ(rescale_counts({1, 1, 1}, 4), (std::array<long, 3>{2, 1, 1}));
  EXPECT_EQ(rescale_counts({70, 320, 110}, 50), (std::array<long, 3>{7, 32, 11}));
  EXPECT_EQ(rescale_counts({40, 410, 50}, 0), (std::array<long, 3>{0, 0, 0}));
}

TEST(Generate, JointTableKeepsMarginals) {
  const std::array<long, 3> rows{40, 410, 50}, cols{80, 290, 130};
  const auto t = joint_table(rows, cols, 0.3);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(t[i][0] + t[i][1] + t[i][2], rows[i]);
    EXPECT_EQ(t[0][i] + t[1][i] + t[2][i], cols[i]);
  }
  // Positive association: more Negative/Negative than independence predicts.
  EXPECT_GT(t[0][0], 40.0 * 80.0 / 500.0);
}

TEST(Generate, RejectsInconsistentCounts) {
  GenConfig cfg;
  cfg.class_counts[0] = {70, 320, 111};
  EXPECT_THROW(generate_synthetic_corpus(cfg, 1), ConfigError);
  cfg = GenConfig{};
  cfg.class_counts[2] = {-1, 291, 210};
  EXPECT_THROW(generate_synthetic_corpus(cfg, 1), ConfigError);
  cfg = GenConfig{};
  cfg.voice_fraction = 1.5;
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(Record, ModalityRequiresAudio) {
  InteractionRecord r;
  r.record_id = "x";
  r.text = "hello";
  r.modality = Modality::TextPlusVoice;
  EXPECT_THROW(validate(r), ConfigError);
  r.modality = Modality::TextOnly;
  EXPECT_NO_THROW(validate(r));
  r.text.clear();
  EXPECT_THROW(validate(r), ConfigError);
}

TEST(Split, StratifiedTestCounts) {
  const auto s = stratified_split(default_corpus(), 0.2, Dimension::Engagement, 42);
  EXPECT_EQ(counts_of(s.test, Dimension::Engagement), (std::array<long, 3>{14, 64, 22}));
  EXPECT_EQ(s.train.records.size() + s.test.records.size(), 500u);
  auto all = ids(s.train);
  for (const auto& id : ids(s.test)) EXPECT_TRUE(all.insert(id).second) << id << " in both halves";
  EXPECT_EQ(all, ids(default_corpus()));
  EXPECT_EQ(s.train.class_counts, tally(s.train.records));
}

TEST(Split, SingleClassOfTen) {
  auto records = std::vector<InteractionRecord>(default_corpus().records.begin(), default_corpus().records.begin() + 10);
  for (auto& r : records) r.labels[index(Dimension::Stress)] = Level::Neutral;
  const auto s = stratified_split(make_manifest(records, 0), 0.2, Dimension::Stress, 5);
  EXPECT_EQ(s.test.records.size(), 2u);
  EXPECT_EQ(s.train.records.size(), 8u);
}

TEST(Split, Deterministic) {
  const auto a = stratified_split(default_corpus(), 0.2, Dimension::Stress, 9);
  const auto b = stratified_split(default_corpus(), 0.2, Dimension::Stress, 9);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train, b.train);
}

TEST(Split, TinyClassIsAnError) {
  auto records = std::vector<InteractionRecord>(default_corpus().records.begin(), default_corpus().records.begin() + 10);
  for (auto& r : records) r.labels[index(Dimension::Stress)] = Level::Neutral;
  records[0].labels[index(Dimension::Stress)] = Level::Negative;
  EXPECT_THROW(stratified_split(make_manifest(records, 0), 0.2, Dimension::Stress, 5), StratificationError);
}

TEST(KFold, FiveFoldsOnStress) {
  const auto folds = kfold(default_corpus(), 5, Dimension::Stress, 42);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::string> seen;
  for (const auto& f : folds) {
    const auto c = counts_of(f.validation, Dimension::Stress);
    EXPECT_EQ(c[0], 8);
    EXPECT_EQ(c[1], 82);
    EXPECT_EQ(c[2], 10);
    EXPECT_EQ(f.train.records.size() + f.validation.records.size(), 500u);
    for (const auto& id : ids(f.validation)) EXPECT_TRUE(seen.insert(id).second) << id << " in two folds";
    const auto train_ids = ids(f.train);
    for (const auto& id : ids(f.validation)) EXPECT_FALSE(train_ids.contains(id));
  }
  EXPECT_EQ(seen, ids(default_corpus()));
}

TEST(KFold, LeaveOneOut) {
  auto records = std::vector<InteractionRecord>(default_corpus().records.begin(), default_corpus().records.begin() + 6);
  for (auto& r : records) r.labels[index(Dimension::Stress)] = Level::Neutral;
  const auto folds = kfold(make_manifest(records, 0), 6, Dimension::Stress, 1);
  ASSERT_EQ(folds.size(), 6u);
  for (const auto& f : folds) EXPECT_EQ(f.validation.records.size(), 1u);
}

TEST(KFold, Errors) {
  EXPECT_THROW(kfold(default_corpus(), 41, Dimension::Stress, 1), FoldError);
  EXPECT_THROW(kfold(default_corpus(), 1, Dimension::Stress, 1), FoldError);
}

TEST(Persistence, RoundTrip) {
  test::TempDir dir;
  GenConfig cfg;
  cfg.total = 40;
  const auto m = generate_synthetic_corpus(cfg, 3);
  save_dataset(m, dir / "d.jsonl");
  const auto back = load_dataset(dir / "d.jsonl");
  EXPECT_EQ(back, m);
}

TEST(Persistence, HeaderLine) {
  GenConfig cfg;
  cfg.total = 3;
  const auto text = serialize_records(generate_synthetic_corpus(cfg, 3));
  EXPECT_TRUE(text.starts_with("{\"schema\":\"psychstate/1\""));
}

void write(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

TEST(Persistence, TruncatedFileIsParseError) {
  test::TempDir dir;
  GenConfig cfg;
  cfg.total = 5;
  cfg.voice_fraction = 0.0;
  const auto text = serialize_records(generate_synthetic_corpus(cfg, 3));
  write(dir / "t.jsonl", text.substr(0, text.size() / 2));
  try {
    load_dataset(dir / "t.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GE(e.line(), 2u);
  }
}

TEST(Persistence, UnknownLabelNamesField) {
  test::TempDir dir;
  GenConfig cfg;
  cfg.total = 2;
  cfg.voice_fraction = 0.0;
  auto text = serialize_records(generate_synthetic_corpus(cfg, 3));
  const auto pos = text.find("\"stress\":\"");
  ASSERT_NE(pos, std::string::npos);
  const auto start = pos + 10;
  text.replace(start, text.find('"', start) - start, "Ecstatic");
  write(dir / "bad.jsonl", text);
  try {
    load_dataset(dir / "bad.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("labels.stress"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("Ecstatic"), std::string::npos) << e.what();
  }
}

TEST(Persistence, UnknownSchemaIsVersionError) {
  test::TempDir dir;
  write(dir / "v.jsonl", "{\"schema\":\"psychstate/9\"}\n");
  EXPECT_THROW(load_dataset(dir / "v.jsonl"), VersionError);
}

TEST(Persistence, MissingFile) {
  EXPECT_THROW(load_dataset("/nonexistent/dataset.jsonl"), MissingArtifactError);
}

}  // namespace
}  // namespace psychstate::corpus
