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
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "psychstate/corpus.hpp"
#include "psychstate/error.hpp"

namespace psychstate::corpus {
namespace {

// Stream ids for the global (non-per-record) draws. Per-record streams use the
// record index directly, so these sit far above any realistic corpus size.
constexpr std::uint64_t kStreamLabels = 1ULL << 40;
constexpr std::uint64_t kStreamVoice = (1ULL << 40) + 16;
constexpr std::uint64_t kStreamStudents = 1ULL << 41;

using PhraseBank = std::array<std::array<std::vector<std::string_view>, kNumLevels>, kNumDimensions>;

// Label-conditioned phrase templates. "{t}" is replaced by the session topic.
const PhraseBank& phrase_bank() {
  static const PhraseBank bank = [] {
    PhraseBank b;
    auto& eng = b[index(Dimension::Engagement)];
    eng[index(Level::Negative)] = {"this is boring", "i zoned out during the {t} part",
                                   "can we just skip {t}", "honestly i am bored and tired of this",
                                   "whatever, i do not care about {t}"};
    eng[index(Level::Neutral)] = {"ok next question", "i read the section on {t}",
                                  "i am working through the exercise", "let me look at it"};
    eng[index(Level::Positive)] = {"this is really interesting", "can you show me more {t} examples",
                                   "i love exploring {t}", "give me another challenge please"};

    auto& str = b[index(Dimension::Stress)];
    str[index(Level::Negative)] = {"i am so stressed about the exam", "i panic whenever my code crashes",
                                   "this deadline is overwhelming", "i feel anxious and nervous",
                                   "i am freaking out about {t}"};
    str[index(Level::Neutral)] = {"the deadline is next week", "i have some time left today",
                                  "the quiz is on friday"};
    str[index(Level::Positive)] = {"i feel calm about it", "no pressure, i am relaxed",
                                   "i am at ease with the workload"};

    auto& mot = b[index(Dimension::Motivation)];
    mot[index(Level::Negative)] = {"i want to give up", "what is the point of learning {t}",
                                   "i will never be good at programming", "i see no reason to keep trying"};
    mot[index(Level::Neutral)] = {"i need to finish this", "i should practice {t}",
                                  "i guess i have to do it"};
    mot[index(Level::Positive)] = {"i am determined to master {t}", "i am excited to improve",
                                   "my goal is to ace the project", "i am eager to learn more"};

    auto& und = b[index(Dimension::Understanding)];
    und[index(Level::Negative)] = {"i do not understand {t}", "{t} confuse me completely",
                                   "i am lost with {t}", "why does my {t} code fail",
                                   "nothing about {t} makes sense"};
    und[index(Level::Neutral)] = {"i partly get {t}", "{t} seem somewhat familiar",
                                  "i think i follow the {t} example"};
    und[index(Level::Positive)] = {"i finally understand {t}", "{t} are clear now",
                                   "i solved the {t} exercise correctly", "i can explain {t} myself"};
    return b;
  }();
  return bank;
}

constexpr std::array<std::string_view, 12> kTopics = {
    "loops",   "recursion", "arrays",  "functions", "pointers",   "variables",
    "classes", "strings",   "sorting", "linked lists", "conditionals", "hash maps"};

constexpr std::array<std::string_view, 4> kFillers = {"can we go over {t}", "we are on {t} today",
                                                      "this session covers {t}",
                                                      "question about {t}"};

std::string fill_topic(std::string_view tmpl, std::string_view topic, bool markup) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl.compare(i, 3, "{t}") == 0) {
      if (markup) out += "<code>";
      out += topic;
      if (markup) out += "</code>";
      i += 2;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

std::string sentence_case(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool alpha = std::isalnum(static_cast<unsigned char>(c)) != 0;
    if (alpha && !in_word) ++n;
    in_word = alpha;
  }
  return n;
}

std::string compose_text(const StateLabels& labels, bool voiced, const GenConfig& config,
                         CounterRng& rng) {
  const auto& bank = phrase_bank();
  const auto topic = kTopics[rng.below(kTopics.size())];
  const bool markup = rng.bernoulli(0.05);

  std::array<Dimension, kNumDimensions> order = kAllDimensions;
  rng.shuffle(std::span<Dimension>(order));

  std::vector<std::string> sentences;
  for (Dimension d : order) {
    const bool prosodic = d == Dimension::Stress || d == Dimension::Engagement;
    const double rate = voiced && prosodic ? config.voice_text_marker_rate : config.text_marker_rate;
    if (!rng.bernoulli(rate)) continue;
    const auto& options = bank[index(d)][index(labels[index(d)])];
    sentences.push_back(fill_topic(options[rng.below(options.size())], topic, markup));
  }
  if (sentences.empty() || rng.bernoulli(0.3)) {
    const auto filler = fill_topic(kFillers[rng.below(kFillers.size())], topic, markup);
    sentences.insert(sentences.begin(), filler);
  }

  std::string text;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i) text += ' ';
    text += sentence_case(sentences[i]);
    text += rng.bernoulli(0.15) ? "!" : ".";
  }
  return text;
}

}  // namespace

std::string_view name(Modality m) {
  return m == Modality::TextOnly ? "TextOnly" : "TextPlusVoice";
}

std::optional<Modality> parse_modality(std::string_view s) {
  if (s == "TextOnly") return Modality::TextOnly;
  if (s == "TextPlusVoice") return Modality::TextPlusVoice;
  return std::nullopt;
}

void validate(const InteractionRecord& record) {
  if (record.text.empty()) throw ConfigError("record " + record.record_id + ": empty text");
  const bool voiced = record.modality == Modality::TextPlusVoice;
  if (voiced != record.audio.has_value()) {
    throw ConfigError("record " + record.record_id + ": modality and audio presence disagree");
  }
  if (record.session_index < 0) {
    throw ConfigError("record " + record.record_id + ": negative session index");
  }
}

ClassCounts tally(const std::vector<InteractionRecord>& records) {
  ClassCounts counts{};
  for (const auto& r : records) {
    for (Dimension d : kAllDimensions) ++counts[index(d)][index(r.labels[index(d)])];
  }
  return counts;
}

DatasetManifest make_manifest(std::vector<InteractionRecord> records, std::uint64_t seed) {
  DatasetManifest m;
  m.class_counts = tally(records);
  m.records = std::move(records);
  m.seed = seed;
  return m;
}

ClassCounts annotated_class_counts() {
  ClassCounts c{};
  c[index(Dimension::Engagement)] = {70, 320, 110};
  c[index(Dimension::Stress)] = {40, 410, 50};
  c[index(Dimension::Motivation)] = {80, 290, 130};
  c[index(Dimension::Understanding)] = {50, 360, 90};
  return c;
}

void validate(const GenConfig& config) {
  if (config.total < 0) throw ConfigError("total must be >= 0");
  if (!(config.voice_fraction >= 0.0 && config.voice_fraction <= 1.0)) {
    throw ConfigError("voice_fraction must be in [0, 1]");
  }
  if (!(config.stress_motivation_correlation > -1.0 && config.stress_motivation_correlation < 1.0)) {
    throw ConfigError("stress_motivation_correlation must be in (-1, 1)");
  }
  if (config.num_students < 1) throw ConfigError("num_students must be >= 1");
  for (double r : {config.text_marker_rate, config.voice_text_marker_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("marker rates must be in [0, 1]");
  }
  long reference = -1;
  for (Dimension d : kAllDimensions) {
    long sum = 0;
    for (long c : config.class_counts[index(d)]) {
      if (c < 0) throw ConfigError("negative class count for " + std::string(name(d)));
      sum += c;
    }
    if (reference < 0) reference = sum;
    if (sum != reference) {
      throw ConfigError("class counts for " + std::string(name(d)) + " sum to " +
                        std::to_string(sum) + ", expected " + std::to_string(reference));
    }
  }
  if (reference == 0 && config.total > 0) {
    throw ConfigError("class counts are all zero but total is " + std::to_string(config.total));
  }
}

std::array<long, kNumLevels> rescale_counts(const std::array<long, kNumLevels>& counts, long total) {
  const long sum = std::accumulate(counts.begin(), counts.end(), 0L);
  if (sum == total) return counts;
  std::array<long, kNumLevels> out{};
  if (sum == 0) return out;
  std::array<double, kNumLevels> remainder{};
  long assigned = 0;
  for (std::size_t c = 0; c < kNumLevels; ++c) {
    const double exact = static_cast<double>(counts[c]) * static_cast<double>(total) / sum;
    out[c] = static_cast<long>(std::floor(exact));
    remainder[c] = exact - out[c];
    assigned += out[c];
  }
  std::array<std::size_t, kNumLevels> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++out[order[i % kNumLevels]];
  return out;
}

ClassCounts effective_counts(const GenConfig& config) {
  validate(config);
  ClassCounts out{};
  for (Dimension d : kAllDimensions) {
    out[index(d)] = rescale_counts(config.class_counts[index(d)], config.total);
  }
  return out;
}

std::array<std::array<long, kNumLevels>, kNumLevels> joint_table(
    const std::array<long, kNumLevels>& rows, const std::array<long, kNumLevels>& cols,
    double correlation) {
  constexpr std::array<double, kNumLevels> pole = {1.0, 0.0, -1.0};
  const long total = std::accumulate(rows.begin(), rows.end(), 0L);
  if (total != std::accumulate(cols.begin(), cols.end(), 0L)) {
    throw ConfigError("joint table marginals disagree");
  }

  std::array<std::array<double, kNumLevels>, kNumLevels> t{};
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    for (std::size_t j = 0; j < kNumLevels; ++j) {
      t[i][j] = static_cast<double>(rows[i]) * static_cast<double>(cols[j]) *
                (1.0 + correlation * pole[i] * pole[j]);
    }
  }

  // Iterative proportional fitting back onto the marginals.
  for (int iter = 0; iter < 500; ++iter) {
    double err = 0.0;
    for (std::size_t i = 0; i < kNumLevels; ++i) {
      const double s = t[i][0] + t[i][1] + t[i][2];
      if (s > 0) {
        for (auto& v : t[i]) v *= rows[i] / s;
      }
    }
    for (std::size_t j = 0; j < kNumLevels; ++j) {
      const double s = t[0][j] + t[1][j] + t[2][j];
      if (s > 0) {
        for (std::size_t i = 0; i < kNumLevels; ++i) t[i][j] *= cols[j] / s;
      }
    }
    for (std::size_t i = 0; i < kNumLevels; ++i) {
      err = std::max(err, std::abs(t[i][0] + t[i][1] + t[i][2] - rows[i]));
    }
    if (err < 1e-12) break;
  }

  std::array<std::array<long, kNumLevels>, kNumLevels> out{};
  std::array<long, kNumLevels> row_deficit = rows;
  std::array<long, kNumLevels> col_deficit = cols;
  struct Cell {
    std::size_t i, j;
    double frac;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    for (std::size_t j = 0; j < kNumLevels; ++j) {
      out[i][j] = static_cast<long>(std::floor(t[i][j] + 1e-9));
      row_deficit[i] -= out[i][j];
      col_deficit[j] -= out[i][j];
      cells.push_back({i, j, t[i][j] - out[i][j]});
    }
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return a.frac > b.frac; });
  for (const auto& c : cells) {
    if (row_deficit[c.i] > 0 && col_deficit[c.j] > 0) {
      ++out[c.i][c.j];
      --row_deficit[c.i];
      --col_deficit[c.j];
    }
  }
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    for (std::size_t j = 0; j < kNumLevels && row_deficit[i] > 0; ++j) {
      while (row_deficit[i] > 0 && col_deficit[j] > 0) {
        ++out[i][j];
        --row_deficit[i];
        --col_deficit[j];
      }
    }
  }
  return out;
}

VoiceProfile voice_profile(const StateLabels& labels, double speaker_pitch, std::size_t words,
                           CounterRng& rng) {
  constexpr std::array<double, kNumLevels> stress_pitch = {70.0, 0.0, -25.0};
  constexpr std::array<double, kNumLevels> stress_rate = {1.6, 0.0, -1.0};
  constexpr std::array<double, kNumLevels> engagement_amp = {0.12, 0.3, 0.6};
  constexpr std::array<double, kNumLevels> engagement_rate = {-1.2, 0.0, 0.8};

  const auto s = index(labels[index(Dimension::Stress)]);
  const auto e = index(labels[index(Dimension::Engagement)]);
  VoiceProfile p{};
  p.pitch_hz = std::clamp(speaker_pitch + stress_pitch[s] + rng.normal(0.0, 6.0), 80.0, 400.0);
  p.amplitude = std::clamp(engagement_amp[e] * (1.0 + 0.1 * rng.normal()), 0.05, 0.9);
  p.syllable_rate =
      std::clamp(3.5 + stress_rate[s] + engagement_rate[e] + rng.normal(0.0, 0.25), 1.0, 7.0);
  p.duration_s = std::clamp(0.3 * static_cast<double>(words) + 0.3, 1.2, 3.5);
  return p;
}

AudioClip synthesize_voice(const VoiceProfile& profile, CounterRng& rng, int sample_rate) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(profile.duration_s * sample_rate));
  clip.samples.resize(n);
  const double bursts = std::max(1.0, std::round(profile.syllable_rate * profile.duration_s));
  const double spacing = profile.duration_s / bursts;
  const double width = 0.7 * spacing;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double w = 2.0 * std::numbers::pi * profile.pitch_hz;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    // Raised-cosine syllable envelope centred in each slot.
    const double slot_pos = std::fmod(t, spacing) - 0.5 * spacing;
    double env = 0.08;
    if (std::abs(slot_pos) < 0.5 * width) {
      env += 0.92 * 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * slot_pos / width));
    }
    const double voiced = (std::sin(w * t + phase) + 0.5 * std::sin(2.0 * w * t + phase) +
                           0.25 * std::sin(3.0 * w * t + phase)) /
                          1.75;
    clip.samples[i] = profile.amplitude * (env * voiced + 0.01 * rng.normal());
  }
  quantize_pcm16(clip);
  return clip;
}

DatasetManifest generate_synthetic_corpus(const GenConfig& config, std::uint64_t seed) {
  const ClassCounts counts = effective_counts(config);
  const auto total = static_cast<std::size_t>(config.total);

  // Marginal-exact label columns. Stress and Motivation are drawn jointly.
  std::array<std::vector<Level>, kNumDimensions> columns;
  for (Dimension d : {Dimension::Engagement, Dimension::Understanding}) {
    auto& col = columns[index(d)];
    for (Level l : kAllLevels) col.insert(col.end(), counts[index(d)][index(l)], l);
    CounterRng rng(seed, kStreamLabels + index(d));
    rng.shuffle(col);
  }
  {
    const auto table = joint_table(counts[index(Dimension::Stress)],
                                   counts[index(Dimension::Motivation)],
                                   config.stress_motivation_correlation);
    std::vector<std::pair<Level, Level>> pairs;
    for (Level s : kAllLevels) {
      for (Level m : kAllLevels) pairs.insert(pairs.end(), table[index(s)][index(m)], {s, m});
    }
    CounterRng rng(seed, kStreamLabels + kNumDimensions);
    rng.shuffle(pairs);
    for (const auto& [s, m] : pairs) {
      columns[index(Dimension::Stress)].push_back(s);
      columns[index(Dimension::Motivation)].push_back(m);
    }
  }

  std::vector<bool> voiced(total, false);
  {
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    CounterRng rng(seed, kStreamVoice);
    rng.shuffle(order);
    const auto n_voice = static_cast<std::size_t>(std::lround(config.voice_fraction * total));
    for (std::size_t i = 0; i < n_voice; ++i) voiced[order[i]] = true;
  }

  std::vector<InteractionRecord> records(total);
  const auto students = static_cast<std::size_t>(config.num_students);
  for (std::size_t i = 0; i < total; ++i) {
    CounterRng rng(seed, i);
    auto& r = records[i];
    char id[32];
    std::snprintf(id, sizeof(id), "r%05zu", i);
    r.record_id = id;
    const std::size_t student = i % students;
    std::snprintf(id, sizeof(id), "s%03zu", student + 1);
    r.student_id = id;
    r.session_index = static_cast<int>(i / students);
    for (Dimension d : kAllDimensions) r.labels[index(d)] = columns[index(d)][i];
    r.modality = voiced[i] ? Modality::TextPlusVoice : Modality::TextOnly;
    r.text = compose_text(r.labels, voiced[i], config, rng);
    if (voiced[i]) {
      CounterRng speaker(seed, kStreamStudents + student);
      const double speaker_pitch = speaker.uniform(110.0, 190.0);
      const auto profile = voice_profile(r.labels, speaker_pitch, word_count(r.text), rng);
      r.audio = AudioRef{"audio/" + r.record_id + ".wav", synthesize_voice(profile, rng)};
    }
  }
  return make_manifest(std::move(records), seed);
}

}  // namespace psychstate::corpus
