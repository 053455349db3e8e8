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

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psychstate/types.hpp"

namespace psychstate::feedback {

enum class Category { CognitiveSupport, MotivationalNudge, WellBeingCue, NoAction };
enum class Urgency { Low, High };

std::string_view name(Category c);
std::string_view name(Urgency u);

struct PolicyConfig {
  std::array<double, kNumDimensions> thresholds{0.5, 0.5, 0.5, 0.5};
  double step = 0.05;
  double lower = 0.2;
  double upper = 0.8;
  double target_rate = 0.5;
  /// Rates in [target_rate, target_rate + dead_zone] leave thresholds alone.
  double dead_zone = 0.2;
  /// Urgency is High when the triggering probability exceeds theta + margin.
  double high_margin = 0.25;
  std::size_t window = 10;

  double threshold(Dimension d) const { return thresholds[index(d)]; }
  void validate() const;
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct InterventionPlan {
  Category category = Category::NoAction;
  Urgency urgency = Urgency::Low;
  std::string message;
  std::vector<Dimension> triggers;
  /// Negative-pole probability per dimension at decision time.
  std::array<double, kNumDimensions> negative_probs{};
};

/// Understanding beats Motivation/Engagement, which beat Stress.
InterventionPlan select_intervention(const Prediction& prediction, const PolicyConfig& policy,
                                     std::string_view kg_prompt);

/// One delivered intervention and the follow-up reading of the dimension
/// that triggered it.
struct Outcome {
  Dimension dimension = Dimension::Stress;
  double before = 0.0;
  double after = 0.0;
  bool improved() const { return after < before; }
};

/// Uses the last `policy.window` outcomes. Dimensions without outcomes in the
/// window keep their threshold.
PolicyConfig recalibrate(const PolicyConfig& policy, const std::vector<Outcome>& outcomes);

struct RiskCriteria {
  std::size_t window = 3;
  double threshold = 0.6;
};

struct Observation {
  int session_index = 0;
  Prediction prediction;
};

struct AlertRecord {
  std::string student_id;
  int first_session = 0;
  int last_session = 0;
  std::string reason;
  /// Mean Negative probability over the alert span.
  double stress_evidence = 0.0;
  double motivation_evidence = 0.0;
};

/// Windows whose mean Stress- or Motivation-Negative probability reaches the
/// threshold; windows sharing an observation merge into one alert.
std::vector<AlertRecord> flag_at_risk(std::string_view student_id, const std::vector<Observation>& history,
                                      const RiskCriteria& criteria = {});

// ---------------------------------------------------------------------------
// Psychometric trends

enum class Instrument { PSS, STAI, AMS };
std::string_view name(Instrument i);
std::string_view label(Instrument i);  // "PSS (Stress)"
std::optional<Instrument> parse_instrument(std::string_view s);

struct Measurement {
  double mean = 0.0;
  double stddev = 0.0;
};

struct PsychometricSeries {
  Instrument instrument = Instrument::PSS;
  /// T0, T1, T2; T1 may be absent.
  std::array<std::optional<Measurement>, 3> points;

  std::size_t count() const;
};

/// 100 * (post - pre) / pre. Throws ConfigError when pre == 0.
double percent_change(double pre, double post);
/// Signed, one decimal: "-19.2%", "+26.2%", "0.0%".
std::string format_percent(double value);

/// CSV rows `instrument,time,mean,std` with time in {T0,T1,T2}.
std::vector<PsychometricSeries> parse_series(std::string_view csv);
std::vector<PsychometricSeries> load_series(const std::filesystem::path& path);

struct TrendReport {
  std::string markdown;
  std::string svg;
};

/// Throws ConfigError when a series has fewer than two time points.
TrendReport trend_report(const std::vector<PsychometricSeries>& series);

// ---------------------------------------------------------------------------
// Logs (one JSON object per line)

std::string intervention_log_line(std::string_view timestamp, std::string_view student_id,
                                  const InterventionPlan& plan);
std::string alert_log_line(std::string_view timestamp, const AlertRecord& alert);

}  // namespace psychstate::feedback
