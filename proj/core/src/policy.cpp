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
#include <cmath>

#include <json.hpp>

#include "psychstate/error.hpp"
#include "psychstate/feedback.hpp"

namespace psychstate::feedback {
namespace {

// Guards the dead-zone edges against rounding in k/n rates.
constexpr double kRateEps = 1e-12;

std::string_view opening(Category c) {
  switch (c) {
    case Category::CognitiveSupport: return "Let's slow down and look at this step by step.";
    case Category::MotivationalNudge: return "You're making progress, so keep going.";
    case Category::WellBeingCue: return "Take a short breather before the next exercise.";
    case Category::NoAction: return "";
  }
  return "";
}

}  // namespace

std::string_view name(Category c) {
  switch (c) {
    case Category::CognitiveSupport: return "CognitiveSupport";
    case Category::MotivationalNudge: return "MotivationalNudge";
    case Category::WellBeingCue: return "WellBeingCue";
    case Category::NoAction: return "NoAction";
  }
  return "?";
}

std::string_view name(Urgency u) { return u == Urgency::High ? "High" : "Low"; }

void PolicyConfig::validate() const {
  if (!(lower > 0.0 && lower <= upper && upper < 1.0)) throw ConfigError("threshold bounds must satisfy 0 < lower <= upper < 1");
  for (double t : thresholds) {
    if (!(t >= lower && t <= upper)) throw ConfigError("policy thresholds must lie within [lower, upper]");
  }
  if (!(step > 0.0)) throw ConfigError("recalibration step must be > 0");
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) throw ConfigError("target rate must be in [0, 1]");
  if (!(dead_zone >= 0.0)) throw ConfigError("dead zone must be >= 0");
  if (!(high_margin >= 0.0)) throw ConfigError("urgency margin must be >= 0");
  if (window == 0) throw ConfigError("outcome window must be >= 1");
}

InterventionPlan select_intervention(const Prediction& prediction, const PolicyConfig& policy,
                                     std::string_view kg_prompt) {
  InterventionPlan plan;
  for (Dimension d : kAllDimensions) plan.negative_probs[index(d)] = prediction.negative(d);
  const auto over = [&](Dimension d) { return prediction.negative(d) > policy.threshold(d); };

  if (over(Dimension::Understanding)) {
    plan.category = Category::CognitiveSupport;
    plan.triggers = {Dimension::Understanding};
  } else if (over(Dimension::Motivation) || over(Dimension::Engagement)) {
    plan.category = Category::MotivationalNudge;
    for (Dimension d : {Dimension::Engagement, Dimension::Motivation}) {
      if (over(d)) plan.triggers.push_back(d);
    }
  } else if (over(Dimension::Stress)) {
    plan.category = Category::WellBeingCue;
    plan.triggers = {Dimension::Stress};
  } else {
    return plan;
  }

  for (Dimension d : plan.triggers) {
    if (prediction.negative(d) > policy.threshold(d) + policy.high_margin) plan.urgency = Urgency::High;
  }
  plan.message = std::string(opening(plan.category));
  if (!kg_prompt.empty()) plan.message += " " + std::string(kg_prompt);
  return plan;
}

PolicyConfig recalibrate(const PolicyConfig& policy, const std::vector<Outcome>& outcomes) {
  PolicyConfig next = policy;
  if (outcomes.empty()) return next;
  const std::size_t start = outcomes.size() > policy.window ? outcomes.size() - policy.window : 0;
  std::array<int, kNumDimensions> total{}, improved{};
  for (std::size_t i = start; i < outcomes.size(); ++i) {
    const std::size_t k = index(outcomes[i].dimension);
    ++total[k];
    if (outcomes[i].improved()) ++improved[k];
  }
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    if (total[k] == 0) continue;
    const double rate = static_cast<double>(improved[k]) / total[k];
    double& theta = next.thresholds[k];
    if (rate < policy.target_rate - kRateEps) {
      theta = std::max(theta - policy.step, policy.lower);
    } else if (rate > policy.target_rate + policy.dead_zone + kRateEps) {
      theta = std::min(theta + policy.step, policy.upper);
    }
  }
  return next;
}

std::vector<AlertRecord> flag_at_risk(std::string_view student_id, const std::vector<Observation>& history,
                                      const RiskCriteria& criteria) {
  std::vector<AlertRecord> alerts;
  const std::size_t w = criteria.window;
  if (w == 0 || history.size() < w) return alerts;

  // Qualifying windows as [first, last] observation positions.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i + w <= history.size(); ++i) {
    double stress = 0.0, motivation = 0.0;
    for (std::size_t j = i; j < i + w; ++j) {
      stress += history[j].prediction.negative(Dimension::Stress);
      motivation += history[j].prediction.negative(Dimension::Motivation);
    }
    stress /= static_cast<double>(w);
    motivation /= static_cast<double>(w);
    if (stress < criteria.threshold && motivation < criteria.threshold) continue;
    if (!spans.empty() && i <= spans.back().second) {
      spans.back().second = i + w - 1;
    } else {
      spans.emplace_back(i, i + w - 1);
    }
  }

  for (const auto& [first, last] : spans) {
    AlertRecord a;
    a.student_id = std::string(student_id);
    a.first_session = history[first].session_index;
    a.last_session = history[last].session_index;
    for (std::size_t j = first; j <= last; ++j) {
      a.stress_evidence += history[j].prediction.negative(Dimension::Stress);
      a.motivation_evidence += history[j].prediction.negative(Dimension::Motivation);
    }
    const double n = static_cast<double>(last - first + 1);
    a.stress_evidence /= n;
    a.motivation_evidence /= n;
    const bool stress = a.stress_evidence >= criteria.threshold;
    const bool motivation = a.motivation_evidence >= criteria.threshold;
    if (stress && motivation) {
      a.reason = "sustained stress and low motivation";
    } else if (motivation) {
      a.reason = "sustained low motivation";
    } else {
      a.reason = "sustained stress";
    }
    alerts.push_back(std::move(a));
  }
  return alerts;
}

std::string intervention_log_line(std::string_view timestamp, std::string_view student_id,
                                  const InterventionPlan& plan) {
  nlohmann::ordered_json j;
  j["timestamp"] = timestamp;
  j["student_id"] = student_id;
  j["category"] = name(plan.category);
  j["urgency"] = name(plan.urgency);
  j["message"] = plan.message;
  nlohmann::ordered_json probs = nlohmann::ordered_json::object();
  for (Dimension d : plan.triggers) probs[std::string(key(d))] = plan.negative_probs[index(d)];
  j["triggering_probs"] = probs;
  return j.dump();
}

std::string alert_log_line(std::string_view timestamp, const AlertRecord& alert) {
  nlohmann::ordered_json j;
  j["timestamp"] = timestamp;
  j["student_id"] = alert.student_id;
  j["sessions"] = {alert.first_session, alert.last_session};
  j["reason"] = alert.reason;
  j["evidence"] = {{"stress", alert.stress_evidence}, {"motivation", alert.motivation_evidence}};
  return j.dump();
}

}  // namespace psychstate::feedback
