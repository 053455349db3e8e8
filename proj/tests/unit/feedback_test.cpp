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

#include <cmath>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "psychstate/error.hpp"
#include "psychstate/feedback.hpp"
#include "psychstate/rng.hpp"

namespace psychstate::feedback {
namespace {

// Negative probability `neg` for each dimension, the rest on Neutral.
Prediction with_negatives(const std::array<double, kNumDimensions>& neg) {
  Prediction p;
  for (Dimension d : kAllDimensions) p[d] = {neg[index(d)], 1.0 - neg[index(d)], 0.0};
  return p;
}

// Priority rule restated independently of the implementation.
Category expected_category(const std::array<double, kNumDimensions>& neg, double theta) {
  const auto over = [&](Dimension d) { return neg[index(d)] > theta; };
  if (over(Dimension::Understanding)) return Category::CognitiveSupport;
  if (over(Dimension::Motivation) || over(Dimension::Engagement)) return Category::MotivationalNudge;
  if (over(Dimension::Stress)) return Category::WellBeingCue;
  return Category::NoAction;
}

TEST(Select, ExhaustivePriorityGrid) {
  const PolicyConfig policy;
  long checked = 0;
  for (int a = 0; a <= 20; ++a) {
    for (int b = 0; b <= 20; ++b) {
      for (int c = 0; c <= 20; ++c) {
        for (int d = 0; d <= 20; ++d) {
          const std::array<double, 4> neg = {a * 0.05, b * 0.05, c * 0.05, d * 0.05};
          const auto plan = select_intervention(with_negatives(neg), policy, "");
          ASSERT_EQ(plan.category, expected_category(neg, 0.5)) << a << " " << b << " " << c << " " << d;
          ++checked;
        }
      }
    }
  }
  EXPECT_EQ(checked, 194481);
}

TEST(Select, Examples) {
  const PolicyConfig policy;
  const auto cog = select_intervention(with_negatives({0.1, 0.1, 0.1, 0.9}), policy, "Loops are hard.");
  EXPECT_EQ(cog.category, Category::CognitiveSupport);
  EXPECT_EQ(cog.urgency, Urgency::High);
  EXPECT_NE(cog.message.find("Loops are hard."), std::string::npos);
  EXPECT_EQ(cog.triggers, std::vector<Dimension>{Dimension::Understanding});

  const auto none = select_intervention(with_negatives({0.1, 0.1, 0.1, 0.1}), policy, "x");
  EXPECT_EQ(none.category, Category::NoAction);
  EXPECT_TRUE(none.message.empty());

  const auto nudge = select_intervention(with_negatives({0.1, 0.6, 0.6, 0.1}), policy, "");
  EXPECT_EQ(nudge.category, Category::MotivationalNudge);
  EXPECT_EQ(nudge.urgency, Urgency::Low);

  // Exactly at threshold does not trigger.
  EXPECT_EQ(select_intervention(with_negatives({0.5, 0.5, 0.5, 0.5}), policy, "").category, Category::NoAction);
}

std::vector<Outcome> outcomes(Dimension d, int improved, int total) {
  std::vector<Outcome> out;
  for (int i = 0; i < total; ++i) out.push_back({d, 0.8, i < improved ? 0.4 : 0.9});
  return out;
}

TEST(Recalibrate, Rules) {
  PolicyConfig p;
  const auto lowered = recalibrate(p, outcomes(Dimension::Stress, 0, 10));
  EXPECT_NEAR(lowered.threshold(Dimension::Stress), 0.45, 1e-12);
  EXPECT_EQ(lowered.threshold(Dimension::Engagement), 0.5);

  p.thresholds[index(Dimension::Stress)] = 0.2;
  EXPECT_EQ(recalibrate(p, outcomes(Dimension::Stress, 0, 10)).threshold(Dimension::Stress), 0.2);

  p = PolicyConfig{};
  EXPECT_EQ(recalibrate(p, outcomes(Dimension::Stress, 5, 10)), p);  // rate exactly 0.5
  EXPECT_EQ(recalibrate(p, outcomes(Dimension::Stress, 7, 10)), p);  // inside the dead zone
  EXPECT_NEAR(recalibrate(p, outcomes(Dimension::Stress, 8, 10)).threshold(Dimension::Stress), 0.55, 1e-12);
  EXPECT_EQ(recalibrate(p, {}), p);
}

TEST(Recalibrate, StaysInBoundsAndConverges) {
  CounterRng rng(1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    PolicyConfig p;
    for (auto& t : p.thresholds) t = rng.uniform(0.2, 0.8);
    std::vector<Outcome> window;
    for (int i = 0; i < 10; ++i) {
      window.push_back({kAllDimensions[rng.below(4)], 0.7, rng.bernoulli(rng.uniform(0.0, 1.0)) ? 0.3 : 0.9});
    }
    // Stationary outcomes: the same window every round.
    PolicyConfig prev = p;
    int stable_from = -1;
    for (int round = 0; round < 40; ++round) {
      const auto next = recalibrate(prev, window);
      for (double t : next.thresholds) {
        ASSERT_GE(t, 0.2 - 1e-12);
        ASSERT_LE(t, 0.8 + 1e-12);
      }
      if (next == prev && stable_from < 0) stable_from = round;
      if (stable_from >= 0) {
        ASSERT_EQ(next, prev) << "threshold moved after settling";
      }
      prev = next;
    }
    EXPECT_GE(stable_from, 0);
  }
}

std::vector<Observation> history_of(const std::vector<double>& stress_neg, int first_session = 1) {
  std::vector<Observation> h;
  for (std::size_t i = 0; i < stress_neg.size(); ++i) {
    h.push_back({first_session + static_cast<int>(i), with_negatives({0.1, stress_neg[i], 0.1, 0.1})});
  }
  return h;
}

TEST(Risk, Examples) {
  const auto one = flag_at_risk("s1", history_of({0.9, 0.9, 0.9}));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].first_session, 1);
  EXPECT_EQ(one[0].last_session, 3);
  EXPECT_EQ(one[0].reason, "sustained stress");
  EXPECT_TRUE(flag_at_risk("s1", history_of({0.1, 0.1, 0.1, 0.1, 0.1})).empty());
  const auto merged = flag_at_risk("s1", history_of({0.9, 0.9, 0.9, 0.9}));
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].last_session, 4);
  EXPECT_TRUE(flag_at_risk("s1", history_of({0.9, 0.9})).empty());
}

// Oracle: mark qualifying windows, then take connected components of windows
// that share at least one observation.
std::vector<std::pair<int, int>> oracle_spans(const std::vector<double>& s, std::size_t w, double theta) {
  std::vector<std::pair<int, int>> windows;
  for (std::size_t i = 0; i + w <= s.size(); ++i) {
    double m = 0;
    for (std::size_t j = i; j < i + w; ++j) m += s[j];
    if (m / w >= theta) windows.emplace_back(static_cast<int>(i), static_cast<int>(i + w - 1));
  }
  std::vector<std::pair<int, int>> out;
  for (const auto& win : windows) {
    if (!out.empty() && win.first <= out.back().second) {
      out.back().second = std::max(out.back().second, win.second);
    } else {
      out.push_back(win);
    }
  }
  return out;
}

TEST(Risk, MaximalDisjointSpansMatchOracle) {
  CounterRng rng(2, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> s(3 + rng.below(15));
    for (auto& v : s) v = rng.bernoulli(0.5) ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.5);
    const auto alerts = flag_at_risk("s", history_of(s, 0));
    const auto want = oracle_spans(s, 3, 0.6);
    ASSERT_EQ(alerts.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(alerts[i].first_session, want[i].first);
      EXPECT_EQ(alerts[i].last_session, want[i].second);
      if (i > 0) {
        EXPECT_GT(alerts[i].first_session, alerts[i - 1].last_session);
      }
    }
  }
}

TEST(Risk, RelaxingThresholdOnlyAddsCoverage) {
  CounterRng rng(3, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(12);
    for (auto& v : s) v = rng.uniform(0.0, 1.0);
    const auto h = history_of(s, 0);
    std::set<int> strict_cover, relaxed_cover;
    for (const auto& a : flag_at_risk("s", h, {3, 0.7})) {
      for (int k = a.first_session; k <= a.last_session; ++k) strict_cover.insert(k);
    }
    for (const auto& a : flag_at_risk("s", h, {3, 0.5})) {
      for (int k = a.first_session; k <= a.last_session; ++k) relaxed_cover.insert(k);
    }
    for (int k : strict_cover) EXPECT_TRUE(relaxed_cover.contains(k));
  }
}

TEST(Trend, TableFivePercentages) {
  EXPECT_EQ(format_percent(percent_change(22.4, 18.1)), "-19.2%");
  EXPECT_NEAR(percent_change(47.3, 39.5), -16.4, 0.1);
  EXPECT_EQ(format_percent(percent_change(18.7, 23.6)), "+26.2%");
  EXPECT_EQ(format_percent(percent_change(5.0, 5.0)), "0.0%");
  EXPECT_THROW(percent_change(0.0, 1.0), ConfigError);
}

const char* kSeries =
    "instrument,time,mean,std\n"
    "PSS,T0,22.4,5.1\nPSS,T2,18.1,4.7\n"
    "STAI,T0,47.3,6.8\nSTAI,T2,39.5,6.1\n"
    "AMS,T0,18.7,4.2\nAMS,T2,23.6,4.9\n";

TEST(Trend, ReportRowsAndDeterminism) {
  const auto series = parse_series(kSeries);
  ASSERT_EQ(series.size(), 3u);
  const auto a = trend_report(series);
  const auto b = trend_report(parse_series(kSeries));
  EXPECT_EQ(a.markdown, b.markdown);
  EXPECT_EQ(a.svg, b.svg);
  EXPECT_NE(a.markdown.find("| Measure | T0 (Pre) | T2 (Post) | Change (%) |"), std::string::npos);
  EXPECT_NE(a.markdown.find("-19.2%"), std::string::npos);
  EXPECT_NE(a.markdown.find("-16.5%"), std::string::npos);
  EXPECT_NE(a.markdown.find("+26.2%"), std::string::npos);
  EXPECT_EQ(std::count(a.svg.begin(), a.svg.end(), '\n') > 0, true);
  std::size_t polylines = 0;
  for (auto pos = a.svg.find("<polyline"); pos != std::string::npos; pos = a.svg.find("<polyline", pos + 1)) ++polylines;
  EXPECT_EQ(polylines, 3u);
}

TEST(Trend, FlatSeriesAndErrors) {
  const auto flat = trend_report(parse_series("instrument,time,mean,std\nPSS,T0,20,1\nPSS,T1,20,1\nPSS,T2,20,1\n"));
  EXPECT_NE(flat.markdown.find("0.0%"), std::string::npos);
  EXPECT_THROW(trend_report(parse_series("instrument,time,mean,std\nPSS,T0,20,1\n")), ConfigError);
  EXPECT_THROW(parse_series("instrument,time,mean,std\nXYZ,T0,20,1\n"), ParseError);
}

TEST(Logs, JsonLines) {
  const auto plan = select_intervention(with_negatives({0.1, 0.9, 0.1, 0.1}), PolicyConfig{}, "");
  const auto line = intervention_log_line("1970-01-01T00:00:00Z", "s003", plan);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["student_id"], "s003");
  EXPECT_EQ(j["category"], std::string(name(Category::WellBeingCue)));

  const auto alerts = flag_at_risk("s9", history_of({0.9, 0.9, 0.9}));
  const auto a = nlohmann::json::parse(alert_log_line("t", alerts.at(0)));
  EXPECT_EQ(a["student_id"], "s9");
}

}  // namespace
}  // namespace psychstate::feedback
