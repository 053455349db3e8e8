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
#include <cstdio>
#include <fstream>
#include <sstream>

#include "psychstate/error.hpp"
#include "psychstate/feedback.hpp"

namespace psychstate::feedback {
namespace {

constexpr std::array<Instrument, 3> kInstruments = {Instrument::PSS, Instrument::STAI, Instrument::AMS};
constexpr std::array<std::string_view, 3> kColors = {"#c0392b", "#8e44ad", "#27ae60"};
constexpr std::array<std::string_view, 3> kTimes = {"T0", "T1", "T2"};

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", line);
  }
}

const Measurement& first(const PsychometricSeries& s) {
  for (const auto& p : s.points) {
    if (p) return *p;
  }
  throw ConfigError("series has no time points");
}

const Measurement& last(const PsychometricSeries& s) {
  for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) {
    if (*it) return **it;
  }
  throw ConfigError("series has no time points");
}

}  // namespace

std::string_view name(Instrument i) {
  switch (i) {
    case Instrument::PSS: return "PSS";
    case Instrument::STAI: return "STAI";
    case Instrument::AMS: return "AMS";
  }
  return "?";
}

std::string_view label(Instrument i) {
  switch (i) {
    case Instrument::PSS: return "PSS (Stress)";
    case Instrument::STAI: return "STAI (Anxiety)";
    case Instrument::AMS: return "AMS (Motivation)";
  }
  return "?";
}

std::optional<Instrument> parse_instrument(std::string_view s) {
  for (Instrument i : kInstruments) {
    if (s == name(i)) return i;
  }
  return std::nullopt;
}

std::size_t PsychometricSeries::count() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.has_value(); }));
}

double percent_change(double pre, double post) {
  if (pre == 0.0) throw ConfigError("percent change is undefined for a zero baseline");
  return 100.0 * (post - pre) / pre;
}

std::string format_percent(double value) {
  const double rounded = std::round(value * 10.0) / 10.0;
  if (rounded == 0.0) return "0.0%";
  return fmt(rounded, "%+.1f") + "%";
}

std::vector<PsychometricSeries> parse_series(std::string_view csv) {
  std::vector<PsychometricSeries> out;
  std::istringstream in{std::string(csv)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line.starts_with("instrument,")) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(trim(col));
    if (cols.size() != 4) throw ParseError("expected instrument,time,mean,std", line_no);
    const auto inst = parse_instrument(cols[0]);
    if (!inst) throw ParseError("unknown instrument '" + cols[0] + "'", line_no);
    const auto t = std::find(kTimes.begin(), kTimes.end(), cols[1]);
    if (t == kTimes.end()) throw ParseError("time must be T0, T1 or T2, got '" + cols[1] + "'", line_no);
    const Measurement m{parse_number(cols[2], line_no), parse_number(cols[3], line_no)};
    if (m.mean < 0.0 || m.stddev < 0.0) throw ParseError("psychometric values must be >= 0", line_no);

    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.instrument == *inst; });
    if (it == out.end()) {
      out.push_back({*inst, {}});
      it = out.end() - 1;
    }
    auto& slot = it->points[static_cast<std::size_t>(t - kTimes.begin())];
    if (slot) throw ParseError("duplicate " + cols[0] + " " + cols[1], line_no);
    slot = m;
  }
  return out;
}

std::vector<PsychometricSeries> load_series(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw MissingArtifactError("cannot open psychometric series: " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_series(buf.str());
}

TrendReport trend_report(const std::vector<PsychometricSeries>& series) {
  for (const auto& s : series) {
    if (s.count() < 2) throw ConfigError(std::string(name(s.instrument)) + " needs at least two time points");
  }
  TrendReport r;
  r.markdown = "| Measure | T0 (Pre) | T2 (Post) | Change (%) |\n|---|---|---|---|\n";
  for (const auto& s : series) {
    const auto& a = first(s);
    const auto& b = last(s);
    r.markdown += "| " + std::string(label(s.instrument)) + " | " + fmt(a.mean, "%.1f") + " ± " +
                  fmt(a.stddev, "%.1f") + " | " + fmt(b.mean, "%.1f") + " ± " + fmt(b.stddev, "%.1f") +
                  " | " + format_percent(percent_change(a.mean, b.mean)) + " |\n";
  }

  // Chart: x = time point, y = score on a shared axis.
  constexpr double kW = 480, kH = 300, kLeft = 50, kRight = 130, kTop = 20, kBottom = 40;
  double lo = 0.0, hi = 1.0;
  bool any = false;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      if (!p) continue;
      lo = any ? std::min(lo, p->mean) : p->mean;
      hi = any ? std::max(hi, p->mean) : p->mean;
      any = true;
    }
  }
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.1 * (hi - lo);
  lo = std::max(0.0, lo - pad);
  hi += pad;
  const auto x_of = [&](std::size_t t) { return kLeft + (kW - kLeft - kRight) * static_cast<double>(t) / 2.0; };
  const auto y_of = [&](double v) { return kTop + (kH - kTop - kBottom) * (hi - v) / (hi - lo); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW, "%.0f") + "\" height=\"" +
                    fmt(kH, "%.0f") + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + fmt(kLeft, "%.1f") + "\" y1=\"" + fmt(kH - kBottom, "%.1f") + "\" x2=\"" +
         fmt(kW - kRight, "%.1f") + "\" y2=\"" + fmt(kH - kBottom, "%.1f") + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt(kLeft, "%.1f") + "\" y1=\"" + fmt(kTop, "%.1f") + "\" x2=\"" + fmt(kLeft, "%.1f") +
         "\" y2=\"" + fmt(kH - kBottom, "%.1f") + "\" stroke=\"black\"/>\n";
  for (std::size_t t = 0; t < kTimes.size(); ++t) {
    svg += "<text x=\"" + fmt(x_of(t), "%.1f") + "\" y=\"" + fmt(kH - kBottom + 18, "%.1f") +
           "\" text-anchor=\"middle\">" + std::string(kTimes[t]) + "</text>\n";
  }
  svg += "<text x=\"" + fmt(kLeft - 6, "%.1f") + "\" y=\"" + fmt(y_of(hi), "%.1f") + "\" text-anchor=\"end\">" +
         fmt(hi, "%.1f") + "</text>\n";
  svg += "<text x=\"" + fmt(kLeft - 6, "%.1f") + "\" y=\"" + fmt(y_of(lo), "%.1f") + "\" text-anchor=\"end\">" +
         fmt(lo, "%.1f") + "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const auto color = kColors[static_cast<std::size_t>(s.instrument)];
    std::string pts;
    for (std::size_t t = 0; t < s.points.size(); ++t) {
      if (!s.points[t]) continue;
      if (!pts.empty()) pts += ' ';
      pts += fmt(x_of(t), "%.1f") + "," + fmt(y_of(s.points[t]->mean), "%.1f");
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts +
           "\"/>\n";
    svg += "<text x=\"" + fmt(kW - kRight + 10, "%.1f") + "\" y=\"" + fmt(kTop + 16.0 * (i + 1), "%.1f") +
           "\" fill=\"" + std::string(color) + "\">" + std::string(label(s.instrument)) + "</text>\n";
  }
  svg += "</svg>\n";
  r.svg = std::move(svg);
  return r;
}

}  // namespace psychstate::feedback
