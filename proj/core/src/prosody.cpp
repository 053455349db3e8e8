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
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <tuple>

#include "psychstate/error.hpp"
#include "psychstate/prosody.hpp"

namespace psychstate::prosody {
namespace {

constexpr double kVoicingThreshold = 0.3;
// Per-lag floor of k / sqrt(overlap): at long lags the overlap is short and
// white noise alone reaches 0.3.
constexpr double kVoicingSignificance = 4.0;
constexpr double kPeakTolerance = 0.9;
constexpr std::size_t kSmoothingFrames = 5;

const std::vector<std::vector<double>>& cached_filterbank(int sample_rate, std::size_t n_fft,
                                                          std::size_t n_mels) {
  static std::mutex mu;
  static std::map<std::tuple<int, std::size_t, std::size_t>, std::vector<std::vector<double>>> cache;
  std::lock_guard lock(mu);
  auto key = std::make_tuple(sample_rate, n_fft, n_mels);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, mel_filterbank(sample_rate, n_fft, n_mels)).first;
  return it->second;
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / (n - 1));
  }
  return w;
}

FrameSet frame_signal(const AudioClip& clip, const FrameConfig& config) {
  validate(clip);
  FrameSet set;
  set.frame_len = static_cast<std::size_t>(std::lround(config.frame_len_s * clip.sample_rate));
  set.hop = static_cast<std::size_t>(std::lround(config.hop_s * clip.sample_rate));
  if (set.frame_len == 0 || set.hop == 0) throw DimensionError("frame length and hop must be positive");
  const std::size_t n = clip.samples.size();
  if (n < set.frame_len) return set;

  const auto window = hamming(set.frame_len);
  const std::size_t count = (n - set.frame_len) / set.hop + 1;
  set.raw.reserve(count);
  set.windowed.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    const auto begin = clip.samples.begin() + static_cast<long>(f * set.hop);
    std::vector<double> raw(begin, begin + static_cast<long>(set.frame_len));
    std::vector<double> win(set.frame_len);
    for (std::size_t i = 0; i < set.frame_len; ++i) win[i] = raw[i] * window[i];
    set.raw.push_back(std::move(raw));
    set.windowed.push_back(std::move(win));
  }
  return set;
}

double estimate_pitch(std::span<const double> x, int sample_rate) {
  const std::size_t n = x.size();
  const auto min_lag = static_cast<std::size_t>(std::floor(sample_rate / kMaxPitchHz));
  auto max_lag = static_cast<std::size_t>(std::ceil(sample_rate / kMinPitchHz));
  if (n < 4 || min_lag < 1) return 0.0;
  max_lag = std::min(max_lag, n - 2);
  if (max_lag <= min_lag) return 0.0;

  // r[k] holds the normalized autocorrelation at lag min_lag - 1 + k so the
  // parabolic fit always has a left neighbour.
  const std::size_t lo = min_lag - 1;
  const std::size_t hi = max_lag + 1;
  std::vector<double> energy(n + 1, 0.0);  // prefix sums of x^2
  for (std::size_t i = 0; i < n; ++i) energy[i + 1] = energy[i] + x[i] * x[i];
  std::vector<double> r(hi - lo + 1, 0.0);
  for (std::size_t lag = lo; lag <= hi && lag < n; ++lag) {
    double xy = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) xy += x[i] * x[i + lag];
    const double xx = energy[n - lag];
    const double yy = energy[n] - energy[lag];
    const double denom = std::sqrt(xx * yy);
    r[lag - lo] = denom > 0.0 ? xy / denom : 0.0;
  }
  const auto at = [&](std::size_t lag) { return r[lag - lo]; };
  const auto threshold = [&](std::size_t lag) {
    return std::max(kVoicingThreshold, kVoicingSignificance / std::sqrt(static_cast<double>(n - lag)));
  };

  double best = 0.0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    if (at(lag) >= threshold(lag)) best = std::max(best, at(lag));
  }
  if (best <= 0.0) return 0.0;

  // Smallest-lag local peak close to the best one: avoids subharmonic errors.
  std::size_t chosen = 0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    const double v = at(lag);
    if (v < threshold(lag) || v < kPeakTolerance * best) continue;
    if (v >= at(lag - 1) && v >= at(lag + 1)) {
      chosen = lag;
      break;
    }
  }
  if (chosen == 0) return 0.0;

  const double left = at(chosen - 1), mid = at(chosen), right = at(chosen + 1);
  const double curvature = left - 2.0 * mid + right;
  double offset = 0.0;
  if (curvature < 0.0) offset = std::clamp(0.5 * (left - right) / curvature, -0.5, 0.5);
  const double pitch = sample_rate / (static_cast<double>(chosen) + offset);
  return std::clamp(pitch, kMinPitchHz, kMaxPitchHz);
}

double intensity(std::span<const double> frame) {
  if (frame.empty()) return kSilenceFloorDb;
  double ss = 0.0;
  for (double v : frame) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(frame.size()));
  return 20.0 * std::log10(std::max(rms, 1e-7));
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(int sample_rate, std::size_t n_fft,
                                                std::size_t n_mels) {
  const double nyquist = sample_rate / 2.0;
  const double mel_hi = hz_to_mel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  const std::size_t bins = n_fft / 2 + 1;
  std::vector<std::vector<double>> bank(n_mels, std::vector<double>(bins, 0.0));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      if (f > left && f < centre) {
        bank[m][k] = (f - left) / (centre - left);
      } else if (f >= centre && f < right) {
        bank[m][k] = (right - f) / (right - centre);
      }
    }
  }
  return bank;
}

std::vector<double> mfcc(std::span<const double> frame, int sample_rate, const MfccConfig& config) {
  const std::size_t n = std::min(frame.size(), config.n_fft);
  std::vector<double> emphasized(n);
  for (std::size_t i = 0; i < n; ++i) {
    emphasized[i] = i == 0 ? frame[0] : frame[i] - config.preemphasis * frame[i - 1];
  }
  const auto spectrum = magnitude_spectrum(emphasized, config.n_fft);
  const auto& bank = cached_filterbank(sample_rate, config.n_fft, config.n_mels);

  std::vector<double> log_energy(config.n_mels);
  for (std::size_t m = 0; m < config.n_mels; ++m) {
    double e = 0.0;
    for (std::size_t k = 0; k < spectrum.size(); ++k) e += bank[m][k] * spectrum[k];
    log_energy[m] = std::log(std::max(e, config.log_floor));
  }

  const double M = static_cast<double>(config.n_mels);
  std::vector<double> coeffs(config.n_coeffs);
  for (std::size_t c = 0; c < config.n_coeffs; ++c) {
    double acc = 0.0;
    for (std::size_t m = 0; m < config.n_mels; ++m) {
      acc += log_energy[m] * std::cos(std::numbers::pi * c * (m + 0.5) / M);
    }
    coeffs[c] = acc * (c == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M));
  }
  return coeffs;
}

ProsodyTrack extract(const AudioClip& clip, const FrameConfig& frames_config,
                     const MfccConfig& mfcc_config) {
  if (mfcc_config.n_coeffs != kNumMfcc) throw DimensionError("tracks carry exactly 13 MFCCs");
  const FrameSet frames = frame_signal(clip, frames_config);
  ProsodyTrack track;
  track.frame_hop = frames_config.hop_s;
  track.frame_len = frames_config.frame_len_s;
  track.duration = clip.duration();
  track.frames.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    ProsodyFrame pf;
    pf.pitch = estimate_pitch(frames.raw[f], clip.sample_rate);
    pf.intensity = intensity(frames.raw[f]);
    const auto c = mfcc(frames.windowed[f], clip.sample_rate, mfcc_config);
    std::copy(c.begin(), c.end(), pf.mfcc.begin());
    track.frames.push_back(pf);
  }
  track.speech_rate = speech_rate(track);
  return track;
}

double speech_rate(const ProsodyTrack& track) {
  if (track.duration <= 0.0 || track.frames.size() < 3) return 0.0;
  const std::size_t n = track.frames.size();
  std::vector<double> smooth(n);
  const std::size_t half = kSmoothingFrames / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= half ? i - half : 0;
    const std::size_t b = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::size_t j = a; j <= b; ++j) s += track.frames[j].intensity;
    smooth[i] = s / static_cast<double>(b - a + 1);
  }
  const double mean = mean_of(smooth);
  double var = 0.0;
  for (double v : smooth) var += (v - mean) * (v - mean);
  const double threshold = mean + 0.5 * std::sqrt(var / static_cast<double>(n));

  long peaks = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1] && smooth[i] > threshold) ++peaks;
  }
  return static_cast<double>(peaks) / track.duration;
}

FeatureVector frame_vector(const ProsodyTrack& track, std::size_t i) {
  const auto& f = track.frames[i];
  FeatureVector v{};
  v[0] = f.pitch;
  v[1] = f.intensity;
  v[2] = track.speech_rate;
  std::copy(f.mfcc.begin(), f.mfcc.end(), v.begin() + 3);
  return v;
}

NormalizationStats compute_stats(std::span<const ProsodyTrack> tracks) {
  std::array<std::vector<double>, kFeatureDim> values;
  for (const auto& t : tracks) {
    values[2].push_back(t.speech_rate);
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
      const auto v = frame_vector(t, i);
      if (v[0] > 0.0) values[0].push_back(v[0]);
      values[1].push_back(v[1]);
      for (std::size_t k = 3; k < kFeatureDim; ++k) values[k].push_back(v[k]);
    }
  }
  NormalizationStats stats;
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    stats.mean[k] = mean_of(values[k]);
    stats.stddev[k] = sample_std(values[k], stats.mean[k]);
  }
  return stats;
}

ProsodyTrack normalize(const ProsodyTrack& track, const NormalizationStats& stats) {
  const auto z = [&](double x, std::size_t k) {
    const double centred = x - stats.mean[k];
    return stats.stddev[k] > 0.0 ? centred / stats.stddev[k] : centred;
  };
  ProsodyTrack out = track;
  for (auto& f : out.frames) {
    f.pitch = f.pitch > 0.0 ? z(f.pitch, 0) : kUnvoicedSentinel;
    f.intensity = z(f.intensity, 1);
    for (std::size_t c = 0; c < kNumMfcc; ++c) f.mfcc[c] = z(f.mfcc[c], 3 + c);
  }
  out.speech_rate = z(track.speech_rate, 2);
  out.normalization_stats = stats;
  return out;
}

FeatureVector clip_mean(const ProsodyTrack& track) {
  FeatureVector mean{};
  for (std::size_t i = 0; i < track.frames.size(); ++i) {
    const auto v = frame_vector(track, i);
    for (std::size_t k = 0; k < kFeatureDim; ++k) mean[k] += v[k];
  }
  if (!track.frames.empty()) {
    for (double& m : mean) m /= static_cast<double>(track.frames.size());
  }
  mean[2] = track.speech_rate;
  return mean;
}

std::vector<FeatureVector> align_to_tokens(const ProsodyTrack& track,
                                           std::span<const std::pair<double, double>> spans) {
  const FeatureVector fallback = clip_mean(track);
  std::vector<FeatureVector> out;
  out.reserve(spans.size());
  for (const auto& [begin, end] : spans) {
    FeatureVector acc{};
    std::size_t count = 0;
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
      const double centre = static_cast<double>(i) * track.frame_hop + 0.5 * track.frame_len;
      if (centre >= begin && centre < end) {
        const auto v = frame_vector(track, i);
        for (std::size_t k = 0; k < kFeatureDim; ++k) acc[k] += v[k];
        ++count;
      }
    }
    if (count == 0) {
      out.push_back(fallback);
      continue;
    }
    for (double& a : acc) a /= static_cast<double>(count);
    out.push_back(acc);
  }
  return out;
}

std::vector<std::pair<double, double>> uniform_spans(std::size_t count, double duration) {
  std::vector<std::pair<double, double>> spans;
  spans.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    spans.emplace_back(duration * static_cast<double>(i) / static_cast<double>(count),
                       duration * static_cast<double>(i + 1) / static_cast<double>(count));
  }
  return spans;
}

void write_feature_csv(std::ostream& out, const ProsodyTrack& track) {
  out << "frame,pitch_hz,intensity_db";
  for (std::size_t c = 0; c < kNumMfcc; ++c) out << ",mfcc" << c;
  out << '\n';
  for (std::size_t i = 0; i < track.frames.size(); ++i) {
    const auto& f = track.frames[i];
    out << i << ',' << f.pitch << ',' << f.intensity;
    for (double c : f.mfcc) out << ',' << c;
    out << '\n';
  }
}

}  // namespace psychstate::prosody
