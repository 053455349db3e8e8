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
#include <complex>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "psychstate/audio.hpp"

namespace psychstate::prosody {

inline constexpr std::size_t kNumMfcc = 13;
/// pitch, intensity, speech rate, 13 MFCCs.
inline constexpr std::size_t kFeatureDim = 3 + kNumMfcc;
inline constexpr double kSilenceFloorDb = -140.0;
inline constexpr double kUnvoicedSentinel = -3.0;
inline constexpr double kMinPitchHz = 50.0;
inline constexpr double kMaxPitchHz = 500.0;

using FeatureVector = std::array<double, kFeatureDim>;

// ---------------------------------------------------------------------------
// FFT

/// In-place iterative radix-2 FFT. Size must be a power of two.
void fft(std::vector<std::complex<double>>& data);

/// |X_k| for k = 0..n_fft/2 of the zero-padded frame.
std::vector<double> magnitude_spectrum(std::span<const double> frame, std::size_t n_fft);

// ---------------------------------------------------------------------------
// Framing

struct FrameConfig {
  double frame_len_s = 0.025;
  double hop_s = 0.010;
};

struct FrameSet {
  std::vector<std::vector<double>> raw;
  std::vector<std::vector<double>> windowed;  // Hamming
  std::size_t frame_len = 0;                  // samples
  std::size_t hop = 0;                        // samples
  std::size_t size() const { return raw.size(); }
};

/// floor((N - L) / H) + 1 frames; none when the clip is shorter than a frame.
FrameSet frame_signal(const AudioClip& clip, const FrameConfig& config = {});

std::vector<double> hamming(std::size_t n);

// ---------------------------------------------------------------------------
// Per-frame features

/// Normalized autocorrelation over the 50-500 Hz lag range with parabolic
/// peak refinement. Returns 0 for unvoiced frames.
double estimate_pitch(std::span<const double> frame, int sample_rate);

/// 20 log10(max(RMS, 1e-7)) in dBFS.
double intensity(std::span<const double> frame);

struct MfccConfig {
  std::size_t n_fft = 512;
  std::size_t n_mels = 26;
  std::size_t n_coeffs = kNumMfcc;
  double preemphasis = 0.97;
  double log_floor = 1e-10;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular mel filterbank, 0 Hz to Nyquist. Row m holds the weights of
/// filter m for FFT bins 0..n_fft/2.
std::vector<std::vector<double>> mel_filterbank(int sample_rate, std::size_t n_fft,
                                                std::size_t n_mels);

/// Pre-emphasis, magnitude spectrum, mel filterbank, log, orthonormal DCT-II.
/// `frame` is expected to be Hamming-windowed already.
std::vector<double> mfcc(std::span<const double> frame, int sample_rate,
                         const MfccConfig& config = {});

// ---------------------------------------------------------------------------
// Tracks

struct ProsodyFrame {
  double pitch = 0.0;      // Hz, 0 when unvoiced
  double intensity = 0.0;  // dBFS
  std::array<double, kNumMfcc> mfcc{};
};

struct NormalizationStats {
  FeatureVector mean{};
  FeatureVector stddev{};
};

struct ProsodyTrack {
  std::vector<ProsodyFrame> frames;
  double frame_hop = 0.010;  // seconds
  double frame_len = 0.025;  // seconds
  double duration = 0.0;     // seconds of source audio
  double speech_rate = 0.0;  // peaks per second
  /// Set once the track has been z-scored.
  std::optional<NormalizationStats> normalization_stats;
};

/// Frames the clip and computes pitch, intensity, MFCCs and speech rate.
ProsodyTrack extract(const AudioClip& clip, const FrameConfig& frames = {},
                     const MfccConfig& mfcc_config = {});

/// Peaks of the 5-frame moving average of the intensity contour that exceed
/// mean + 0.5 std of the smoothed contour, per second of audio.
double speech_rate(const ProsodyTrack& track);

/// Per-feature mean and sample standard deviation. Unvoiced frames do not
/// contribute to the pitch statistics; speech rate contributes once per track.
NormalizationStats compute_stats(std::span<const ProsodyTrack> tracks);

/// z-score every feature. Unvoiced pitch becomes kUnvoicedSentinel; a zero
/// standard deviation leaves the feature centred only.
ProsodyTrack normalize(const ProsodyTrack& track, const NormalizationStats& stats);

/// [pitch, intensity, rate, mfcc0..12] for one frame of `track`.
FeatureVector frame_vector(const ProsodyTrack& track, std::size_t i);

/// Mean over all frames (zeros when there are none), rate = track rate.
FeatureVector clip_mean(const ProsodyTrack& track);

/// Mean-pools the frames whose centres fall inside each [begin, end) span.
/// Spans with no frames get the clip-level mean.
std::vector<FeatureVector> align_to_tokens(const ProsodyTrack& track,
                                           std::span<const std::pair<double, double>> spans);

/// `count` equal spans covering [0, duration).
std::vector<std::pair<double, double>> uniform_spans(std::size_t count, double duration);

/// Debug dump: `frame,pitch_hz,intensity_db,mfcc0..mfcc12`.
void write_feature_csv(std::ostream& out, const ProsodyTrack& track);

}  // namespace psychstate::prosody
