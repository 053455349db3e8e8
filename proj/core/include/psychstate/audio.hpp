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

#include <filesystem>
#include <vector>

namespace psychstate {

/// Mono audio, samples in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  friend bool operator==(const AudioClip&, const AudioClip&) = default;
};

/// Throws DimensionError if sample_rate <= 0 or any sample is non-finite.
void validate(const AudioClip& clip);

/// Quantizes to the 16-bit PCM grid (k / 32768, clamped). Clips that went
/// through this survive a WAV round trip bit-exactly.
void quantize_pcm16(AudioClip& clip);

/// RIFF PCM 16-bit mono 16 kHz. Anything else is rejected with FormatError.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace psychstate
