// Copyright 2026 The SER Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ser {

inline constexpr int kCanonicalRateHz = 16000;

// Mono signal with amplitude in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalRateHz;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Decodes a RIFF/WAVE buffer holding 16-bit integer PCM. Multi-channel data
// is averaged down to mono; the native sample rate is kept.
// Throws kMalformedHeader or kUnsupportedFormat.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);
AudioClip load_wav(const std::filesystem::path& path);

// Canonical 16-bit mono PCM encoding. Samples are clamped to [-1, 1] and
// rounded to the nearest step of 1/32768.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void save_wav(const AudioClip& clip, const std::filesystem::path& path);

// Linear-interpolation resampling. Output sample i sits at source position
// i * src_rate / target_hz; positions past the last sample clamp to it.
AudioClip resample(const AudioClip& clip, int target_hz);

}  // namespace ser
