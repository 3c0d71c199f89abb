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

#include <cstddef>

#include "ser/audio_io.hpp"
#include "ser/matrix.hpp"

namespace ser {

inline constexpr double kDefaultPreEmphasis = 0.97;
inline constexpr double kFrameMs = 25.0;
inline constexpr double kHopMs = 10.0;

// Overlapping analysis frames. Row t starts at sample t * hop_samples.
struct FrameMatrix {
  Matrix frames;
  std::size_t frame_len_samples = 0;
  std::size_t hop_samples = 0;
  int sample_rate_hz = kCanonicalRateHz;

  std::size_t n_frames() const noexcept { return frames.rows(); }
};

// y[0] = x[0], y[n] = x[n] - alpha * x[n-1].
AudioClip pre_emphasis(const AudioClip& clip, double alpha = kDefaultPreEmphasis);

// Frames of frame_ms advanced by hop_ms. When the signal is shorter than one
// frame, a single zero-padded frame is produced; otherwise the trailing
// partial frame is dropped. Throws kEmptySignal.
FrameMatrix frame_signal(const AudioClip& clip, double frame_ms = kFrameMs,
                         double hop_ms = kHopMs);

// Number of frames frame_signal yields for n samples.
std::size_t frame_count(std::size_t n_samples, std::size_t frame_len,
                        std::size_t hop);

// Symmetric Hamming taper of the given length.
std::vector<double> hamming_window(std::size_t length);

FrameMatrix apply_window(const FrameMatrix& frames);

struct EndpointConfig {
  double noise_floor_factor = 4.0;
  double min_energy_per_sample = 1e-4;
  double zcr_threshold = 0.25;
  std::size_t noise_frames = 5;
};

struct EndpointResult {
  AudioClip clip;
  std::size_t begin_sample = 0;  // within the input
  std::size_t end_sample = 0;    // exclusive
  bool no_speech = false;
};

// Double-threshold (energy or zero-crossing rate) endpoint detector on
// 25 ms / 10 ms frames. The energy threshold is relative to the mean energy
// of the leading frames. When no frame qualifies the input is returned as is
// with no_speech set.
EndpointResult detect_endpoints(const AudioClip& clip,
                                const EndpointConfig& config = {});

}  // namespace ser
