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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ser/audio_io.hpp"
#include "ser/matrix.hpp"

namespace ser {

inline constexpr std::size_t kFftSize = 512;
inline constexpr std::size_t kLldMels = 26;
inline constexpr std::size_t kNumCepstra = 13;

// Column layout of one LLD row.
namespace lld {
inline constexpr std::size_t kZcr = 0;
inline constexpr std::size_t kLogEnergy = 1;
inline constexpr std::size_t kF0 = 2;
inline constexpr std::size_t kVoiced = 3;
inline constexpr std::size_t kMfcc0 = 4;
inline constexpr std::size_t kDim = kMfcc0 + kNumCepstra;  // 17
}  // namespace lld

inline constexpr double kLogFloor = 1e-10;
inline constexpr double kPitchMinHz = 50.0;
inline constexpr double kPitchMaxHz = 500.0;
inline constexpr double kVoicingThreshold = 0.3;

// Fraction of adjacent sample pairs whose signs differ; zero counts as
// positive. Frames shorter than two samples yield 0.
double zero_crossing_rate(std::span<const double> frame);

// ln(max(sum of squares, 1e-10)).
double short_time_log_energy(std::span<const double> frame);

struct PitchEstimate {
  double f0_hz = 0.0;
  bool voiced = false;
  double peak_correlation = 0.0;
};

// Normalized-autocorrelation pitch over lags rate/500 .. rate/50.
PitchEstimate estimate_f0(std::span<const double> frame, int rate_hz);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// |X_k| for k = 0..n_fft/2 of the zero-padded frame. n_fft is a power of two.
std::vector<double> magnitude_spectrum(std::span<const double> frame,
                                       std::size_t n_fft = kFftSize);

// Triangular filters equally spaced on the mel axis from 0 Hz to Nyquist,
// applied to a magnitude spectrum of n_fft/2 + 1 bins.
class MelFilterbank {
 public:
  MelFilterbank(int rate_hz, std::size_t n_mels, std::size_t n_fft = kFftSize);

  std::size_t n_mels() const noexcept { return n_mels_; }
  std::size_t n_bins() const noexcept { return n_bins_; }

  // Linear filter outputs.
  std::vector<double> apply(std::span<const double> magnitude) const;
  // ln(max(output, 1e-10)) per filter, computed from a windowed frame.
  std::vector<double> log_energies(std::span<const double> frame) const;

  std::span<const double> filter(std::size_t m) const {
    return {weights_.data() + m * n_bins_, n_bins_};
  }

 private:
  std::size_t n_mels_;
  std::size_t n_fft_;
  std::size_t n_bins_;
  std::vector<double> weights_;  // n_mels x n_bins
};

std::vector<double> mel_filterbank_energies(std::span<const double> frame,
                                            int rate_hz, std::size_t n_mels);

// Orthonormal DCT-II of the whole input.
std::vector<double> dct_ii(std::span<const double> input);

// First 13 orthonormal DCT-II coefficients of log mel energies.
// Throws kDimensionTooSmall when fewer than 13 energies are given.
std::array<double, kNumCepstra> mfcc(std::span<const double> mel_log_energies);

// T x 17 rows aligned with the 25 ms / 10 ms frames of the clip.
struct LldSequence {
  Matrix values;

  std::size_t n_frames() const noexcept { return values.rows(); }
};

// Pre-emphasis, framing, then per frame: zcr, log energy and pitch on the
// raw frame; 13 MFCCs from 26 mel filters on the Hamming-windowed frame.
LldSequence extract_lld_sequence(const AudioClip& clip);

struct ChannelStats {
  double mean = 0.0;
  double variance = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::array<double, 3> central_moments{};  // orders 2, 3, 4
  std::array<double, 4> origin_moments{};   // orders 1, 2, 3, 4
};

// Population statistics over all frames for the prosodic channels.
struct UtteranceStats {
  ChannelStats log_energy;
  ChannelStats f0;
  ChannelStats zcr;
};

ChannelStats channel_statistics(std::span<const double> values);
UtteranceStats utterance_statistics(const LldSequence& seq);

}  // namespace ser
