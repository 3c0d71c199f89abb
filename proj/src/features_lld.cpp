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

#include "ser/features_lld.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "ser/error.hpp"
#include "ser/preprocess.hpp"
#include "ser/simd.hpp"

namespace ser {
namespace {

bool IsPowerOfTwo(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT.
void Fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      const std::complex<double> w(std::cos(angle * static_cast<double>(k)),
                                   std::sin(angle * static_cast<double>(k)));
      for (std::size_t i = k; i < n; i += len) {
        const std::complex<double> u = a[i];
        const std::complex<double> v = a[i + half] * w;
        a[i] = u + v;
        a[i + half] = u - v;
      }
    }
  }
}

}  // namespace

double zero_crossing_rate(std::span<const double> frame) {
  if (frame.size() < 2) return 0.0;
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    crossings += (frame[i - 1] >= 0.0) != (frame[i] >= 0.0);
  }
  return static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);
}

double short_time_log_energy(std::span<const double> frame) {
  return std::log(std::max(simd::sum_squares(frame), kLogFloor));
}

PitchEstimate estimate_f0(std::span<const double> frame, int rate_hz) {
  PitchEstimate est;
  const std::size_t w = frame.size();
  if (w < 2 || rate_hz <= 0) return est;
  const double energy = simd::sum_squares(frame);
  if (energy <= 0.0) return est;

  const auto rate = static_cast<double>(rate_hz);
  auto min_lag = static_cast<std::size_t>(rate / kPitchMaxHz);
  auto max_lag = static_cast<std::size_t>(rate / kPitchMinHz);
  min_lag = std::clamp<std::size_t>(min_lag, 1, w - 1);
  max_lag = std::clamp<std::size_t>(max_lag, 1, w - 1);

  double best = -2.0;
  std::size_t best_lag = min_lag;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    const double r = simd::dot(frame.first(w - lag), frame.subspan(lag)) / energy;
    if (r > best) {
      best = r;
      best_lag = lag;
    }
  }
  est.peak_correlation = best;
  if (best >= kVoicingThreshold) {
    est.voiced = true;
    est.f0_hz = rate / static_cast<double>(best_lag);
  }
  return est;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> magnitude_spectrum(std::span<const double> frame, std::size_t n_fft) {
  if (!IsPowerOfTwo(n_fft) || frame.size() > n_fft) {
    throw Error(ErrorCode::kInvalidArgument,
                "FFT size must be a power of two no smaller than the frame");
  }
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  Fft(buf);
  std::vector<double> mag(n_fft / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

MelFilterbank::MelFilterbank(int rate_hz, std::size_t n_mels, std::size_t n_fft)
    : n_mels_(n_mels), n_fft_(n_fft), n_bins_(n_fft / 2 + 1) {
  if (n_mels == 0 || rate_hz <= 0 || !IsPowerOfTwo(n_fft)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid mel filterbank geometry");
  }
  const double nyquist = rate_hz / 2.0;
  const double mel_top = hz_to_mel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_top * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  weights_.assign(n_mels * n_bins_, 0.0);
  const double bin_hz = static_cast<double>(rate_hz) / static_cast<double>(n_fft);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    for (std::size_t k = 0; k < n_bins_; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      weights_[m * n_bins_ + k] = w;
    }
  }
}

std::vector<double> MelFilterbank::apply(std::span<const double> magnitude) const {
  if (magnitude.size() != n_bins_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "spectrum has " + std::to_string(magnitude.size()) + " bins, expected " +
                    std::to_string(n_bins_));
  }
  std::vector<double> out(n_mels_);
  for (std::size_t m = 0; m < n_mels_; ++m) out[m] = simd::dot(filter(m), magnitude);
  return out;
}

std::vector<double> MelFilterbank::log_energies(std::span<const double> frame) const {
  auto out = apply(magnitude_spectrum(frame, n_fft_));
  for (double& v : out) v = std::log(std::max(v, kLogFloor));
  return out;
}

std::vector<double> mel_filterbank_energies(std::span<const double> frame, int rate_hz,
                                            std::size_t n_mels) {
  return MelFilterbank(rate_hz, n_mels).log_energies(frame);
}

namespace {

// Row k holds s_k * cos(pi k (j + 0.5) / m).
std::vector<double> DctBasis(std::size_t m, std::size_t rows) {
  std::vector<double> basis(rows * m);
  const double md = static_cast<double>(m);
  for (std::size_t k = 0; k < rows; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / md) : std::sqrt(2.0 / md);
    for (std::size_t j = 0; j < m; ++j) {
      basis[k * m + j] =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                           (static_cast<double>(j) + 0.5) / md);
    }
  }
  return basis;
}

}  // namespace

std::vector<double> dct_ii(std::span<const double> input) {
  const std::size_t m = input.size();
  const auto basis = DctBasis(m, m);
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    out[k] = simd::dot(std::span<const double>(basis).subspan(k * m, m), input);
  }
  return out;
}

std::array<double, kNumCepstra> mfcc(std::span<const double> mel_log_energies) {
  const std::size_t m = mel_log_energies.size();
  if (m < kNumCepstra) {
    throw Error(ErrorCode::kDimensionTooSmall,
                "MFCC needs at least 13 mel energies, got " + std::to_string(m));
  }
  thread_local std::size_t cached_m = 0;
  thread_local std::vector<double> basis;
  if (cached_m != m) {
    basis = DctBasis(m, kNumCepstra);
    cached_m = m;
  }
  std::array<double, kNumCepstra> out{};
  for (std::size_t k = 0; k < kNumCepstra; ++k) {
    out[k] = simd::dot(std::span<const double>(basis).subspan(k * m, m), mel_log_energies);
  }
  return out;
}

LldSequence extract_lld_sequence(const AudioClip& clip) {
  const FrameMatrix raw = frame_signal(pre_emphasis(clip), kFrameMs, kHopMs);
  const FrameMatrix windowed = apply_window(raw);
  const MelFilterbank bank(clip.sample_rate_hz, kLldMels);

  LldSequence seq;
  seq.values.resize(raw.n_frames(), lld::kDim);
  for (std::size_t t = 0; t < raw.n_frames(); ++t) {
    const auto frame = raw.frames.row(t);
    auto row = seq.values.row(t);
    row[lld::kZcr] = zero_crossing_rate(frame);
    row[lld::kLogEnergy] = short_time_log_energy(frame);
    const PitchEstimate pitch = estimate_f0(frame, clip.sample_rate_hz);
    row[lld::kF0] = pitch.f0_hz;
    row[lld::kVoiced] = pitch.voiced ? 1.0 : 0.0;
    const auto cepstra = mfcc(bank.log_energies(windowed.frames.row(t)));
    std::copy(cepstra.begin(), cepstra.end(), row.begin() + lld::kMfcc0);
  }
  return seq;
}

ChannelStats channel_statistics(std::span<const double> values) {
  ChannelStats s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  for (double v : values) {
    double p = 1.0;
    for (double& m : s.origin_moments) {
      p *= v;
      m += p;
    }
  }
  for (double& m : s.origin_moments) m /= n;
  s.mean = s.origin_moments[0];
  for (double v : values) {
    const double d = v - s.mean;
    s.central_moments[0] += d * d;
    s.central_moments[1] += d * d * d;
    s.central_moments[2] += d * d * d * d;
  }
  for (double& m : s.central_moments) m /= n;
  s.variance = s.central_moments[0];
  return s;
}

UtteranceStats utterance_statistics(const LldSequence& seq) {
  if (seq.n_frames() == 0) {
    throw Error(ErrorCode::kEmptySignal, "statistics of an empty sequence");
  }
  auto column = [&](std::size_t c) {
    std::vector<double> v(seq.n_frames());
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = seq.values(t, c);
    return v;
  };
  UtteranceStats stats;
  stats.log_energy = channel_statistics(column(lld::kLogEnergy));
  stats.f0 = channel_statistics(column(lld::kF0));
  stats.zcr = channel_statistics(column(lld::kZcr));
  return stats;
}

}  // namespace ser
