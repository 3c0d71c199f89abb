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

#include "ser/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ser/error.hpp"
#include "ser/features_lld.hpp"
#include "ser/simd.hpp"

namespace ser {

AudioClip pre_emphasis(const AudioClip& clip, double alpha) {
  if (clip.empty()) throw Error(ErrorCode::kEmptySignal, "pre-emphasis of empty clip");
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pre-emphasis alpha must be in [0, 1)");
  }
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.samples.resize(clip.samples.size());
  out.samples[0] = clip.samples[0];
  for (std::size_t n = 1; n < clip.samples.size(); ++n) {
    out.samples[n] = clip.samples[n] - alpha * clip.samples[n - 1];
  }
  return out;
}

std::size_t frame_count(std::size_t n_samples, std::size_t frame_len,
                        std::size_t hop) {
  if (n_samples == 0) return 0;
  if (n_samples < frame_len) return 1;
  return (n_samples - frame_len) / hop + 1;
}

FrameMatrix frame_signal(const AudioClip& clip, double frame_ms, double hop_ms) {
  if (clip.empty()) throw Error(ErrorCode::kEmptySignal, "cannot frame an empty clip");
  if (frame_ms < 10.0 || frame_ms > 30.0 || hop_ms <= 0.0 || hop_ms > frame_ms) {
    throw Error(ErrorCode::kInvalidArgument,
                "frame must be 10-30 ms with 0 < hop <= frame");
  }
  const auto rate = static_cast<double>(clip.sample_rate_hz);
  const auto width = static_cast<std::size_t>(std::lround(frame_ms * rate / 1000.0));
  const auto hop = static_cast<std::size_t>(std::lround(hop_ms * rate / 1000.0));
  if (width == 0 || hop == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample rate too low for framing");
  }

  const std::size_t n = clip.samples.size();
  const std::size_t count = frame_count(n, width, hop);
  FrameMatrix out;
  out.frame_len_samples = width;
  out.hop_samples = hop;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.frames.resize(count, width);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t start = t * hop;
    const std::size_t len = std::min(width, n - start);
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), len,
                out.frames.row(t).begin());
  }
  return out;
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  }
  return w;
}

FrameMatrix apply_window(const FrameMatrix& frames) {
  if (frames.n_frames() == 0) {
    throw Error(ErrorCode::kEmptySignal, "no frames to window");
  }
  const auto window = hamming_window(frames.frames.cols());
  FrameMatrix out = frames;
  for (std::size_t t = 0; t < out.n_frames(); ++t) {
    simd::mul(frames.frames.row(t), window, out.frames.row(t));
  }
  return out;
}

EndpointResult detect_endpoints(const AudioClip& clip, const EndpointConfig& config) {
  EndpointResult result;
  result.clip = clip;
  result.end_sample = clip.size();
  if (clip.empty()) {
    result.no_speech = true;
    return result;
  }

  const FrameMatrix framed = frame_signal(clip, kFrameMs, kHopMs);
  const std::size_t count = framed.n_frames();
  std::vector<double> energy(count);
  for (std::size_t t = 0; t < count; ++t) {
    energy[t] = simd::sum_squares(framed.frames.row(t));
  }

  const std::size_t lead = std::min(config.noise_frames, count);
  double noise_floor = 0.0;
  for (std::size_t t = 0; t < lead; ++t) noise_floor += energy[t];
  noise_floor /= static_cast<double>(lead);
  const double energy_threshold =
      std::max(noise_floor * config.noise_floor_factor,
               config.min_energy_per_sample * static_cast<double>(framed.frame_len_samples));

  auto active = [&](std::size_t t) {
    return energy[t] > energy_threshold ||
           zero_crossing_rate(framed.frames.row(t)) > config.zcr_threshold;
  };

  std::size_t first = count;
  for (std::size_t t = 0; t < count; ++t) {
    if (active(t)) {
      first = t;
      break;
    }
  }
  if (first == count) {
    result.no_speech = true;
    return result;
  }
  std::size_t last = first;
  for (std::size_t t = count; t-- > first;) {
    if (active(t)) {
      last = t;
      break;
    }
  }

  const std::size_t begin = first * framed.hop_samples;
  // The final frame also owns the partial tail that framing dropped.
  const std::size_t end =
      last + 1 == count ? clip.size()
                        : std::min(clip.size(), last * framed.hop_samples + framed.frame_len_samples);
  result.begin_sample = begin;
  result.end_sample = end;
  result.clip.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                             clip.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return result;
}

}  // namespace ser
