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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ser/preprocess.hpp"
#include "test_util.hpp"

using namespace ser;
using testutil::code_of;

namespace {

AudioClip tone(double hz, double seconds, double amp = 1.0) {
  AudioClip c;
  const auto n = static_cast<std::size_t>(std::lround(seconds * 16000));
  for (std::size_t i = 0; i < n; ++i) {
    c.samples.push_back(amp * std::sin(2.0 * std::numbers::pi * hz * i / 16000.0));
  }
  return c;
}

AudioClip silence(double seconds) {
  return AudioClip{std::vector<double>(static_cast<std::size_t>(std::lround(seconds * 16000)), 0.0),
                   16000};
}

AudioClip concat(std::initializer_list<AudioClip> parts) {
  AudioClip out;
  for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  return out;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("pre-emphasis examples") {
  CHECK(pre_emphasis(AudioClip{{0, 0, 0}, 16000}).samples == std::vector<double>{0, 0, 0});
  const auto ones = pre_emphasis(AudioClip{{1, 1, 1}, 16000}).samples;
  CHECK(ones[0] == 1.0);
  CHECK(ones[1] == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(ones[2] == doctest::Approx(0.03).epsilon(1e-12));
  const auto ramp = pre_emphasis(AudioClip{{1, 0, -1}, 16000}, 0.5).samples;
  CHECK(ramp == std::vector<double>{1.0, -0.5, -1.0});
  CHECK(code_of([] { pre_emphasis(AudioClip{{}, 16000}); }) == ErrorCode::kEmptySignal);
}

TEST_CASE("pre-emphasis is linear") {
  Rng rng(2);
  const AudioClip x{oracle::random_vector(200, rng), 16000};
  AudioClip scaled = x;
  for (auto& s : scaled.samples) s *= -2.5;
  const auto a = pre_emphasis(x).samples;
  const auto b = pre_emphasis(scaled).samples;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(-2.5 * a[i]).epsilon(1e-12));
}

TEST_CASE("frame counts") {
  const auto one_second = frame_signal(silence(1.0));
  CHECK(one_second.n_frames() == 98);
  CHECK(one_second.frame_len_samples == 400);
  CHECK(one_second.hop_samples == 160);
  CHECK(frame_signal(silence(400.0 / 16000)).n_frames() == 1);
  CHECK(frame_count(16000, 400, 160) == 98);
  CHECK(frame_count(399, 400, 160) == 1);
}

TEST_CASE("short signals produce one zero-padded frame") {
  AudioClip c;
  for (int i = 0; i < 100; ++i) c.samples.push_back(0.01 * (i + 1));
  const auto f = frame_signal(c);
  REQUIRE(f.n_frames() == 1);
  REQUIRE(f.frames.cols() == 400);
  for (int i = 0; i < 100; ++i) CHECK(f.frames(0, i) == c.samples[i]);
  for (int i = 100; i < 400; ++i) CHECK(f.frames(0, i) == 0.0);
}

TEST_CASE("frame rows start at t*H and hops reconstruct the prefix") {
  Rng rng(7);
  const AudioClip c{oracle::random_vector(5000, rng), 16000};
  const auto f = frame_signal(c);
  std::vector<double> rebuilt;
  for (std::size_t t = 0; t < f.n_frames(); ++t) {
    for (std::size_t j = 0; j < f.frame_len_samples; ++j) CHECK(f.frames(t, j) == c.samples[t * 160 + j]);
    for (std::size_t j = 0; j < f.hop_samples; ++j) rebuilt.push_back(f.frames(t, j));
  }
  for (std::size_t i = 0; i < rebuilt.size(); ++i) CHECK(rebuilt[i] == c.samples[i]);
}

TEST_CASE("frame length outside 10..30 ms is rejected") {
  CHECK(code_of([] { frame_signal(silence(0.1), 5.0, 2.0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { frame_signal(silence(0.1), 40.0, 10.0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { frame_signal(silence(0.1), 20.0, 25.0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { frame_signal(AudioClip{{}, 16000}); }) == ErrorCode::kEmptySignal);
}

TEST_CASE("hamming window") {
  const auto w3 = hamming_window(3);
  CHECK(w3[0] == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(w3[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w3[2] == doctest::Approx(0.08).epsilon(1e-12));
  const auto w = hamming_window(400);
  const auto ref = oracle::hamming(400);
  CHECK(w.front() == doctest::Approx(0.08));
  CHECK(w.back() == doctest::Approx(0.08));
  for (std::size_t i = 0; i < 400; ++i) CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-14));

  FrameMatrix zero;
  zero.frames.resize(2, 400);
  zero.frame_len_samples = 400;
  zero.hop_samples = 160;
  const auto windowed = apply_window(zero);
  for (double v : windowed.frames.data()) CHECK(v == 0.0);
}

TEST_CASE("apply_window multiplies every row") {
  Rng rng(1);
  const AudioClip c{oracle::random_vector(1000, rng), 16000};
  const auto f = frame_signal(c);
  const auto w = apply_window(f);
  const auto ref = oracle::hamming(400);
  for (std::size_t t = 0; t < f.n_frames(); ++t) {
    for (std::size_t j = 0; j < 400; ++j) CHECK(w.frames(t, j) == doctest::Approx(f.frames(t, j) * ref[j]));
  }
}

TEST_CASE("digital silence has no speech") {
  const auto r = detect_endpoints(silence(0.5));
  CHECK(r.no_speech);
  CHECK(r.clip.samples == silence(0.5).samples);
}

TEST_CASE("tone between silences is trimmed to the tone") {
  const auto clip = concat({silence(0.3), tone(200, 0.5), silence(0.3)});
  const auto r = detect_endpoints(clip);
  REQUIRE_FALSE(r.no_speech);
  const double onset = 0.3 * 16000, offset = 0.8 * 16000;
  CHECK(std::abs(static_cast<double>(r.begin_sample) - onset) <= 2 * 160);
  CHECK(std::abs(static_cast<double>(r.end_sample) - offset) <= 2 * 160);
  CHECK(r.clip.size() == r.end_sample - r.begin_sample);
}

TEST_CASE("a clip active throughout comes back unchanged") {
  Rng rng(12);
  AudioClip noise{oracle::random_vector(8000, rng, -0.5, 0.5), 16000};
  const auto r = detect_endpoints(noise);
  CHECK_FALSE(r.no_speech);
  CHECK(r.begin_sample == 0);
  CHECK(r.clip.samples == noise.samples);
}

TEST_CASE("endpoint output is a contiguous sub-clip, independent of level") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const double lead = rng.uniform(0.05, 0.4), len = rng.uniform(0.1, 0.6), amp = rng.uniform(0.01, 1.0);
    const auto clip = concat({silence(lead), tone(rng.uniform(100, 400), len, amp), silence(0.2)});
    const auto r = detect_endpoints(clip);
    REQUIRE(r.end_sample <= clip.size());
    REQUIRE(r.begin_sample < r.end_sample);
    for (std::size_t i = 0; i < r.clip.size(); ++i) CHECK(r.clip.samples[i] == clip.samples[r.begin_sample + i]);
  }
}

}  // TEST_SUITE
