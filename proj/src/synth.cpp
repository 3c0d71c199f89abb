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

#include "ser/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ser/error.hpp"

namespace ser {
namespace {

struct Prototype {
  double f0_start;
  double f0_end;
  double energy;
  double tremolo_hz;
  double tremolo_depth;
  double decay;  // envelope exp(-decay * t / duration)
};

// angry, happy, sad, neutral
constexpr Prototype kPrototypes[kSynthClasses] = {
    {220.0, 250.0, 0.80, 8.0, 0.30, 0.0},
    {240.0, 320.0, 0.50, 4.0, 0.10, 0.0},
    {140.0, 110.0, 0.15, 0.0, 0.00, 2.0},
    {170.0, 170.0, 0.35, 0.0, 0.00, 0.0},
};

constexpr double kMaxHarmonicHz = 7000.0;
constexpr double kRampSeconds = 0.02;

double jittered(double value, double jitter, Rng& rng) {
  return value * std::clamp(1.0 + jitter * rng.normal(), 0.5, 1.5);
}

}  // namespace

AudioClip synth_utterance(std::size_t class_index, const SynthCorpusSpec& spec, Rng& rng) {
  if (class_index >= kSynthClasses) {
    throw Error(ErrorCode::kClassOutOfRange, "synthetic class " + std::to_string(class_index));
  }
  if (spec.duration_s <= 0.0) throw Error(ErrorCode::kInvalidArgument, "duration must be positive");
  const Prototype& p = kPrototypes[class_index];
  const double rate = kCanonicalRateHz;
  const auto n_speech = static_cast<std::size_t>(std::lround(spec.duration_s * rate));
  const auto n_lead = static_cast<std::size_t>(std::lround(spec.lead_silence_s * rate));
  const double pitch = spec.language.pitch_scale;
  const double f0_start = jittered(p.f0_start * pitch, spec.jitter, rng);
  const double f0_end = jittered(p.f0_end * pitch, spec.jitter, rng);
  const double energy = jittered(p.energy, spec.jitter, rng);
  const double tremolo_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  std::vector<double> harmonic_amp;
  for (double a = 1.0, k = 1; k * std::max(f0_start, f0_end) < kMaxHarmonicHz; ++k) {
    harmonic_amp.push_back(a);
    a *= spec.language.timbre_tilt;
  }
  double amp_sum = 0.0;
  for (double a : harmonic_amp) amp_sum += a;

  AudioClip clip;
  clip.sample_rate_hz = kCanonicalRateHz;
  clip.samples.assign(n_speech + 2 * n_lead, 0.0);
  double phase = 0.0;
  const double ramp = kRampSeconds * rate;
  for (std::size_t i = 0; i < n_speech; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double frac = static_cast<double>(i) / static_cast<double>(n_speech);
    const double f0 = f0_start + (f0_end - f0_start) * frac;
    phase += 2.0 * std::numbers::pi * f0 / rate;
    double env = energy * std::exp(-p.decay * frac);
    if (p.tremolo_hz > 0.0) {
      env *= 1.0 - p.tremolo_depth +
             p.tremolo_depth * std::sin(2.0 * std::numbers::pi * p.tremolo_hz * t + tremolo_phase);
    }
    const double edge = std::min(static_cast<double>(i), static_cast<double>(n_speech - 1 - i));
    if (edge < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * edge / ramp);
    double s = 0.0;
    for (std::size_t k = 0; k < harmonic_amp.size(); ++k) {
      s += harmonic_amp[k] * std::sin(static_cast<double>(k + 1) * phase);
    }
    clip.samples[n_lead + i] = env * s / amp_sum;
  }
  for (auto& s : clip.samples) {
    s = std::clamp(s + spec.noise_level * rng.normal(), -1.0, 1.0);
  }
  return clip;
}

std::vector<SynthUtterance> synth_corpus(const SynthCorpusSpec& spec) {
  if (spec.language.labels.size() != kSynthClasses) {
    throw Error(ErrorCode::kInvalidArgument, "a synthetic language needs four labels");
  }
  Rng rng(spec.seed);
  std::vector<SynthUtterance> out;
  const std::pair<Split, std::size_t> splits[] = {
      {Split::kTrain, spec.n_train}, {Split::kDev, spec.n_dev}, {Split::kTest, spec.n_test}};
  for (const auto& [split, count] : splits) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t cls = i % kSynthClasses;
      char id[96];
      std::snprintf(id, sizeof id, "%s_%s_%04zu", spec.corpus.c_str(),
                    std::string(split_name(split)).c_str(), i);
      SynthUtterance u;
      u.record = {id, "", spec.corpus, spec.language.name, spec.language.labels[cls], split};
      u.clip = synth_utterance(cls, spec, rng);
      out.push_back(std::move(u));
    }
  }
  return out;
}

std::vector<UtteranceRecord> write_synth_corpus(const SynthCorpusSpec& spec,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<UtteranceRecord> records;
  for (auto& u : synth_corpus(spec)) {
    u.record.audio_path = u.record.id + ".wav";
    save_wav(u.clip, dir / u.record.audio_path);
    records.push_back(std::move(u.record));
  }
  write_manifest(records, dir / "manifest.jsonl");
  return records;
}

}  // namespace ser
