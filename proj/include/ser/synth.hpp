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
#include <string>
#include <vector>

#include "ser/audio_io.hpp"
#include "ser/corpus.hpp"
#include "ser/random.hpp"

namespace ser {

// Parametric speech-like corpora. Each class has its own pitch contour and
// energy envelope; a "language" rescales pitch and changes the harmonic
// rolloff (timbre) and the raw label spellings.
struct SynthLanguage {
  std::string name = "en";
  double pitch_scale = 1.0;
  double timbre_tilt = 0.6;  // amplitude ratio between consecutive harmonics
  // Raw label written to the manifest for angry, happy, sad, neutral.
  std::vector<std::string> labels = {"angry", "happy", "sad", "neutral"};
};

struct SynthCorpusSpec {
  std::string corpus = "synth";
  SynthLanguage language;
  std::size_t n_train = 200;  // utterances per split, spread evenly over classes
  std::size_t n_dev = 0;
  std::size_t n_test = 80;
  double duration_s = 1.0;
  double lead_silence_s = 0.1;
  double noise_level = 0.02;  // white-noise rms relative to full scale
  double jitter = 0.08;       // relative spread of per-utterance pitch and energy
  std::uint64_t seed = 1;
};

inline constexpr std::size_t kSynthClasses = 4;

// One utterance of class 0..3 at 16 kHz.
AudioClip synth_utterance(std::size_t class_index, const SynthCorpusSpec& spec, Rng& rng);

struct SynthUtterance {
  UtteranceRecord record;
  AudioClip clip;
};

// Deterministic in spec.seed. Records have empty audio paths.
std::vector<SynthUtterance> synth_corpus(const SynthCorpusSpec& spec);

// Writes <dir>/<id>.wav and <dir>/manifest.jsonl with paths relative to dir.
std::vector<UtteranceRecord> write_synth_corpus(const SynthCorpusSpec& spec,
                                                const std::filesystem::path& dir);

}  // namespace ser
