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
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ser/corpus.hpp"
#include "ser/error.hpp"
#include "ser/eval.hpp"
#include "ser/model.hpp"
#include "ser/pipeline.hpp"
#include "ser/training.hpp"

namespace ser {

// INI-style run description:
//
//   [data]        corpora, train_corpora, eval_corpora (comma lists)
//   [corpus.X]    manifest
//   [labels]      classes
//   [aliases]     raw = class | DROP      (shared)
//   [aliases.X]   raw = class | DROP      (corpus X only)
//   [features]    mode, embedder_weights, trim_silence
//   [model]       fc_dims, lstm_hidden, lstm_layers, attn_window
//   [train]       learning_rate, batch_size, max_epochs, clip_norm, standardize
//   [run]         seed, out_dir, workers
//
// Relative paths resolve against the config file's directory.
struct RunConfig {
  std::vector<std::string> corpora;
  std::vector<std::string> train_corpora;
  std::vector<std::string> eval_corpora;
  std::map<std::string, std::filesystem::path> manifests;
  LabelMap labels = LabelMap::default_four_class();
  PipelineOptions features;
  std::optional<std::filesystem::path> embedder_weights;
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path out_dir = "out";
  std::size_t workers = 1;

  std::filesystem::path feature_dir() const;
  std::filesystem::path cache_path(const std::string& corpus, Split split) const;
  std::filesystem::path checkpoint_path() const { return out_dir / "model.ntsr"; }
};

// Throws kParseError for malformed files and kInvalidArgument for bad values.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir,
                           std::string_view origin = "config");
RunConfig load_run_config(const std::filesystem::path& path);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

int exit_code_for(const Error& error);

struct ExtractSummary {
  std::size_t written = 0;
  std::size_t failed = 0;
  std::size_t dropped = 0;
};

// Feature caches for every configured corpus and split. Per-utterance
// failures are reported to `log` and counted; the remaining utterances are
// still cached.
ExtractSummary cmd_extract(const RunConfig& config, std::ostream& log);

// Trains on the train split of train_corpora (dev split for model
// selection) and writes the checkpoint and train_log.jsonl.
TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& checkpoint,
                      std::ostream& log);

// Evaluates each checkpoint on the test split of eval_corpora. Writes
// eval_report.{json,txt} for the first checkpoint and comparison.txt with
// one row per checkpoint.
std::vector<EvalReport> cmd_eval(const RunConfig& config,
                                 const std::vector<std::filesystem::path>& checkpoints,
                                 std::ostream& log);

struct Prediction {
  std::string label;
  std::vector<std::pair<std::string, double>> probabilities;
};

Prediction cmd_predict(const RunConfig& config, const std::filesystem::path& checkpoint,
                       const std::filesystem::path& wav);

struct SynthOptions {
  std::filesystem::path out_dir = "synth";
  std::uint64_t seed = 1;
  std::size_t n_train_large = 200;
  std::size_t n_train_small = 80;
  std::size_t n_dev = 40;
  std::size_t n_test = 80;
  bool write_embedder = true;
  bool full_embedder = false;
};

// Two synthetic corpora in different "languages", a compact random embedder
// and a run.ini wiring them together.
void cmd_synth(const SynthOptions& options, std::ostream& log);

}  // namespace ser
