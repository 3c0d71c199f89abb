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
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ser/corpus.hpp"
#include "ser/fusion.hpp"
#include "ser/model.hpp"

namespace ser {

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  std::uint64_t seed = 1;
  bool standardize = true;

  // Throws kInvalidArgument.
  void validate() const;
};

struct OptimizerState {
  ParamStore m;
  ParamStore v;
  std::uint64_t step = 0;

  static OptimizerState zeros_like(const ParamStore& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }
};

// Zero-pads every sequence to the longest one in the batch.
// Throws kEmptyBatch, kDimensionMismatch.
Batch pad_batch(std::span<const FusedSequence> utterances);
Batch pad_batch(std::span<const Matrix* const> sequences);

struct LossResult {
  double loss = 0.0;
  Matrix grad_logits;  // (softmax - onehot) / B
};

// Mean cross-entropy via a max-shifted log-sum-exp. Throws kTargetOutOfRange.
LossResult cross_entropy(const Matrix& logits, std::span<const std::size_t> targets);

double global_norm(const ParamStore& grads);
// Scales every tensor by clip_norm / norm when the global norm exceeds it.
// Returns the norm before clipping.
double clip_global_norm(ParamStore& grads, double clip_norm);

// Bias-corrected Adam update. Throws kShapeMismatch.
void adam_step(ParamStore& params, const ParamStore& grads, OptimizerState& state,
               const TrainConfig& config);

// Per-feature z-score statistics; features with zero spread keep scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer identity(std::size_t dim);
  static Standardizer fit(std::span<const Matrix* const> sequences);
  void apply(Matrix& frames) const;
  void invert(Matrix& frames) const;
  bool empty() const noexcept { return mean.empty(); }
};

// A labeled utterance ready for the model.
struct TrainingExample {
  std::string id;
  std::string corpus;
  std::string language;
  std::size_t label = 0;
  Matrix frames;
};

std::vector<TrainingExample> examples_from_cache(std::span<const FeatureCacheEntry> entries);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_wa = 0.0;
  double dev_ua = 0.0;
  double seconds = 0.0;
};

// One JSON object per line: {epoch, train_loss, dev_wa, dev_ua, seconds}.
// Timing is omitted when include_timing is false so runs can be compared
// byte for byte.
void write_train_log(std::span<const EpochLog> log, std::ostream& out, bool include_timing = true);

struct TrainedModel {
  ModelConfig config;
  ParamStore params;
  Standardizer standardizer;
  std::vector<std::string> class_names;
};

struct TrainResult {
  TrainedModel best;  // by dev UA; the final epoch when there is no dev set
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

// Seeded per-epoch shuffle, batching, padding, forward, loss, backward,
// clipping and Adam. Dev WA/UA after every epoch. Throws kEmptyBatch for an
// empty training set.
TrainResult train(std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> dev_set, const ModelConfig& model_config,
                  const TrainConfig& train_config, std::span<const std::string> class_names,
                  std::ostream* progress = nullptr);

// Logits for examples, standardized as the model was trained, in batches.
Matrix predict_logits(const TrainedModel& model, std::span<const TrainingExample> examples,
                      std::size_t batch_size = 32);

// Checkpoint container: model tensors, "norm.mean"/"norm.scale", and the class
// names as a "classes" tensor of UTF-8 bytes separated by '\n'.
NamedTensorStore checkpoint_store(const TrainedModel& model);
TrainedModel model_from_checkpoint(const NamedTensorStore& store);
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ser
