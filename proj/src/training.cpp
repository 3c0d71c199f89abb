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

#include "ser/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ser/error.hpp"
#include "ser/eval.hpp"
#include "ser/random.hpp"
#include "ser/simd.hpp"

namespace ser {

void TrainConfig::validate() const {
  if (!(clip_norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "clip_norm must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Adam betas must lie in (0, 1)");
  }
  if (!(learning_rate > 0.0) || !(adam_eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate and epsilon must be positive");
  }
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be positive");
}

Batch pad_batch(std::span<const Matrix* const> sequences) {
  if (sequences.empty()) throw Error(ErrorCode::kEmptyBatch, "no sequences to batch");
  Batch batch;
  batch.batch_size = sequences.size();
  batch.dim = sequences.front()->cols();
  for (const Matrix* s : sequences) {
    if (s->cols() != batch.dim) {
      throw Error(ErrorCode::kDimensionMismatch, "sequence width " + std::to_string(s->cols()) +
                                                     " differs from " + std::to_string(batch.dim));
    }
    batch.max_len = std::max(batch.max_len, s->rows());
    batch.lengths.push_back(s->rows());
  }
  batch.data.assign(batch.batch_size * batch.max_len * batch.dim, 0.0);
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    const auto& src = sequences[b]->data();
    std::copy(src.begin(), src.end(),
              batch.data.begin() + static_cast<std::ptrdiff_t>(b * batch.max_len * batch.dim));
  }
  return batch;
}

Batch pad_batch(std::span<const FusedSequence> utterances) {
  std::vector<const Matrix*> ptrs;
  ptrs.reserve(utterances.size());
  for (const auto& u : utterances) ptrs.push_back(&u.frames);
  return pad_batch(ptrs);
}

LossResult cross_entropy(const Matrix& logits, std::span<const std::size_t> targets) {
  const std::size_t b = logits.rows();
  const std::size_t c = logits.cols();
  if (targets.size() != b) {
    throw Error(ErrorCode::kLengthMismatch, "one target per logits row required");
  }
  if (b == 0) throw Error(ErrorCode::kEmptyBatch, "cross entropy of an empty batch");
  LossResult r;
  r.grad_logits.resize(b, c);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    if (targets[i] >= c) {
      throw Error(ErrorCode::kTargetOutOfRange, "target " + std::to_string(targets[i]) +
                                                    " with " + std::to_string(c) + " classes");
    }
    const auto row = logits.row(i);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - peak);
    const double log_z = peak + std::log(total);
    r.loss += (log_z - row[targets[i]]) * inv_b;
    auto g = r.grad_logits.row(i);
    for (std::size_t k = 0; k < c; ++k) {
      g[k] = (std::exp(row[k] - log_z) - (k == targets[i] ? 1.0 : 0.0)) * inv_b;
    }
  }
  return r;
}

double global_norm(const ParamStore& grads) {
  double sq = 0.0;
  for (const auto& [_, t] : grads) sq += simd::sum_squares(t.data);
  return std::sqrt(sq);
}

double clip_global_norm(ParamStore& grads, double clip_norm) {
  if (!(clip_norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "clip_norm must be > 0");
  const double norm = global_norm(grads);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (auto& [_, t] : grads) {
      for (double& v : t.data) v *= scale;
    }
  }
  return norm;
}

void adam_step(ParamStore& params, const ParamStore& grads, OptimizerState& state,
               const TrainConfig& config) {
  if (!params.same_layout(grads) || !params.same_layout(state.m) ||
      !params.same_layout(state.v)) {
    throw Error(ErrorCode::kShapeMismatch, "parameters, gradients and moments disagree");
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const auto t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(b1, t);
  const double corr2 = 1.0 - std::pow(b2, t);
  auto p = params.begin();
  auto g = grads.begin();
  auto m = state.m.begin();
  auto v = state.v.begin();
  for (; p != params.end(); ++p, ++g, ++m, ++v) {
    auto& pd = p->second.data;
    const auto& gd = g->second.data;
    auto& md = m->second.data;
    auto& vd = v->second.data;
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = b1 * md[i] + (1.0 - b1) * gd[i];
      vd[i] = b2 * vd[i] + (1.0 - b2) * gd[i] * gd[i];
      const double m_hat = md[i] / corr1;
      const double v_hat = vd[i] / corr2;
      pd[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
  }
}

Standardizer Standardizer::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

Standardizer Standardizer::fit(std::span<const Matrix* const> sequences) {
  if (sequences.empty()) throw Error(ErrorCode::kEmptyBatch, "no sequences to fit");
  const std::size_t dim = sequences.front()->cols();
  std::vector<double> sum(dim, 0.0);
  std::vector<double> sum_sq(dim, 0.0);
  std::size_t count = 0;
  for (const Matrix* s : sequences) {
    if (s->cols() != dim) throw Error(ErrorCode::kDimensionMismatch, "mixed feature widths");
    for (std::size_t t = 0; t < s->rows(); ++t) {
      const auto row = s->row(t);
      for (std::size_t d = 0; d < dim; ++d) sum[d] += row[d];
    }
    count += s->rows();
  }
  Standardizer st;
  st.mean.resize(dim);
  st.scale.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) st.mean[d] = sum[d] / static_cast<double>(count);
  for (const Matrix* s : sequences) {
    for (std::size_t t = 0; t < s->rows(); ++t) {
      const auto row = s->row(t);
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = row[d] - st.mean[d];
        sum_sq[d] += diff * diff;
      }
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    const double sd = std::sqrt(sum_sq[d] / static_cast<double>(count));
    st.scale[d] = sd > 1e-12 ? sd : 1.0;
  }
  return st;
}

void Standardizer::apply(Matrix& frames) const {
  if (frames.cols() != mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "standardizer width differs from features");
  }
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    auto row = frames.row(t);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] = (row[d] - mean[d]) / scale[d];
  }
}

void Standardizer::invert(Matrix& frames) const {
  if (frames.cols() != mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "standardizer width differs from features");
  }
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    auto row = frames.row(t);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] = row[d] * scale[d] + mean[d];
  }
}

std::vector<TrainingExample> examples_from_cache(std::span<const FeatureCacheEntry> entries) {
  std::vector<TrainingExample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    TrainingExample ex;
    ex.id = e.id;
    ex.corpus = e.corpus;
    ex.language = e.language;
    ex.label = e.label_index;
    ex.frames.resize(e.frames.rows(), e.frames.cols());
    std::copy(e.frames.data().begin(), e.frames.data().end(), ex.frames.data().begin());
    out.push_back(std::move(ex));
  }
  return out;
}

void write_train_log(std::span<const EpochLog> log, std::ostream& out, bool include_timing) {
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["dev_wa"] = e.dev_wa;
    j["dev_ua"] = e.dev_ua;
    if (include_timing) j["seconds"] = e.seconds;
    out << j.dump() << '\n';
  }
}

Matrix predict_logits(const TrainedModel& model, std::span<const TrainingExample> examples,
                      std::size_t batch_size) {
  Matrix logits(examples.size(), model.config.n_classes);
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    std::vector<Matrix> scaled;
    scaled.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      scaled.push_back(examples[i].frames);
      if (!model.standardizer.empty()) model.standardizer.apply(scaled.back());
    }
    std::vector<const Matrix*> ptrs;
    for (const auto& m : scaled) ptrs.push_back(&m);
    const auto result = forward(model.params, model.config, pad_batch(ptrs));
    for (std::size_t i = start; i < end; ++i) {
      const auto row = result.logits.row(i - start);
      std::copy(row.begin(), row.end(), logits.row(i).begin());
    }
  }
  return logits;
}

namespace {

Accuracy DevAccuracy(const TrainedModel& model, std::span<const TrainingExample> dev_set) {
  const Matrix logits = predict_logits(model, dev_set);
  std::vector<std::size_t> preds(dev_set.size());
  std::vector<std::size_t> targets(dev_set.size());
  for (std::size_t i = 0; i < dev_set.size(); ++i) {
    preds[i] = argmax(logits.row(i));
    targets[i] = dev_set[i].label;
  }
  return compute_wa_ua(confusion_matrix(preds, targets, model.config.n_classes));
}

}  // namespace

TrainResult train(std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> dev_set, const ModelConfig& model_config,
                  const TrainConfig& train_config, std::span<const std::string> class_names,
                  std::ostream* progress) {
  model_config.validate();
  train_config.validate();
  if (train_set.empty()) throw Error(ErrorCode::kEmptyBatch, "empty training set");

  std::vector<const Matrix*> raw;
  for (const auto& ex : train_set) {
    if (ex.frames.cols() != model_config.d_in) {
      throw Error(ErrorCode::kDimensionMismatch,
                  ex.id + " has width " + std::to_string(ex.frames.cols()) +
                      ", model expects " + std::to_string(model_config.d_in));
    }
    if (ex.label >= model_config.n_classes) {
      throw Error(ErrorCode::kTargetOutOfRange, ex.id + " label out of range");
    }
    raw.push_back(&ex.frames);
  }

  TrainedModel current;
  current.config = model_config;
  current.class_names.assign(class_names.begin(), class_names.end());
  current.standardizer = train_config.standardize ? Standardizer::fit(raw)
                                                  : Standardizer::identity(model_config.d_in);
  current.params = init_params(model_config, train_config.seed);

  std::vector<Matrix> scaled;
  scaled.reserve(train_set.size());
  for (const auto& ex : train_set) {
    scaled.push_back(ex.frames);
    current.standardizer.apply(scaled.back());
  }

  TrainResult result;
  result.best = current;
  OptimizerState state = OptimizerState::zeros_like(current.params);
  Rng rng(train_config.seed ^ 0x5bd1e9955bd1e995ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_ua = -1.0;

  for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    shuffle_in_place(order, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
      const std::size_t end = std::min(order.size(), start + train_config.batch_size);
      std::vector<const Matrix*> ptrs;
      std::vector<std::size_t> targets;
      for (std::size_t i = start; i < end; ++i) {
        ptrs.push_back(&scaled[order[i]]);
        targets.push_back(train_set[order[i]].label);
      }
      const Batch batch = pad_batch(ptrs);
      const auto fwd = forward(current.params, model_config, batch);
      const auto loss = cross_entropy(fwd.logits, targets);
      if (!std::isfinite(loss.loss)) {
        throw Error(ErrorCode::kNumericFailure, "non-finite training loss");
      }
      loss_sum += loss.loss * static_cast<double>(end - start);
      ParamStore grads = backward(fwd.trace, current.params, model_config, loss.grad_logits);
      clip_global_norm(grads, train_config.clip_norm);
      adam_step(current.params, grads, state, train_config);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    if (!dev_set.empty()) {
      const Accuracy acc = DevAccuracy(current, dev_set);
      entry.dev_wa = acc.wa;
      entry.dev_ua = acc.ua;
    }
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.push_back(entry);
    if (progress) {
      *progress << "epoch " << epoch << " loss " << entry.train_loss << " dev_wa " << entry.dev_wa
                << " dev_ua " << entry.dev_ua << '\n';
    }

    if (dev_set.empty() || entry.dev_ua > best_ua) {
      best_ua = entry.dev_ua;
      result.best = current;
      result.best_epoch = epoch;
    }
  }
  return result;
}

namespace {

const char* const kClassesTensor = "classes";

}  // namespace

NamedTensorStore checkpoint_store(const TrainedModel& model) {
  NamedTensorStore store = model_to_store(model.params, model.config);
  const auto dim = static_cast<std::uint32_t>(model.config.d_in);
  const Standardizer st =
      model.standardizer.empty() ? Standardizer::identity(model.config.d_in) : model.standardizer;
  store.add("norm.mean", {dim}, std::vector<float>(st.mean.begin(), st.mean.end()));
  store.add("norm.scale", {dim}, std::vector<float>(st.scale.begin(), st.scale.end()));
  std::string joined;
  for (std::size_t i = 0; i < model.class_names.size(); ++i) {
    if (i) joined += '\n';
    joined += model.class_names[i];
  }
  std::vector<float> bytes;
  for (unsigned char ch : joined) bytes.push_back(ch);
  const auto n = static_cast<std::uint32_t>(bytes.size());
  store.add(kClassesTensor, {n}, std::move(bytes));
  return store;
}

TrainedModel model_from_checkpoint(const NamedTensorStore& store) {
  TrainedModel model;
  model.config = model_config_from_store(store);
  model.params = params_from_store(store, model.config);
  const auto dim = static_cast<std::uint32_t>(model.config.d_in);
  const auto& mean = store.expect("norm.mean", {dim}).data;
  const auto& scale = store.expect("norm.scale", {dim}).data;
  model.standardizer.mean.assign(mean.begin(), mean.end());
  model.standardizer.scale.assign(scale.begin(), scale.end());
  if (store.contains(kClassesTensor)) {
    std::string joined;
    for (float v : store.at(kClassesTensor).data) joined += static_cast<char>(static_cast<unsigned char>(v));
    std::size_t pos = 0;
    while (pos <= joined.size() && !joined.empty()) {
      const std::size_t next = joined.find('\n', pos);
      model.class_names.push_back(joined.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
  }
  if (model.class_names.size() != model.config.n_classes) {
    model.class_names.clear();
    for (std::size_t i = 0; i < model.config.n_classes; ++i) {
      model.class_names.push_back("class" + std::to_string(i));
    }
  }
  return model;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  save_named_tensors(checkpoint_store(model), path);
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  return model_from_checkpoint(load_named_tensors(path));
}

}  // namespace ser
