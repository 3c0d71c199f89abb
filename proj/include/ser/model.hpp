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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ser/matrix.hpp"
#include "ser/tensor_store.hpp"

namespace ser {

using ParamStore = TensorMap<double>;

// Classifier geometry: FC stack -> stacked BiLSTM -> local attention over a
// window of attn_window frames -> linear output.
struct ModelConfig {
  std::size_t d_in = 145;
  std::vector<std::size_t> fc_dims = {256, 256};
  std::size_t lstm_hidden = 100;
  std::size_t lstm_layers = 2;
  std::size_t attn_window = 5;  // 2k + 1
  std::size_t n_classes = 4;

  std::size_t context_dim() const noexcept { return 2 * lstm_hidden; }
  // Throws kEvenWindow for an even window, kInvalidArgument for zero sizes.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// B sequences of T frames of width D, zero-padded past lengths[b].
struct Batch {
  std::size_t batch_size = 0;
  std::size_t max_len = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // B x T x D
  std::vector<std::size_t> lengths;

  std::span<const double> frame(std::size_t b, std::size_t t) const {
    return {data.data() + (b * max_len + t) * dim, dim};
  }
  std::span<const double> sequence(std::size_t b) const {
    return {data.data() + b * max_len * dim, max_len * dim};
  }
};

// Parameter names:
//   fc{i}.weight [out, in], fc{i}.bias [out]             (i from 1)
//   lstm{l}.{fw,bw}.w_ih [4H, in], .w_hh [4H, H], .bias [4H]
//       gate blocks ordered input, forget, cell, output
//   attn.u [2H]
//   out.weight [C, 2H], out.bias [C]
std::vector<std::pair<std::string, std::vector<std::uint32_t>>> param_layout(
    const ModelConfig& config);

// Glorot-uniform weights, zero biases except forget gates (1.0).
ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

// Throws kShapeMismatch if params do not match the config.
void check_params(const ParamStore& params, const ModelConfig& config);

struct AttentionResult {
  std::vector<double> context;  // 2H
  std::vector<double> weights;  // T, zero past valid_len
  std::vector<double> scores;   // valid_len
  Matrix pooled;                // valid_len x 2H
};

// Scores each valid frame by attn_u . mean(h[t-k .. t+k] within the valid
// range), softmaxes over valid frames and returns the weighted sum of the raw
// hidden states. Throws kEvenWindow, kLengthOutOfRange.
AttentionResult local_attention(const Matrix& h, std::span<const double> attn_u,
                                std::size_t window, std::size_t valid_len);

// Per-frame attention of the single-window model: scores attn_u . h_t.
AttentionResult frame_attention(const Matrix& h, std::span<const double> attn_u,
                                std::size_t valid_len);

struct LstmDirectionTrace {
  Matrix gates;   // n x 4H, post-nonlinearity
  Matrix cell;    // n x H
  Matrix hidden;  // n x H
};

struct LstmLayerTrace {
  LstmDirectionTrace forward;
  LstmDirectionTrace backward;
  Matrix output;  // n x 2H, [forward | backward]
};

struct SequenceTrace {
  std::size_t length = 0;
  Matrix input;                    // n x D
  std::vector<Matrix> fc_outputs;  // post-ReLU
  std::vector<LstmLayerTrace> lstm;
  AttentionResult attention;
  std::vector<std::size_t> window_counts;  // frames pooled per score
  std::vector<double> logits;
};

struct ForwardTrace {
  ModelConfig config;
  std::size_t max_len = 0;
  std::vector<SequenceTrace> sequences;
};

struct ForwardResult {
  Matrix logits;  // B x C
  ForwardTrace trace;
};

// Throws kShapeMismatch, kLengthOutOfRange.
ForwardResult forward(const ParamStore& params, const ModelConfig& config, const Batch& batch);

// Reverse-mode gradients of sum(logits * grad_logits). Padded frames
// contribute nothing. Throws kTraceMismatch.
ParamStore backward(const ForwardTrace& trace, const ParamStore& params,
                    const ModelConfig& config, const Matrix& grad_logits);

// Runs one LSTM direction over the valid prefix of inputs (n x in).
// Exposed for the reversal-symmetry property.
LstmDirectionTrace run_lstm_direction(const Matrix& inputs, const ParamStore& params,
                                      const std::string& prefix, std::size_t hidden,
                                      bool reverse);

// Checkpoint form: params as f32 plus a "model.config" header tensor.
NamedTensorStore model_to_store(const ParamStore& params, const ModelConfig& config);
ModelConfig model_config_from_store(const NamedTensorStore& store);
ParamStore params_from_store(const NamedTensorStore& store, const ModelConfig& config);

}  // namespace ser
