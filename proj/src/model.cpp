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

#include "ser/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ser/error.hpp"
#include "ser/linalg.hpp"
#include "ser/random.hpp"
#include "ser/simd.hpp"

namespace ser {
namespace {

constexpr float kConfigVersion = 1.0f;
const char* const kConfigTensor = "model.config";

std::string FcName(std::size_t i) { return "fc" + std::to_string(i + 1); }
std::string LstmPrefix(std::size_t layer, bool backward_dir) {
  return "lstm" + std::to_string(layer + 1) + (backward_dir ? ".bw" : ".fw");
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::span<const double> Data(const ParamStore& p, const std::string& name) {
  return p.at(name).data;
}
std::span<double> Data(ParamStore& p, const std::string& name) { return p.at(name).data; }

std::span<const double> Row(const Matrix& m, std::size_t r) { return m.row(r); }

void AddBiasRows(Matrix& m, std::span<const double> bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) simd::axpy(1.0, bias, m.row(r));
}

void AccumulateRows(const Matrix& m, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) simd::axpy(1.0, m.row(r), out);
}

std::size_t HalfWindow(std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw Error(ErrorCode::kEvenWindow,
                "attention window must be odd (2k+1), got " + std::to_string(window));
  }
  return window / 2;
}

void SoftmaxInto(std::span<const double> scores, std::span<double> weights) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double s : scores) peak = std::max(peak, s);
  double total = 0.0;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    weights[t] = std::exp(scores[t] - peak);
    total += weights[t];
  }
  for (std::size_t t = 0; t < scores.size(); ++t) weights[t] /= total;
}

AttentionResult AttendPooled(const Matrix& h, std::span<const double> attn_u, Matrix pooled,
                             std::size_t valid_len) {
  AttentionResult r;
  r.pooled = std::move(pooled);
  r.scores.resize(valid_len);
  for (std::size_t t = 0; t < valid_len; ++t) r.scores[t] = simd::dot(attn_u, Row(r.pooled, t));
  r.weights.assign(h.rows(), 0.0);
  SoftmaxInto(r.scores, std::span<double>(r.weights).first(valid_len));
  r.context.assign(h.cols(), 0.0);
  for (std::size_t t = 0; t < valid_len; ++t) simd::axpy(r.weights[t], h.row(t), r.context);
  return r;
}

void CheckAttentionInputs(const Matrix& h, std::span<const double> attn_u, std::size_t valid_len) {
  if (valid_len == 0 || valid_len > h.rows()) {
    throw Error(ErrorCode::kLengthOutOfRange, "valid length " + std::to_string(valid_len) +
                                                  " outside [1, " + std::to_string(h.rows()) + "]");
  }
  if (attn_u.size() != h.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "attention vector width differs from hidden width");
  }
}

std::vector<std::size_t> WindowCounts(std::size_t window, std::size_t valid_len) {
  const std::size_t k = HalfWindow(window);
  std::vector<std::size_t> counts(valid_len);
  for (std::size_t t = 0; t < valid_len; ++t) {
    const std::size_t lo = t >= k ? t - k : 0;
    const std::size_t hi = std::min(valid_len - 1, t + k);
    counts[t] = hi - lo + 1;
  }
  return counts;
}

}  // namespace

void ModelConfig::validate() const {
  HalfWindow(attn_window);
  if (d_in == 0 || lstm_hidden == 0 || lstm_layers == 0 || n_classes == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model dimensions must be positive");
  }
  for (auto d : fc_dims) {
    if (d == 0) throw Error(ErrorCode::kInvalidArgument, "FC width must be positive");
  }
}

std::vector<std::pair<std::string, std::vector<std::uint32_t>>> param_layout(
    const ModelConfig& config) {
  using Shape = std::vector<std::uint32_t>;
  auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  std::vector<std::pair<std::string, Shape>> layout;
  std::size_t in = config.d_in;
  for (std::size_t i = 0; i < config.fc_dims.size(); ++i) {
    layout.push_back({FcName(i) + ".weight", Shape{u(config.fc_dims[i]), u(in)}});
    layout.push_back({FcName(i) + ".bias", Shape{u(config.fc_dims[i])}});
    in = config.fc_dims[i];
  }
  const std::size_t h = config.lstm_hidden;
  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    for (bool bw : {false, true}) {
      const std::string p = LstmPrefix(l, bw);
      layout.push_back({p + ".w_ih", Shape{u(4 * h), u(in)}});
      layout.push_back({p + ".w_hh", Shape{u(4 * h), u(h)}});
      layout.push_back({p + ".bias", Shape{u(4 * h)}});
    }
    in = 2 * h;
  }
  layout.push_back({"attn.u", Shape{u(2 * h)}});
  layout.push_back({"out.weight", Shape{u(config.n_classes), u(2 * h)}});
  layout.push_back({"out.bias", Shape{u(config.n_classes)}});
  return layout;
}

ParamStore init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamStore params;
  for (auto& [name, shape] : param_layout(config)) {
    auto& t = params.add_zeros(name, shape);
    const bool is_bias = name.ends_with(".bias");
    if (is_bias) {
      if (name.starts_with("lstm")) {
        const std::size_t h = config.lstm_hidden;
        std::fill(t.data.begin() + static_cast<std::ptrdiff_t>(h),
                  t.data.begin() + static_cast<std::ptrdiff_t>(2 * h), 1.0);
      }
      continue;
    }
    const double fan_out = shape[0];
    const double fan_in = shape.size() > 1 ? shape[1] : 1.0;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.data) {
      // Strictly inside (-bound, bound).
      do {
        v = rng.uniform(-bound, bound);
      } while (v == -bound);
    }
  }
  return params;
}

void check_params(const ParamStore& params, const ModelConfig& config) {
  const auto layout = param_layout(config);
  for (const auto& [name, shape] : layout) params.expect(name, shape);
  if (params.size() != layout.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter store has unexpected tensors");
  }
}

AttentionResult local_attention(const Matrix& h, std::span<const double> attn_u,
                                std::size_t window, std::size_t valid_len) {
  const std::size_t k = HalfWindow(window);
  CheckAttentionInputs(h, attn_u, valid_len);
  const std::size_t width = h.cols();
  Matrix pooled(valid_len, width);
  for (std::size_t t = 0; t < valid_len; ++t) {
    const std::size_t lo = t >= k ? t - k : 0;
    const std::size_t hi = std::min(valid_len - 1, t + k);
    auto dst = pooled.row(t);
    for (std::size_t s = lo; s <= hi; ++s) simd::axpy(1.0, h.row(s), dst);
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    if (hi != lo) {
      for (double& v : dst) v *= inv;
    }
  }
  return AttendPooled(h, attn_u, std::move(pooled), valid_len);
}

AttentionResult frame_attention(const Matrix& h, std::span<const double> attn_u,
                                std::size_t valid_len) {
  CheckAttentionInputs(h, attn_u, valid_len);
  Matrix pooled(valid_len, h.cols());
  for (std::size_t t = 0; t < valid_len; ++t) {
    std::copy(h.row(t).begin(), h.row(t).end(), pooled.row(t).begin());
  }
  return AttendPooled(h, attn_u, std::move(pooled), valid_len);
}

LstmDirectionTrace run_lstm_direction(const Matrix& inputs, const ParamStore& params,
                                      const std::string& prefix, std::size_t hidden,
                                      bool reverse) {
  const std::size_t n = inputs.rows();
  const std::size_t in = inputs.cols();
  const std::size_t g4 = 4 * hidden;
  const auto w_ih = Data(params, prefix + ".w_ih");
  const auto w_hh = Data(params, prefix + ".w_hh");
  const auto bias = Data(params, prefix + ".bias");

  LstmDirectionTrace tr;
  tr.gates.resize(n, g4);
  tr.cell.resize(n, hidden);
  tr.hidden.resize(n, hidden);
  // Input projections for every step at once.
  linalg::gemm_nt(inputs.data(), w_ih, tr.gates.data(), n, g4, in);
  AddBiasRows(tr.gates, bias);

  std::vector<double> zero(hidden, 0.0);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    const bool first = step == 0;
    const std::span<const double> h_prev =
        first ? std::span<const double>(zero) : Row(tr.hidden, reverse ? t + 1 : t - 1);
    const std::span<const double> c_prev =
        first ? std::span<const double>(zero) : Row(tr.cell, reverse ? t + 1 : t - 1);
    auto z = tr.gates.row(t);
    if (!first) linalg::gemv(w_hh, g4, hidden, h_prev, z);
    auto c = tr.cell.row(t);
    auto hcur = tr.hidden.row(t);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double ig = Sigmoid(z[j]);
      const double fg = Sigmoid(z[hidden + j]);
      const double gg = std::tanh(z[2 * hidden + j]);
      const double og = Sigmoid(z[3 * hidden + j]);
      z[j] = ig;
      z[hidden + j] = fg;
      z[2 * hidden + j] = gg;
      z[3 * hidden + j] = og;
      c[j] = fg * c_prev[j] + ig * gg;
      hcur[j] = og * std::tanh(c[j]);
    }
  }
  return tr;
}

namespace {

// One sequence through the whole network.
SequenceTrace ForwardSequence(const ParamStore& params, const ModelConfig& config,
                              const Batch& batch, std::size_t b) {
  SequenceTrace st;
  const std::size_t n = batch.lengths[b];
  st.length = n;
  st.input.resize(n, batch.dim);
  std::copy_n(batch.sequence(b).begin(), n * batch.dim, st.input.data().begin());

  const Matrix* cur = &st.input;
  for (std::size_t i = 0; i < config.fc_dims.size(); ++i) {
    const std::size_t out = config.fc_dims[i];
    Matrix a(n, out);
    linalg::gemm_nt(cur->data(), Data(params, FcName(i) + ".weight"), a.data(), n, out,
                    cur->cols());
    AddBiasRows(a, Data(params, FcName(i) + ".bias"));
    for (double& v : a.data()) v = std::max(0.0, v);
    st.fc_outputs.push_back(std::move(a));
    cur = &st.fc_outputs.back();
  }

  const std::size_t h = config.lstm_hidden;
  st.lstm.resize(config.lstm_layers);
  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    auto& layer = st.lstm[l];
    layer.forward = run_lstm_direction(*cur, params, LstmPrefix(l, false), h, false);
    layer.backward = run_lstm_direction(*cur, params, LstmPrefix(l, true), h, true);
    layer.output.resize(n, 2 * h);
    for (std::size_t t = 0; t < n; ++t) {
      auto dst = layer.output.row(t);
      std::copy(layer.forward.hidden.row(t).begin(), layer.forward.hidden.row(t).end(),
                dst.begin());
      std::copy(layer.backward.hidden.row(t).begin(), layer.backward.hidden.row(t).end(),
                dst.begin() + static_cast<std::ptrdiff_t>(h));
    }
    cur = &layer.output;
  }

  st.attention = local_attention(*cur, Data(params, "attn.u"), config.attn_window, n);
  st.window_counts = WindowCounts(config.attn_window, n);

  st.logits.assign(Data(params, "out.bias").begin(), Data(params, "out.bias").end());
  linalg::gemv(Data(params, "out.weight"), config.n_classes, 2 * h, st.attention.context,
               st.logits);
  return st;
}

// dOut (n x 2H) -> dInput (n x in), accumulating parameter gradients.
void BackwardLstmDirection(const LstmDirectionTrace& tr, const Matrix& inputs,
                           const Matrix& d_out, std::size_t col_offset, const ParamStore& params,
                           ParamStore& grads, const std::string& prefix, std::size_t hidden,
                           bool reverse, Matrix& d_inputs) {
  const std::size_t n = inputs.rows();
  const std::size_t in = inputs.cols();
  const std::size_t g4 = 4 * hidden;
  const auto w_ih = Data(params, prefix + ".w_ih");
  const auto w_hh = Data(params, prefix + ".w_hh");
  auto dw_ih = Data(grads, prefix + ".w_ih");
  auto dw_hh = Data(grads, prefix + ".w_hh");
  auto dbias = Data(grads, prefix + ".bias");

  Matrix dz(n, g4);
  std::vector<double> dh_carry(hidden, 0.0);
  std::vector<double> dc_carry(hidden, 0.0);
  std::vector<double> zero(hidden, 0.0);
  // Walk the processing order backwards.
  for (std::size_t step = n; step-- > 0;) {
    const std::size_t t = reverse ? n - 1 - step : step;
    const bool first = step == 0;
    const std::size_t prev = reverse ? t + 1 : t - 1;
    const std::span<const double> c_prev = first ? std::span<const double>(zero) : Row(tr.cell, prev);
    const auto gates = tr.gates.row(t);
    const auto c = tr.cell.row(t);
    auto dzt = dz.row(t);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double ig = gates[j];
      const double fg = gates[hidden + j];
      const double gg = gates[2 * hidden + j];
      const double og = gates[3 * hidden + j];
      const double tc = std::tanh(c[j]);
      const double dh = d_out(t, col_offset + j) + dh_carry[j];
      const double dc = dc_carry[j] + dh * og * (1.0 - tc * tc);
      dzt[j] = dc * gg * ig * (1.0 - ig);
      dzt[hidden + j] = dc * c_prev[j] * fg * (1.0 - fg);
      dzt[2 * hidden + j] = dc * ig * (1.0 - gg * gg);
      dzt[3 * hidden + j] = dh * tc * og * (1.0 - og);
      dc_carry[j] = dc * fg;
    }
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    if (!first) {
      linalg::gemv_t(w_hh, g4, hidden, dzt, dh_carry);
      linalg::ger(dw_hh, g4, hidden, 1.0, dzt, Row(tr.hidden, prev));
    }
  }
  linalg::gemm_tn(dz.data(), inputs.data(), dw_ih, g4, in, n);
  AccumulateRows(dz, dbias);
  linalg::gemm_nn(dz.data(), w_ih, d_inputs.data(), n, in, g4);
}

void BackwardSequence(const SequenceTrace& st, const ParamStore& params,
                      const ModelConfig& config, std::span<const double> dlogits,
                      ParamStore& grads) {
  const std::size_t n = st.length;
  const std::size_t h = config.lstm_hidden;
  const std::size_t width = 2 * h;
  const auto& att = st.attention;
  const Matrix& top = st.lstm.back().output;

  // Output layer.
  linalg::ger(Data(grads, "out.weight"), config.n_classes, width, 1.0, dlogits, att.context);
  simd::axpy(1.0, dlogits, Data(grads, "out.bias"));
  std::vector<double> dcontext(width, 0.0);
  linalg::gemv_t(Data(params, "out.weight"), config.n_classes, width, dlogits, dcontext);

  // Attention: context = sum_t w_t h_t, w = softmax(e), e_t = u . pooled_t.
  Matrix d_top(n, width);
  std::vector<double> dweight(n);
  double weighted = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    simd::axpy(att.weights[t], dcontext, d_top.row(t));
    dweight[t] = simd::dot(top.row(t), dcontext);
    weighted += att.weights[t] * dweight[t];
  }
  const auto u = Data(params, "attn.u");
  auto du = Data(grads, "attn.u");
  const std::size_t k = config.attn_window / 2;
  for (std::size_t t = 0; t < n; ++t) {
    const double de = att.weights[t] * (dweight[t] - weighted);
    if (de == 0.0) continue;
    simd::axpy(de, att.pooled.row(t), du);
    const double share = de / static_cast<double>(st.window_counts[t]);
    const std::size_t lo = t >= k ? t - k : 0;
    const std::size_t hi = std::min(n - 1, t + k);
    for (std::size_t s = lo; s <= hi; ++s) simd::axpy(share, u, d_top.row(s));
  }

  // Stacked BiLSTM, top layer first.
  Matrix d_cur = std::move(d_top);
  for (std::size_t l = config.lstm_layers; l-- > 0;) {
    const auto& layer = st.lstm[l];
    const Matrix& inputs = l == 0 ? (st.fc_outputs.empty() ? st.input : st.fc_outputs.back())
                                  : st.lstm[l - 1].output;
    Matrix d_in(n, inputs.cols());
    BackwardLstmDirection(layer.forward, inputs, d_cur, 0, params, grads, LstmPrefix(l, false),
                          h, false, d_in);
    BackwardLstmDirection(layer.backward, inputs, d_cur, h, params, grads, LstmPrefix(l, true), h,
                          true, d_in);
    d_cur = std::move(d_in);
  }

  // FC stack.
  for (std::size_t i = config.fc_dims.size(); i-- > 0;) {
    const Matrix& out = st.fc_outputs[i];
    const Matrix& in = i == 0 ? st.input : st.fc_outputs[i - 1];
    for (std::size_t idx = 0; idx < d_cur.data().size(); ++idx) {
      if (out.data()[idx] <= 0.0) d_cur.data()[idx] = 0.0;
    }
    linalg::gemm_tn(d_cur.data(), in.data(), Data(grads, FcName(i) + ".weight"), out.cols(),
                    in.cols(), n);
    AccumulateRows(d_cur, Data(grads, FcName(i) + ".bias"));
    if (i == 0) break;
    Matrix d_prev(n, in.cols());
    linalg::gemm_nn(d_cur.data(), Data(params, FcName(i) + ".weight"), d_prev.data(), n,
                    in.cols(), out.cols());
    d_cur = std::move(d_prev);
  }
}

}  // namespace

ForwardResult forward(const ParamStore& params, const ModelConfig& config, const Batch& batch) {
  config.validate();
  check_params(params, config);
  if (batch.dim != config.d_in) {
    throw Error(ErrorCode::kShapeMismatch, "batch width " + std::to_string(batch.dim) +
                                               " but model expects " + std::to_string(config.d_in));
  }
  if (batch.lengths.size() != batch.batch_size ||
      batch.data.size() != batch.batch_size * batch.max_len * batch.dim) {
    throw Error(ErrorCode::kShapeMismatch, "batch buffer does not match its dimensions");
  }
  for (std::size_t len : batch.lengths) {
    if (len == 0 || len > batch.max_len) {
      throw Error(ErrorCode::kLengthOutOfRange,
                  "sequence length " + std::to_string(len) + " outside [1, " +
                      std::to_string(batch.max_len) + "]");
    }
  }

  ForwardResult result;
  result.trace.config = config;
  result.trace.max_len = batch.max_len;
  result.logits.resize(batch.batch_size, config.n_classes);
  result.trace.sequences.reserve(batch.batch_size);
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    auto st = ForwardSequence(params, config, batch, b);
    std::copy(st.logits.begin(), st.logits.end(), result.logits.row(b).begin());
    // Report attention weights over the padded length.
    st.attention.weights.resize(batch.max_len, 0.0);
    result.trace.sequences.push_back(std::move(st));
  }
  return result;
}

ParamStore backward(const ForwardTrace& trace, const ParamStore& params,
                    const ModelConfig& config, const Matrix& grad_logits) {
  if (!(trace.config == config) || grad_logits.rows() != trace.sequences.size() ||
      grad_logits.cols() != config.n_classes) {
    throw Error(ErrorCode::kTraceMismatch, "trace does not belong to this model and gradient");
  }
  check_params(params, config);
  ParamStore grads = params.zeros_like();
  for (std::size_t b = 0; b < trace.sequences.size(); ++b) {
    const auto& st = trace.sequences[b];
    const auto dl = grad_logits.row(b);
    if (std::all_of(dl.begin(), dl.end(), [](double v) { return v == 0.0; })) continue;
    BackwardSequence(st, params, config, dl, grads);
  }
  return grads;
}

NamedTensorStore model_to_store(const ParamStore& params, const ModelConfig& config) {
  check_params(params, config);
  NamedTensorStore store;
  for (const auto& [name, t] : params) {
    std::vector<float> data(t.data.begin(), t.data.end());
    store.add(name, t.shape, std::move(data));
  }
  std::vector<float> header = {kConfigVersion,
                               static_cast<float>(config.d_in),
                               static_cast<float>(config.lstm_hidden),
                               static_cast<float>(config.lstm_layers),
                               static_cast<float>(config.attn_window),
                               static_cast<float>(config.n_classes),
                               static_cast<float>(config.fc_dims.size())};
  for (auto d : config.fc_dims) header.push_back(static_cast<float>(d));
  const auto len = static_cast<std::uint32_t>(header.size());
  store.add(kConfigTensor, {len}, std::move(header));
  return store;
}

ModelConfig model_config_from_store(const NamedTensorStore& store) {
  const auto& h = store.at(kConfigTensor).data;
  if (h.size() < 7 || h[0] != kConfigVersion ||
      h.size() != 7 + static_cast<std::size_t>(h[6])) {
    throw Error(ErrorCode::kShapeMismatch, "malformed model.config header");
  }
  auto as_size = [](float v) { return static_cast<std::size_t>(v); };
  ModelConfig config;
  config.d_in = as_size(h[1]);
  config.lstm_hidden = as_size(h[2]);
  config.lstm_layers = as_size(h[3]);
  config.attn_window = as_size(h[4]);
  config.n_classes = as_size(h[5]);
  config.fc_dims.clear();
  for (std::size_t i = 7; i < h.size(); ++i) config.fc_dims.push_back(as_size(h[i]));
  config.validate();
  return config;
}

ParamStore params_from_store(const NamedTensorStore& store, const ModelConfig& config) {
  ParamStore params;
  for (const auto& [name, shape] : param_layout(config)) {
    const auto& t = store.expect(name, shape);
    params.add(name, shape, std::vector<double>(t.data.begin(), t.data.end()));
  }
  return params;
}

}  // namespace ser
