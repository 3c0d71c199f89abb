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

#include "ser/features_deep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ser/error.hpp"
#include "ser/features_lld.hpp"
#include "ser/preprocess.hpp"
#include "ser/random.hpp"
#include "ser/simd.hpp"

namespace ser {
namespace {

std::size_t Reflect(std::size_t j, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  const std::size_t m = j % period;
  return m < n ? m : period - m;
}

std::string WeightsName(const std::string& layer) { return layer + "/weights"; }
std::string BiasesName(const std::string& layer) { return layer + "/biases"; }

// Feature map in channel-major (C x H x W) layout.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;
};

FeatureMap Conv3x3Relu(const FeatureMap& in, const Tensor<float>& weights,
                       const Tensor<float>& biases, std::size_t out_channels) {
  const std::size_t h = in.height;
  const std::size_t w = in.width;
  const std::size_t patch = in.channels * 9;
  // im2col: one row of C*9 taps per output position.
  std::vector<float> columns(h * w * patch, 0.0f);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      float* col = columns.data() + (y * w + x) * patch;
      for (std::size_t c = 0; c < in.channels; ++c) {
        const float* plane = in.values.data() + c * h * w;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
            col[c * 9 + ky * 3 + kx] = plane[static_cast<std::size_t>(sy) * w +
                                             static_cast<std::size_t>(sx)];
          }
        }
      }
    }
  }

  FeatureMap out{out_channels, h, w, std::vector<float>(out_channels * h * w)};
  const auto& kern = simd::kernels();
  for (std::size_t o = 0; o < out_channels; ++o) {
    const float* filter = weights.data.data() + o * patch;
    const float bias = biases.data[o];
    float* dst = out.values.data() + o * h * w;
    for (std::size_t p = 0; p < h * w; ++p) {
      dst[p] = std::max(0.0f, bias + kern.dot_f32(filter, columns.data() + p * patch, patch));
    }
  }
  return out;
}

FeatureMap MaxPool2(const FeatureMap& in) {
  FeatureMap out{in.channels, in.height / 2, in.width / 2, {}};
  out.values.resize(out.channels * out.height * out.width);
  for (std::size_t c = 0; c < in.channels; ++c) {
    const float* src = in.values.data() + c * in.height * in.width;
    float* dst = out.values.data() + c * out.height * out.width;
    for (std::size_t y = 0; y < out.height; ++y) {
      for (std::size_t x = 0; x < out.width; ++x) {
        const float* p = src + 2 * y * in.width + 2 * x;
        dst[y * out.width + x] = std::max({p[0], p[1], p[in.width], p[in.width + 1]});
      }
    }
  }
  return out;
}

std::vector<float> FlattenHwc(const FeatureMap& map) {
  std::vector<float> flat(map.values.size());
  const std::size_t plane = map.height * map.width;
  for (std::size_t c = 0; c < map.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) flat[p * map.channels + c] = map.values[c * plane + p];
  }
  return flat;
}

}  // namespace

std::size_t patch_count(std::size_t n_frames) {
  return std::max<std::size_t>(1, n_frames / kPatchFrames);
}

std::vector<MelPatch> log_mel_patches(const AudioClip& clip) {
  const FrameMatrix windowed = apply_window(frame_signal(clip, kFrameMs, kHopMs));
  const MelFilterbank bank(clip.sample_rate_hz, kPatchBands);
  const std::size_t t_frames = windowed.n_frames();

  Matrix log_mel(t_frames, kPatchBands);
  for (std::size_t t = 0; t < t_frames; ++t) {
    const auto energies = bank.log_energies(windowed.frames.row(t));
    std::copy(energies.begin(), energies.end(), log_mel.row(t).begin());
  }

  const std::size_t n_patches = patch_count(t_frames);
  std::vector<MelPatch> patches(n_patches);
  for (std::size_t p = 0; p < n_patches; ++p) {
    Matrix& values = patches[p].values;
    values.resize(kPatchFrames, kPatchBands);
    for (std::size_t j = 0; j < kPatchFrames; ++j) {
      const std::size_t src =
          t_frames >= kPatchFrames ? p * kPatchFrames + j : Reflect(j, t_frames);
      std::copy(log_mel.row(src).begin(), log_mel.row(src).end(), values.row(j).begin());
    }
  }
  return patches;
}

VggishArchitecture VggishArchitecture::compact() {
  VggishArchitecture arch;
  arch.conv_blocks = {{8}, {16}, {32, 32}, {32, 32}};
  arch.fc_dims = {256, 256, kEmbeddingDim};
  return arch;
}

std::size_t VggishArchitecture::flattened_dim() const {
  std::size_t rows = input_rows;
  std::size_t cols = input_cols;
  std::size_t channels = 1;
  for (const auto& block : conv_blocks) {
    if (!block.empty()) channels = block.back();
    rows /= 2;
    cols /= 2;
  }
  return rows * cols * channels;
}

std::vector<VggishArchitecture::Layer> VggishArchitecture::layers() const {
  std::vector<Layer> out;
  std::size_t channels = 1;
  for (std::size_t b = 0; b < conv_blocks.size(); ++b) {
    const auto& block = conv_blocks[b];
    for (std::size_t i = 0; i < block.size(); ++i) {
      Layer layer;
      layer.name = "conv" + std::to_string(b + 1);
      if (block.size() > 1) layer.name += "_" + std::to_string(i + 1);
      layer.conv = true;
      layer.in = channels;
      layer.out = block[i];
      layer.pool_after = i + 1 == block.size();
      channels = block[i];
      out.push_back(layer);
    }
  }
  std::size_t in = flattened_dim();
  for (std::size_t i = 0; i < fc_dims.size(); ++i) {
    Layer layer;
    const bool last = i + 1 == fc_dims.size();
    layer.name = last ? "fc2" : "fc1_" + std::to_string(i + 1);
    layer.in = in;
    layer.out = fc_dims[i];
    layer.relu = !last;
    in = fc_dims[i];
    out.push_back(layer);
  }
  return out;
}

VggishEmbedder::VggishEmbedder(const NamedTensorStore& weights, VggishArchitecture arch)
    : weights_(&weights), arch_(std::move(arch)), layers_(arch_.layers()) {
  std::size_t rows = arch_.input_rows;
  std::size_t cols = arch_.input_cols;
  for (const auto& block : arch_.conv_blocks) {
    if (block.empty()) throw Error(ErrorCode::kShapeMismatch, "empty convolution block");
    rows /= 2;
    cols /= 2;
  }
  if (rows == 0 || cols == 0 || arch_.fc_dims.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "architecture pools the patch away");
  }
  for (const auto& layer : layers_) {
    const auto in = static_cast<std::uint32_t>(layer.in);
    const auto out = static_cast<std::uint32_t>(layer.out);
    if (layer.conv) {
      weights.expect(WeightsName(layer.name), {out, in, 3, 3});
    } else {
      weights.expect(WeightsName(layer.name), {out, in});
    }
    weights.expect(BiasesName(layer.name), {out});
  }
}

VggishArchitecture VggishEmbedder::infer_architecture(const NamedTensorStore& weights,
                                                      std::size_t input_rows,
                                                      std::size_t input_cols) {
  VggishArchitecture arch;
  arch.input_rows = input_rows;
  arch.input_cols = input_cols;
  arch.conv_blocks.clear();
  arch.fc_dims.clear();
  auto out_dim = [&](const std::string& layer) -> std::size_t {
    return weights.at(WeightsName(layer)).shape.at(0);
  };
  for (std::size_t b = 1;; ++b) {
    const std::string base = "conv" + std::to_string(b);
    std::vector<std::size_t> block;
    if (weights.contains(WeightsName(base))) {
      block.push_back(out_dim(base));
    } else {
      for (std::size_t i = 1; weights.contains(WeightsName(base + "_" + std::to_string(i))); ++i) {
        block.push_back(out_dim(base + "_" + std::to_string(i)));
      }
    }
    if (block.empty()) break;
    arch.conv_blocks.push_back(std::move(block));
  }
  for (std::size_t i = 1; weights.contains(WeightsName("fc1_" + std::to_string(i))); ++i) {
    arch.fc_dims.push_back(out_dim("fc1_" + std::to_string(i)));
  }
  if (!weights.contains(WeightsName("fc2"))) {
    throw Error(ErrorCode::kShapeMismatch, "missing tensor fc2/weights");
  }
  arch.fc_dims.push_back(out_dim("fc2"));
  return arch;
}

std::vector<float> VggishEmbedder::embed(const Matrix& patch, const LayerObserver& observer) const {
  if (patch.rows() != arch_.input_rows || patch.cols() != arch_.input_cols) {
    throw Error(ErrorCode::kShapeMismatch,
                "patch is " + std::to_string(patch.rows()) + "x" + std::to_string(patch.cols()) +
                    ", embedder expects " + std::to_string(arch_.input_rows) + "x" +
                    std::to_string(arch_.input_cols));
  }
  FeatureMap map{1, patch.rows(), patch.cols(), {}};
  map.values.assign(patch.data().begin(), patch.data().end());

  std::vector<float> vec;
  bool flattened = false;
  const auto& kern = simd::kernels();
  for (const auto& layer : layers_) {
    const auto& w = weights_->at(WeightsName(layer.name));
    const auto& b = weights_->at(BiasesName(layer.name));
    if (layer.conv) {
      map = Conv3x3Relu(map, w, b, layer.out);
      if (observer) observer(layer.name, map.values);
      if (layer.pool_after) map = MaxPool2(map);
      continue;
    }
    if (!flattened) {
      vec = FlattenHwc(map);
      flattened = true;
    }
    std::vector<float> next(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      float v = b.data[o] + kern.dot_f32(w.data.data() + o * layer.in, vec.data(), layer.in);
      next[o] = layer.relu ? std::max(0.0f, v) : v;
    }
    vec = std::move(next);
    if (observer) observer(layer.name, vec);
  }
  return vec;
}

std::vector<float> embed_patch(const MelPatch& patch, const NamedTensorStore& weights) {
  return VggishEmbedder(weights).embed(patch);
}

EmbeddingSequence embed_utterance(const AudioClip& clip, const VggishEmbedder& embedder) {
  const auto patches = log_mel_patches(clip);
  EmbeddingSequence seq;
  seq.embeddings.resize(patches.size(), embedder.architecture().output_dim());
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const auto e = embedder.embed(patches[p]);
    std::copy(e.begin(), e.end(), seq.embeddings.row(p).begin());
  }
  return seq;
}

NamedTensorStore init_vggish_weights(const VggishArchitecture& arch, std::uint64_t seed) {
  Rng rng(seed);
  NamedTensorStore store;
  for (const auto& layer : arch.layers()) {
    const auto in = static_cast<std::uint32_t>(layer.in);
    const auto out = static_cast<std::uint32_t>(layer.out);
    std::vector<std::uint32_t> shape =
        layer.conv ? std::vector<std::uint32_t>{out, in, 3, 3} : std::vector<std::uint32_t>{out, in};
    const std::size_t fan_in = layer.conv ? layer.in * 9 : layer.in;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::vector<float> data(shape_size(shape));
    for (auto& v : data) v = static_cast<float>(rng.uniform(-bound, bound));
    store.add(WeightsName(layer.name), std::move(shape), std::move(data));
    store.add_zeros(BiasesName(layer.name), {out});
  }
  return store;
}

}  // namespace ser
