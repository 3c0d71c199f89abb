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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ser/audio_io.hpp"
#include "ser/matrix.hpp"
#include "ser/tensor_store.hpp"

namespace ser {

inline constexpr std::size_t kPatchFrames = 96;
inline constexpr std::size_t kPatchBands = 64;
inline constexpr std::size_t kEmbeddingDim = 128;

// 96 consecutive frames x 64 log-mel bands.
struct MelPatch {
  Matrix values;
};

// One embedding per patch, P x 128.
struct EmbeddingSequence {
  Matrix embeddings;

  std::size_t n_patches() const noexcept { return embeddings.rows(); }
};

// Patches produced from T frames: max(1, floor(T / 96)).
std::size_t patch_count(std::size_t n_frames);

// Log-mel frames (25 ms / 10 ms, Hamming, 64 filters) grouped into
// non-overlapping blocks of 96. A trailing partial block is dropped unless
// it is the only one, in which case it is reflection-padded.
// Throws kEmptySignal.
std::vector<MelPatch> log_mel_patches(const AudioClip& clip);

// Layer pattern of the convolutional embedder. Each block is a run of 3x3
// same-padded ReLU convolutions followed by a 2x2 stride-2 max pool; then the
// HWC-flattened map passes through fully connected layers, ReLU on all but
// the last.
struct VggishArchitecture {
  std::size_t input_rows = kPatchFrames;
  std::size_t input_cols = kPatchBands;
  std::vector<std::vector<std::size_t>> conv_blocks = {{64}, {128}, {256, 256}, {512, 512}};
  std::vector<std::size_t> fc_dims = {4096, 4096, kEmbeddingDim};

  static VggishArchitecture full() { return {}; }
  // Narrow channels and FC widths, same depth and 128-d output.
  static VggishArchitecture compact();

  std::size_t output_dim() const { return fc_dims.empty() ? 0 : fc_dims.back(); }
  std::size_t flattened_dim() const;

  struct Layer {
    std::string name;
    bool conv = false;
    std::size_t in = 0;
    std::size_t out = 0;
    bool relu = true;
    bool pool_after = false;
  };
  // Expanded layer list with conventional names (conv1, conv3_2, fc1_1, fc2).
  std::vector<Layer> layers() const;
};

// Receives every layer's post-activation output in order.
using LayerObserver = std::function<void(std::string_view layer, std::span<const float> values)>;

// Forward-only embedder over externally supplied weights. Tensors are named
// "<layer>/weights" ([out, in, 3, 3] or [out, in]) and "<layer>/biases".
// The weights must outlive the embedder.
class VggishEmbedder {
 public:
  // Throws kShapeMismatch if any tensor disagrees with the architecture.
  explicit VggishEmbedder(const NamedTensorStore& weights,
                          VggishArchitecture arch = VggishArchitecture::full());

  // Recovers channel and FC widths from the tensor shapes.
  static VggishArchitecture infer_architecture(const NamedTensorStore& weights,
                                               std::size_t input_rows = kPatchFrames,
                                               std::size_t input_cols = kPatchBands);

  const VggishArchitecture& architecture() const noexcept { return arch_; }

  // Input is a rows x cols patch. Output length is architecture().output_dim().
  std::vector<float> embed(const Matrix& patch, const LayerObserver& observer = {}) const;
  std::vector<float> embed(const MelPatch& patch) const { return embed(patch.values); }

 private:
  const NamedTensorStore* weights_;
  VggishArchitecture arch_;
  std::vector<VggishArchitecture::Layer> layers_;
};

std::vector<float> embed_patch(const MelPatch& patch, const NamedTensorStore& weights);

EmbeddingSequence embed_utterance(const AudioClip& clip, const VggishEmbedder& embedder);

// Seeded He-uniform weights, zero biases; used for tests and synthetic runs.
NamedTensorStore init_vggish_weights(const VggishArchitecture& arch, std::uint64_t seed);

}  // namespace ser
