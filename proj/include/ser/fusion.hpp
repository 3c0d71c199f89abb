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

#include <array>
#include <cstddef>

#include "ser/features_deep.hpp"
#include "ser/features_lld.hpp"
#include "ser/matrix.hpp"

namespace ser {

inline constexpr std::size_t kFramesPerPatch = 24;
inline constexpr std::size_t kSubsampleStride = kPatchFrames / kFramesPerPatch;  // 4

// Fused frames [lld row | patch embedding], 24 per patch, ordered by
// (patch, position in patch).
struct FusedSequence {
  Matrix frames;
  std::size_t d_lld = lld::kDim;
  std::size_t n_per_patch = kFramesPerPatch;

  std::size_t n_frames() const noexcept { return frames.rows(); }
  std::size_t dim() const noexcept { return frames.cols(); }
};

// LLD frame indices taken for patch p: 96p + 4j, j = 0..23.
std::array<std::size_t, kFramesPerPatch> subsample_indices(std::size_t patch_index);

// Throws kPatchMismatch when the patch count disagrees with the LLD length.
FusedSequence fuse_utterance(const LldSequence& llds, const EmbeddingSequence& embs);

// The two single-stream variants sharing the fused sequence geometry: the
// subsampled LLD rows alone, or each patch embedding repeated 24 times.
FusedSequence subsample_llds(const LldSequence& llds);
FusedSequence repeat_embeddings(const EmbeddingSequence& embs);

}  // namespace ser
