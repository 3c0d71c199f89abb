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

#include "ser/fusion.hpp"

#include <algorithm>
#include <string>

#include "ser/error.hpp"

namespace ser {
namespace {

void CheckPatches(std::size_t t_lld, std::size_t n_patches) {
  if (t_lld == 0) throw Error(ErrorCode::kEmptySignal, "empty LLD sequence");
  if (n_patches != patch_count(t_lld)) {
    throw Error(ErrorCode::kPatchMismatch,
                std::to_string(n_patches) + " embeddings for " + std::to_string(t_lld) +
                    " LLD frames (expected " + std::to_string(patch_count(t_lld)) + ")");
  }
}

}  // namespace

std::array<std::size_t, kFramesPerPatch> subsample_indices(std::size_t patch_index) {
  std::array<std::size_t, kFramesPerPatch> idx{};
  for (std::size_t j = 0; j < kFramesPerPatch; ++j) {
    idx[j] = kPatchFrames * patch_index + kSubsampleStride * j;
  }
  return idx;
}

FusedSequence fuse_utterance(const LldSequence& llds, const EmbeddingSequence& embs) {
  const std::size_t t_lld = llds.n_frames();
  const std::size_t n_patches = embs.n_patches();
  CheckPatches(t_lld, n_patches);
  const std::size_t d_lld = llds.values.cols();
  const std::size_t d_emb = embs.embeddings.cols();

  FusedSequence out;
  out.d_lld = d_lld;
  out.frames.resize(n_patches * kFramesPerPatch, d_lld + d_emb);
  for (std::size_t p = 0; p < n_patches; ++p) {
    const auto idx = subsample_indices(p);
    const auto emb = embs.embeddings.row(p);
    for (std::size_t j = 0; j < kFramesPerPatch; ++j) {
      const auto src = llds.values.row(std::min(idx[j], t_lld - 1));
      auto dst = out.frames.row(p * kFramesPerPatch + j);
      std::copy(src.begin(), src.end(), dst.begin());
      std::copy(emb.begin(), emb.end(), dst.begin() + static_cast<std::ptrdiff_t>(d_lld));
    }
  }
  return out;
}

FusedSequence subsample_llds(const LldSequence& llds) {
  const std::size_t t_lld = llds.n_frames();
  if (t_lld == 0) throw Error(ErrorCode::kEmptySignal, "empty LLD sequence");
  const std::size_t n_patches = patch_count(t_lld);
  FusedSequence out;
  out.d_lld = llds.values.cols();
  out.frames.resize(n_patches * kFramesPerPatch, out.d_lld);
  for (std::size_t p = 0; p < n_patches; ++p) {
    const auto idx = subsample_indices(p);
    for (std::size_t j = 0; j < kFramesPerPatch; ++j) {
      const auto src = llds.values.row(std::min(idx[j], t_lld - 1));
      std::copy(src.begin(), src.end(), out.frames.row(p * kFramesPerPatch + j).begin());
    }
  }
  return out;
}

FusedSequence repeat_embeddings(const EmbeddingSequence& embs) {
  if (embs.n_patches() == 0) throw Error(ErrorCode::kEmptySignal, "no embeddings");
  FusedSequence out;
  out.d_lld = 0;
  out.frames.resize(embs.n_patches() * kFramesPerPatch, embs.embeddings.cols());
  for (std::size_t p = 0; p < embs.n_patches(); ++p) {
    const auto emb = embs.embeddings.row(p);
    for (std::size_t j = 0; j < kFramesPerPatch; ++j) {
      std::copy(emb.begin(), emb.end(), out.frames.row(p * kFramesPerPatch + j).begin());
    }
  }
  return out;
}

}  // namespace ser
