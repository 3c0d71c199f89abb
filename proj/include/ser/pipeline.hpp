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

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "ser/audio_io.hpp"
#include "ser/features_deep.hpp"
#include "ser/fusion.hpp"

namespace ser {

// The three feature sets compared by the toolkit. All share the 24-frames-
// per-patch geometry so the same classifier can consume any of them.
enum class FeatureMode { kLlds, kVggishs, kFused };

std::string_view feature_mode_name(FeatureMode mode);  // "llds", "vggishs", "llds+vggishs"
std::optional<FeatureMode> parse_feature_mode(std::string_view name);

struct PipelineOptions {
  FeatureMode mode = FeatureMode::kFused;
  bool trim_silence = true;
};

// Audio -> model-ready frame sequence: resampling to 16 kHz, endpoint
// trimming, LLD and/or embedding extraction, then fusion.
class FeatureExtractor {
 public:
  // The embedder weights are required for the modes that use embeddings and
  // must outlive the extractor. Throws kInvalidArgument when missing.
  FeatureExtractor(PipelineOptions options, const NamedTensorStore* embedder_weights);

  FusedSequence extract(const AudioClip& clip) const;
  std::size_t dim() const noexcept { return dim_; }
  const PipelineOptions& options() const noexcept { return options_; }

 private:
  PipelineOptions options_;
  std::unique_ptr<VggishEmbedder> embedder_;
  std::size_t dim_ = 0;
};

}  // namespace ser
