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

#include "ser/pipeline.hpp"

#include "ser/error.hpp"
#include "ser/features_lld.hpp"
#include "ser/preprocess.hpp"

namespace ser {

std::string_view feature_mode_name(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kLlds: return "llds";
    case FeatureMode::kVggishs: return "vggishs";
    case FeatureMode::kFused: return "llds+vggishs";
  }
  return "llds+vggishs";
}

std::optional<FeatureMode> parse_feature_mode(std::string_view name) {
  if (name == "llds") return FeatureMode::kLlds;
  if (name == "vggishs") return FeatureMode::kVggishs;
  if (name == "llds+vggishs") return FeatureMode::kFused;
  return std::nullopt;
}

FeatureExtractor::FeatureExtractor(PipelineOptions options,
                                   const NamedTensorStore* embedder_weights)
    : options_(options) {
  std::size_t emb_dim = 0;
  if (options_.mode != FeatureMode::kLlds) {
    if (embedder_weights == nullptr) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(feature_mode_name(options_.mode)) + " mode needs embedder weights");
    }
    embedder_ = std::make_unique<VggishEmbedder>(
        *embedder_weights, VggishEmbedder::infer_architecture(*embedder_weights));
    emb_dim = embedder_->architecture().output_dim();
  }
  switch (options_.mode) {
    case FeatureMode::kLlds: dim_ = lld::kDim; break;
    case FeatureMode::kVggishs: dim_ = emb_dim; break;
    case FeatureMode::kFused: dim_ = lld::kDim + emb_dim; break;
  }
}

FusedSequence FeatureExtractor::extract(const AudioClip& input) const {
  if (input.empty()) throw Error(ErrorCode::kEmptySignal, "empty recording");
  AudioClip clip = input.sample_rate_hz == kCanonicalRateHz ? input
                                                            : resample(input, kCanonicalRateHz);
  if (options_.trim_silence) {
    auto trimmed = detect_endpoints(clip);
    if (!trimmed.no_speech) clip = std::move(trimmed.clip);
  }
  switch (options_.mode) {
    case FeatureMode::kLlds:
      return subsample_llds(extract_lld_sequence(clip));
    case FeatureMode::kVggishs:
      return repeat_embeddings(embed_utterance(clip, *embedder_));
    case FeatureMode::kFused:
      return fuse_utterance(extract_lld_sequence(clip), embed_utterance(clip, *embedder_));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown feature mode");
}

}  // namespace ser
