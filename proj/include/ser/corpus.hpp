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
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ser/matrix.hpp"
#include "ser/random.hpp"

namespace ser {

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split split);
std::optional<Split> parse_split(std::string_view name);

struct UtteranceRecord {
  std::string id;
  std::string audio_path;
  std::string corpus;
  std::string language;
  std::string label;
  Split split = Split::kTrain;

  bool operator==(const UtteranceRecord&) const = default;
};

// JSON-lines manifest, one object per line with id, audio_path, corpus,
// language, label and split. Blank lines are skipped. Relative audio paths
// are kept as written. Throws kParseError (with the 1-based line) or
// kDuplicateId.
std::vector<UtteranceRecord> parse_manifest(std::istream& in, std::string_view origin = "manifest");
std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path);
void write_manifest(std::span<const UtteranceRecord> records, const std::filesystem::path& path);

// Ordered class set plus alias tables resolving raw corpus labels. An alias
// target of nullopt means DROP. Lookup order: the record's corpus table, the
// shared table, then the class names themselves.
class LabelMap {
 public:
  explicit LabelMap(std::vector<std::string> classes);

  // {angry, happy, sad, neutral} with common spellings and DROP for the
  // classes outside that set.
  static LabelMap default_four_class();

  // corpus "" targets the shared table. Throws kInvalidArgument when the
  // target is not a class.
  void add_alias(const std::string& corpus, const std::string& raw,
                 std::optional<std::string> target);

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t n_classes() const noexcept { return classes_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  // Class index, or nullopt for DROP. Throws kUnmappedLabel.
  std::optional<std::size_t> resolve(const std::string& raw, const std::string& corpus) const;

 private:
  std::vector<std::string> classes_;
  std::map<std::string, std::map<std::string, std::optional<std::string>>> aliases_;
};

struct LabeledRecord {
  UtteranceRecord record;
  std::size_t class_index = 0;
};

// Drops records whose label resolves to DROP; tags the rest.
std::vector<LabeledRecord> unify_labels(std::span<const UtteranceRecord> records,
                                        const LabelMap& map);

template <typename T>
void shuffle_in_place(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// Concatenation followed by a seeded Fisher-Yates permutation.
template <typename T>
std::vector<T> merge_and_shuffle(const std::vector<std::vector<T>>& corpora, std::uint64_t seed) {
  std::vector<T> merged;
  for (const auto& c : corpora) merged.insert(merged.end(), c.begin(), c.end());
  Rng rng(seed);
  shuffle_in_place(merged, rng);
  return merged;
}

struct FeatureCacheEntry {
  std::string id;
  std::string corpus;
  std::string language;
  std::uint32_t label_index = 0;
  MatrixF frames;  // n_frames x dim

  bool operator==(const FeatureCacheEntry&) const = default;
};

// "SERF", u32 version, u32 entry count, u32 dim; per entry the id, corpus and
// language as u16-length strings, u32 label index, u32 n_frames, then
// row-major f32 frames. Little-endian throughout.
inline constexpr std::uint32_t kFeatureCacheVersion = 1;

// Throws kDimensionMismatch for mixed widths.
std::vector<std::uint8_t> encode_feature_cache(std::span<const FeatureCacheEntry> entries);
// Throws kBadMagic, kTruncatedFile, kDimensionMismatch.
std::vector<FeatureCacheEntry> decode_feature_cache(std::span<const std::uint8_t> bytes);

void write_feature_cache(std::span<const FeatureCacheEntry> entries,
                         const std::filesystem::path& path);
std::vector<FeatureCacheEntry> read_feature_cache(const std::filesystem::path& path);

}  // namespace ser
