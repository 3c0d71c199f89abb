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

#include "ser/corpus.hpp"

#include <array>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "ser/binary_io.hpp"
#include "ser/error.hpp"
#include "ser/tensor_store.hpp"

namespace ser {
namespace {

constexpr std::array<const char*, 6> kManifestFields = {"id",       "audio_path", "corpus",
                                                        "language", "label",      "split"};

Error ManifestError(std::string_view origin, std::size_t line, const std::string& what) {
  return Error(ErrorCode::kParseError,
               std::string(origin) + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::vector<UtteranceRecord> parse_manifest(std::istream& in, std::string_view origin) {
  std::vector<UtteranceRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ManifestError(origin, line_no, e.what());
    }
    if (!obj.is_object()) throw ManifestError(origin, line_no, "record is not an object");
    for (const char* field : kManifestFields) {
      if (!obj.contains(field) || !obj[field].is_string()) {
        throw ManifestError(origin, line_no, std::string("missing string field \"") + field + "\"");
      }
    }
    UtteranceRecord rec;
    rec.id = obj["id"].get<std::string>();
    rec.audio_path = obj["audio_path"].get<std::string>();
    rec.corpus = obj["corpus"].get<std::string>();
    rec.language = obj["language"].get<std::string>();
    rec.label = obj["label"].get<std::string>();
    const auto split = parse_split(obj["split"].get<std::string>());
    if (!split) {
      throw ManifestError(origin, line_no,
                          "split must be train, dev or test, got \"" +
                              obj["split"].get<std::string>() + "\"");
    }
    rec.split = *split;
    if (!seen.insert(rec.id).second) {
      throw Error(ErrorCode::kDuplicateId, std::string(origin) + ":" + std::to_string(line_no) +
                                               ": duplicate id " + rec.id);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open manifest " + path.string());
  return parse_manifest(in, path.string());
}

void write_manifest(std::span<const UtteranceRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write manifest " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["id"] = r.id;
    obj["audio_path"] = r.audio_path;
    obj["corpus"] = r.corpus;
    obj["language"] = r.language;
    obj["label"] = r.label;
    obj["split"] = std::string(split_name(r.split));
    out << obj.dump() << '\n';
  }
}

LabelMap::LabelMap(std::vector<std::string> classes) : classes_(std::move(classes)) {
  if (classes_.empty()) throw Error(ErrorCode::kInvalidArgument, "label map needs a class");
  std::set<std::string> unique(classes_.begin(), classes_.end());
  if (unique.size() != classes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate class name");
  }
}

LabelMap LabelMap::default_four_class() {
  LabelMap map({"angry", "happy", "sad", "neutral"});
  const std::pair<const char*, const char*> aliases[] = {
      {"anger", "angry"}, {"ang", "angry"},   {"happiness", "happy"}, {"hap", "happy"},
      {"sadness", "sad"}, {"neu", "neutral"},
  };
  for (const auto& [raw, target] : aliases) map.add_alias("", raw, std::string(target));
  map.add_alias("", "surprise", std::nullopt);
  map.add_alias("", "surprised", std::nullopt);
  return map;
}

void LabelMap::add_alias(const std::string& corpus, const std::string& raw,
                         std::optional<std::string> target) {
  if (target && !index_of(*target)) {
    throw Error(ErrorCode::kInvalidArgument, "alias target \"" + *target + "\" is not a class");
  }
  aliases_[corpus][raw] = std::move(target);
}

std::optional<std::size_t> LabelMap::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> LabelMap::resolve(const std::string& raw,
                                             const std::string& corpus) const {
  for (const std::string& table : {corpus, std::string()}) {
    auto t = aliases_.find(table);
    if (t == aliases_.end()) continue;
    auto a = t->second.find(raw);
    if (a == t->second.end()) continue;
    if (!a->second) return std::nullopt;
    return index_of(*a->second);
  }
  if (auto idx = index_of(raw)) return idx;
  throw Error(ErrorCode::kUnmappedLabel,
              "label \"" + raw + "\" of corpus \"" + corpus + "\" has no mapping");
}

std::vector<LabeledRecord> unify_labels(std::span<const UtteranceRecord> records,
                                        const LabelMap& map) {
  std::vector<LabeledRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (auto idx = map.resolve(r.label, r.corpus)) out.push_back({r, *idx});
  }
  return out;
}

std::vector<std::uint8_t> encode_feature_cache(std::span<const FeatureCacheEntry> entries) {
  const std::size_t dim = entries.empty() ? 0 : entries.front().frames.cols();
  binary::Writer w;
  w.tag("SERF");
  w.u32(kFeatureCacheVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  w.u32(static_cast<std::uint32_t>(dim));
  for (const auto& e : entries) {
    if (e.frames.cols() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "entry " + e.id + " has dim " +
                                                     std::to_string(e.frames.cols()) +
                                                     ", cache dim is " + std::to_string(dim));
    }
    w.short_string(e.id);
    w.short_string(e.corpus);
    w.short_string(e.language);
    w.u32(e.label_index);
    w.u32(static_cast<std::uint32_t>(e.frames.rows()));
    for (float v : e.frames.data()) w.f32(v);
  }
  return w.bytes();
}

std::vector<FeatureCacheEntry> decode_feature_cache(std::span<const std::uint8_t> bytes) {
  binary::Reader r(bytes);
  if (bytes.size() < 4 || r.tag() != "SERF") {
    throw Error(ErrorCode::kBadMagic, "not a feature cache");
  }
  const std::uint32_t version = r.u32();
  if (version != kFeatureCacheVersion) {
    throw Error(ErrorCode::kUnsupportedFormat, "feature cache version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  std::vector<FeatureCacheEntry> entries(count);
  for (auto& e : entries) {
    e.id = r.short_string();
    e.corpus = r.short_string();
    e.language = r.short_string();
    e.label_index = r.u32();
    const std::uint32_t n_frames = r.u32();
    const std::size_t n = static_cast<std::size_t>(n_frames) * dim;
    r.require(n * 4);
    e.frames.resize(n_frames, dim);
    for (auto& v : e.frames.data()) v = r.f32();
  }
  if (!r.at_end()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(r.remaining()) + " bytes beyond the declared entries");
  }
  return entries;
}

void write_feature_cache(std::span<const FeatureCacheEntry> entries,
                         const std::filesystem::path& path) {
  write_file_bytes(path, encode_feature_cache(entries));
}

std::vector<FeatureCacheEntry> read_feature_cache(const std::filesystem::path& path) {
  return decode_feature_cache(read_file_bytes(path));
}

}  // namespace ser
