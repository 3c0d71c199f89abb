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

#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "ser/corpus.hpp"
#include "ser/random.hpp"
#include "ser/tensor_store.hpp"
#include "test_util.hpp"

using namespace ser;

namespace {

std::string line(const std::string& id, const std::string& label, const std::string& split = "train",
                 const std::string& corpus = "c1") {
  return R"({"id":")" + id + R"(","audio_path":")" + id + R"(.wav","corpus":")" + corpus +
         R"(","language":"en","label":")" + label + R"(","split":")" + split + "\"}\n";
}

UtteranceRecord rec(std::string id, std::string corpus, std::string label) {
  return {std::move(id), "", std::move(corpus), "xx", std::move(label), Split::kTrain};
}

// Little-endian byte builder written against the documented layouts.
struct Bytes {
  std::vector<std::uint8_t> b;
  void raw(const char* s) { b.insert(b.end(), s, s + std::strlen(s)); }
  void u8(std::uint8_t v) { b.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    u32(v);
  }
  void str(const std::string& s) {
    u16(static_cast<std::uint16_t>(s.size()));
    b.insert(b.end(), s.begin(), s.end());
  }
};

std::vector<FeatureCacheEntry> random_entries(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureCacheEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureCacheEntry e;
    e.id = "utt" + std::to_string(i);
    e.corpus = i % 2 ? "b" : "a";
    e.language = i % 2 ? "zh" : "en";
    e.label_index = static_cast<std::uint32_t>(i % 4);
    e.frames = MatrixF(1 + rng.below(30), dim);
    for (auto& v : e.frames.data()) v = static_cast<float>(rng.normal());
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("manifest records in file order") {
    std::istringstream in(line("a", "angry") + "\n" + line("b", "sad", "dev") + line("c", "neu", "test"));
    const auto r = parse_manifest(in);
    REQUIRE(r.size() == 3);
    CHECK(r[0].id == "a");
    CHECK(r[1].split == Split::kDev);
    CHECK(r[2].split == Split::kTest);
    CHECK(r[2].audio_path == "c.wav");
    CHECK(r[2].label == "neu");
  }

  TEST_CASE("manifest errors carry the line number") {
    std::istringstream missing(line("a", "angry") +
                               R"({"id":"b","audio_path":"b.wav","corpus":"c","language":"en","split":"train"})"
                               "\n");
    try {
      parse_manifest(missing, "m.jsonl");
      FAIL("accepted a record without label");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
      CHECK(std::string(e.what()).find("m.jsonl:2") != std::string::npos);
    }
    std::istringstream bad_json("{not json\n");
    CHECK(testutil::code_of([&] { parse_manifest(bad_json); }) == ErrorCode::kParseError);
    std::istringstream bad_split(line("a", "angry", "holdout"));
    CHECK(testutil::code_of([&] { parse_manifest(bad_split); }) == ErrorCode::kParseError);
    std::istringstream dup(line("a", "angry") + line("a", "sad"));
    CHECK(testutil::code_of([&] { parse_manifest(dup); }) == ErrorCode::kDuplicateId);
    CHECK(testutil::code_of([] { load_manifest("/nonexistent/manifest.jsonl"); }) == ErrorCode::kIoError);
  }

  TEST_CASE("manifest write and load round-trip") {
    const auto dir = testutil::scratch_dir("manifest");
    std::vector<UtteranceRecord> records = {rec("x", "c", "angry"), rec("y", "c", "happy")};
    records[1].split = Split::kTest;
    records[1].audio_path = "sub/y.wav";
    write_manifest(records, dir / "m.jsonl");
    CHECK(load_manifest(dir / "m.jsonl") == records);
  }

  TEST_CASE("label unification") {
    const auto map = LabelMap::default_four_class();
    const std::vector<UtteranceRecord> records = {rec("1", "c", "surprise"), rec("2", "c", "happiness"),
                                                  rec("3", "c", "sad"), rec("4", "c", "ang")};
    const auto out = unify_labels(records, map);
    REQUIRE(out.size() == 3);
    CHECK(out[0].record.id == "2");
    CHECK(out[0].class_index == *map.index_of("happy"));
    CHECK(out[1].class_index == 2);
    CHECK(out[2].class_index == 0);
    const std::vector<UtteranceRecord> fear = {rec("5", "c", "fear")};
    CHECK(testutil::code_of([&] { unify_labels(fear, map); }) == ErrorCode::kUnmappedLabel);
  }

  TEST_CASE("corpus aliases take precedence over shared ones") {
    LabelMap map({"pos", "neg"});
    map.add_alias("", "good", "pos");
    map.add_alias("b", "good", "neg");
    map.add_alias("b", "meh", std::nullopt);
    CHECK(map.resolve("good", "a") == 0);
    CHECK(map.resolve("good", "b") == 1);
    CHECK_FALSE(map.resolve("meh", "b").has_value());
    CHECK(map.resolve("neg", "a") == 1);
    CHECK(testutil::code_of([&] { map.resolve("meh", "a"); }) == ErrorCode::kUnmappedLabel);
    CHECK(testutil::code_of([&] { map.add_alias("", "x", "other"); }) == ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([] { LabelMap({"a", "a"}); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("unified indices stay below the class count") {
    const auto map = LabelMap::default_four_class();
    const char* labels[] = {"angry", "happy", "sad", "neutral", "anger", "hap", "neu", "surprised"};
    Rng rng(3);
    std::vector<UtteranceRecord> records;
    for (int i = 0; i < 200; ++i) records.push_back(rec(std::to_string(i), "c", labels[rng.below(8)]));
    for (const auto& r : unify_labels(records, map)) CHECK(r.class_index < 4);
  }

  TEST_CASE("merge and shuffle") {
    std::vector<UtteranceRecord> a, b;
    for (int i = 0; i < 100; ++i) a.push_back(rec("a" + std::to_string(i), "A", "angry"));
    for (int i = 0; i < 50; ++i) b.push_back(rec("b" + std::to_string(i), "B", "sad"));
    const auto m1 = merge_and_shuffle<UtteranceRecord>({a, b}, 1);
    const auto m1again = merge_and_shuffle<UtteranceRecord>({a, b}, 1);
    const auto m2 = merge_and_shuffle<UtteranceRecord>({a, b}, 2);
    CHECK(m1.size() == 150);
    CHECK(m1 == m1again);
    CHECK_FALSE(m1 == m2);
    std::set<std::string> ids;
    std::size_t from_b = 0;
    for (const auto& r : m1) {
      ids.insert(r.id);
      from_b += r.corpus == "B" ? 1 : 0;
    }
    CHECK(ids.size() == 150);
    CHECK(from_b == 50);
  }

  TEST_CASE("feature cache round-trip is bit-exact") {
    const auto entries = random_entries(10, 145, 4);
    const auto bytes = encode_feature_cache(entries);
    CHECK(decode_feature_cache(bytes) == entries);
    CHECK(encode_feature_cache(decode_feature_cache(bytes)) == bytes);
    const auto dir = testutil::scratch_dir("cache");
    write_feature_cache(entries, dir / "c.serf");
    CHECK(read_feature_cache(dir / "c.serf") == entries);
    const std::vector<FeatureCacheEntry> none;
    CHECK(decode_feature_cache(encode_feature_cache(none)).empty());
  }

  TEST_CASE("feature cache layout") {
    std::vector<FeatureCacheEntry> one(1);
    one[0].id = "u";
    one[0].corpus = "c";
    one[0].language = "en";
    one[0].label_index = 3;
    one[0].frames = MatrixF(1, 2);
    one[0].frames(0, 0) = 1.5f;
    one[0].frames(0, 1) = -2.0f;
    Bytes x;
    x.raw("SERF");
    x.u32(1);
    x.u32(1);
    x.u32(2);
    x.str("u");
    x.str("c");
    x.str("en");
    x.u32(3);
    x.u32(1);
    x.f32(1.5f);
    x.f32(-2.0f);
    CHECK(encode_feature_cache(one) == x.b);
  }

  TEST_CASE("feature cache errors") {
    auto mixed = random_entries(2, 145, 5);
    mixed[1].frames = MatrixF(3, 17);
    CHECK(testutil::code_of([&] { encode_feature_cache(mixed); }) == ErrorCode::kDimensionMismatch);

    const auto bytes = encode_feature_cache(random_entries(3, 8, 6));
    for (std::size_t cut : {bytes.size() - 1, bytes.size() / 2, std::size_t{10}}) {
      const std::vector<std::uint8_t> shorter(bytes.begin(), bytes.begin() + static_cast<long>(cut));
      CHECK(testutil::code_of([&] { decode_feature_cache(shorter); }) == ErrorCode::kTruncatedFile);
    }
    auto magic = bytes;
    magic[0] = 'X';
    CHECK(testutil::code_of([&] { decode_feature_cache(magic); }) == ErrorCode::kBadMagic);
    const std::vector<std::uint8_t> tiny = {'S', 'E'};
    CHECK(testutil::code_of([&] { decode_feature_cache(tiny); }) == ErrorCode::kBadMagic);
    auto version = bytes;
    version[4] = 9;
    CHECK(testutil::code_of([&] { decode_feature_cache(version); }) == ErrorCode::kUnsupportedFormat);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK(testutil::code_of([&] { decode_feature_cache(trailing); }) == ErrorCode::kDimensionMismatch);
    CHECK(testutil::code_of([] { read_feature_cache("/nonexistent/x.serf"); }) == ErrorCode::kIoError);
  }
}

TEST_SUITE("tensor_store") {
  TEST_CASE("named tensors round-trip bit-exactly") {
    NamedTensorStore s;
    Rng rng(7);
    std::vector<float> w(3 * 4);
    for (auto& v : w) v = static_cast<float>(rng.normal());
    s.add("layer/weights", {3, 4}, w);
    s.add("layer/biases", {3}, {0.5f, -0.0f, 1e-30f});
    s.add("scalar", {}, {42.0f});
    const auto dir = testutil::scratch_dir("ntsr");
    save_named_tensors(s, dir / "w.ntsr");
    const auto back = load_named_tensors(dir / "w.ntsr");
    CHECK(back == s);
    CHECK(encode_named_tensors(back) == read_file_bytes(dir / "w.ntsr"));
    CHECK(std::signbit(back.at("layer/biases").data[1]));
  }

  TEST_CASE("empty store is a valid file") {
    const auto bytes = encode_named_tensors(NamedTensorStore{});
    Bytes x;
    x.raw("NTSR");
    x.u32(1);
    x.u32(0);
    CHECK(bytes == x.b);
    CHECK(decode_named_tensors(bytes).empty());
  }

  TEST_CASE("container layout") {
    NamedTensorStore s;
    s.add("ab", {2, 1}, {1.0f, 2.0f});
    Bytes x;
    x.raw("NTSR");
    x.u32(1);
    x.u32(1);
    x.str("ab");
    x.u8(2);
    x.u32(2);
    x.u32(1);
    x.f32(1.0f);
    x.f32(2.0f);
    CHECK(encode_named_tensors(s) == x.b);
  }

  TEST_CASE("container errors") {
    Bytes dup;
    dup.raw("NTSR");
    dup.u32(1);
    dup.u32(2);
    for (int i = 0; i < 2; ++i) {
      dup.str("w");
      dup.u8(1);
      dup.u32(1);
      dup.f32(1.0f);
    }
    CHECK(testutil::code_of([&] { decode_named_tensors(dup.b); }) == ErrorCode::kDuplicateName);

    NamedTensorStore s;
    s.add("w", {4}, {1, 2, 3, 4});
    const auto bytes = encode_named_tensors(s);
    for (std::size_t cut = 4; cut < bytes.size(); ++cut) {
      const std::vector<std::uint8_t> shorter(bytes.begin(), bytes.begin() + static_cast<long>(cut));
      CHECK(testutil::code_of([&] { decode_named_tensors(shorter); }) == ErrorCode::kTruncatedFile);
    }
    auto magic = bytes;
    magic[3] = 'Q';
    CHECK(testutil::code_of([&] { decode_named_tensors(magic); }) == ErrorCode::kBadMagic);
    auto version = bytes;
    version[4] = 2;
    CHECK(testutil::code_of([&] { decode_named_tensors(version); }) == ErrorCode::kUnsupportedFormat);
    auto trailing = bytes;
    trailing.push_back(7);
    CHECK(testutil::code_of([&] { decode_named_tensors(trailing); }) == ErrorCode::kShapeMismatch);
    CHECK(testutil::code_of([] { load_named_tensors("/nonexistent/w.ntsr"); }) == ErrorCode::kIoError);
  }

  TEST_CASE("store invariants") {
    NamedTensorStore s;
    s.add("a", {2}, {1, 2});
    CHECK(testutil::code_of([&] { s.add("a", {1}, {1}); }) == ErrorCode::kDuplicateName);
    CHECK(testutil::code_of([&] { s.add("b", {3}, {1, 2}); }) == ErrorCode::kShapeMismatch);
    CHECK(testutil::code_of([&] { s.expect("a", {1, 2}); }) == ErrorCode::kShapeMismatch);
    CHECK(testutil::code_of([&] { s.at("missing"); }) == ErrorCode::kShapeMismatch);
    CHECK(s.total_elements() == 2);
  }
}
