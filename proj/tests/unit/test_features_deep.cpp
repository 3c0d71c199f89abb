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

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ser/features_deep.hpp"
#include "ser/features_lld.hpp"
#include "ser/fusion.hpp"
#include "ser/preprocess.hpp"
#include "test_util.hpp"

using namespace ser;
using testutil::code_of;

namespace {

AudioClip noise_clip(double seconds, std::uint64_t seed) {
  Rng rng(seed);
  return AudioClip{oracle::random_vector(static_cast<std::size_t>(std::lround(seconds * 16000)), rng, -0.3, 0.3),
                   16000};
}

VggishArchitecture toy_arch(std::size_t rows, std::size_t cols, std::vector<std::vector<std::size_t>> blocks,
                            std::vector<std::size_t> fc) {
  VggishArchitecture a;
  a.input_rows = rows;
  a.input_cols = cols;
  a.conv_blocks = std::move(blocks);
  a.fc_dims = std::move(fc);
  return a;
}

// Weights with nonzero biases so ReLU and pool paths are exercised.
NamedTensorStore toy_weights(const VggishArchitecture& arch, std::uint64_t seed) {
  auto w = init_vggish_weights(arch, seed);
  Rng rng(seed + 100);
  for (auto& [name, t] : w) {
    if (name.ends_with("/biases")) {
      for (auto& v : t.data) v = static_cast<float>(rng.uniform(-0.2, 0.2));
    }
  }
  return w;
}

std::vector<std::vector<std::string>> conv_names(const VggishArchitecture& arch) {
  std::vector<std::vector<std::string>> names(arch.conv_blocks.size());
  for (const auto& l : arch.layers()) {
    if (!l.conv) continue;
    const auto block = std::stoul(l.name.substr(4, 1)) - 1;
    names[block].push_back(l.name);
  }
  return names;
}

std::vector<std::string> fc_names(const VggishArchitecture& arch) {
  std::vector<std::string> names;
  for (const auto& l : arch.layers()) {
    if (!l.conv) names.push_back(l.name);
  }
  return names;
}

}  // namespace

TEST_SUITE("features_deep") {

TEST_CASE("patch counts") {
  CHECK(patch_count(0) == 1);
  CHECK(patch_count(95) == 1);
  CHECK(patch_count(96) == 1);
  CHECK(patch_count(191) == 1);
  CHECK(patch_count(192) == 2);
  CHECK(log_mel_patches(noise_clip(1.0, 1)).size() == 1);
  CHECK(log_mel_patches(noise_clip(2.0, 1)).size() == 2);
  CHECK(log_mel_patches(noise_clip(0.5, 1)).size() == 1);
  CHECK(code_of([] { log_mel_patches(AudioClip{{}, 16000}); }) == ErrorCode::kEmptySignal);
}

TEST_CASE("patches hold 64-band log mel of consecutive frames") {
  const auto clip = noise_clip(2.0, 5);
  const auto patches = log_mel_patches(clip);
  const auto window = oracle::hamming(400);
  for (std::size_t p = 0; p < 2; ++p) {
    REQUIRE(patches[p].values.rows() == 96);
    REQUIRE(patches[p].values.cols() == 64);
    for (std::size_t j : {0u, 37u, 95u}) {
      const std::size_t t = 96 * p + j;
      std::vector<double> f(400);
      for (std::size_t i = 0; i < 400; ++i) f[i] = clip.samples[t * 160 + i] * window[i];
      const auto ref = oracle::log_mel(f, 16000, 64);
      for (std::size_t b = 0; b < 64; ++b) CHECK(std::abs(patches[p].values(j, b) - ref[b]) <= 1e-6);
    }
  }
}

TEST_CASE("short clips are reflection padded") {
  const auto clip = noise_clip(0.5, 3);  // 48 frames
  const auto patch = log_mel_patches(clip)[0].values;
  const auto frames = apply_window(frame_signal(clip));
  REQUIRE(frames.n_frames() == 48);
  const MelFilterbank bank(16000, 64);
  auto row = [&](std::size_t t) { return bank.log_energies(frames.frames.row(t)); };
  // 0..47, then 46, 45, ... 1, 0, 1, ...
  const std::pair<std::size_t, std::size_t> expect[] = {{0, 0}, {47, 47}, {48, 46}, {93, 1}, {94, 0}, {95, 1}};
  for (auto [j, t] : expect) {
    const auto r = row(t);
    for (std::size_t b = 0; b < 64; ++b) CHECK(patch(j, b) == r[b]);
  }
}

TEST_CASE("architecture bookkeeping") {
  const auto full = VggishArchitecture::full();
  CHECK(full.flattened_dim() == 6 * 4 * 512);
  CHECK(full.output_dim() == 128);
  const auto layers = full.layers();
  REQUIRE(layers.size() == 9);
  const char* names[] = {"conv1", "conv2", "conv3_1", "conv3_2", "conv4_1", "conv4_2", "fc1_1", "fc1_2", "fc2"};
  for (std::size_t i = 0; i < 9; ++i) CHECK(layers[i].name == names[i]);
  CHECK_FALSE(layers.back().relu);
  CHECK(VggishArchitecture::compact().output_dim() == 128);
}

TEST_CASE("architecture is recovered from weight shapes") {
  const auto arch = VggishArchitecture::compact();
  const auto w = init_vggish_weights(arch, 1);
  const auto back = VggishEmbedder::infer_architecture(w);
  CHECK(back.conv_blocks == arch.conv_blocks);
  CHECK(back.fc_dims == arch.fc_dims);
}

TEST_CASE("zero network embeds to zero") {
  const auto arch = VggishArchitecture::compact();
  auto w = init_vggish_weights(arch, 1);
  for (auto& [_, t] : w) std::fill(t.data.begin(), t.data.end(), 0.0f);
  const VggishEmbedder e(w, arch);
  const auto out = e.embed(log_mel_patches(noise_clip(1.0, 2))[0]);
  REQUIRE(out.size() == 128);
  for (float v : out) CHECK(v == 0.0f);
}

TEST_CASE("toy shapes match the direct-summation oracle") {
  struct Case {
    VggishArchitecture arch;
    std::uint64_t seed;
  };
  const Case cases[] = {
      {toy_arch(4, 4, {{1}, {1}}, {3, 2}), 1},
      {toy_arch(4, 4, {{2}, {3}}, {5, 4}), 2},
      {toy_arch(8, 6, {{2}, {3, 2}}, {6, 3}), 3},
      {toy_arch(16, 12, {{3}, {4}, {4, 5}}, {7, 6, 5}), 4},
      {toy_arch(9, 7, {{2}, {2}}, {4}), 5},  // odd sizes: pooling floors
  };
  for (const auto& c : cases) {
    const auto w = toy_weights(c.arch, c.seed);
    const VggishEmbedder e(w, c.arch);
    Rng rng(c.seed);
    for (int trial = 0; trial < 5; ++trial) {
      const auto patch = oracle::random_matrix(c.arch.input_rows, c.arch.input_cols, rng, -2, 2);
      const auto got = e.embed(patch);
      const auto ref = oracle::embed(patch, w, conv_names(c.arch), fc_names(c.arch));
      REQUIRE(got.size() == ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(got[i] - ref[i]) <= 1e-5);
    }
  }
}

TEST_CASE("relu layers never emit negatives and the embedding is deterministic") {
  const auto arch = VggishArchitecture::compact();
  const auto w = toy_weights(arch, 9);
  const VggishEmbedder e(w, arch);
  const auto patch = log_mel_patches(noise_clip(1.0, 4))[0].values;
  std::size_t observed = 0;
  const auto out = e.embed(patch, [&](std::string_view layer, std::span<const float> v) {
    ++observed;
    if (layer == "fc2") return;
    for (float x : v) CHECK(x >= 0.0f);
  });
  CHECK(observed == arch.layers().size());
  CHECK(e.embed(patch) == out);
}

TEST_CASE("shape errors") {
  const auto arch = VggishArchitecture::compact();
  auto w = init_vggish_weights(arch, 1);
  CHECK(code_of([&] { VggishEmbedder(w, VggishArchitecture::full()); }) == ErrorCode::kShapeMismatch);
  const VggishEmbedder e(w, arch);
  CHECK(code_of([&] { e.embed(Matrix(95, 64)); }) == ErrorCode::kShapeMismatch);
  NamedTensorStore partial;
  for (const auto& [name, t] : w) {
    if (name != "conv3_2/weights") partial.add(name, t.shape, t.data);
  }
  CHECK(code_of([&] { VggishEmbedder(partial, arch); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("utterance embedding rows follow the patches") {
  const auto arch = VggishArchitecture::compact();
  const auto w = toy_weights(arch, 2);
  const VggishEmbedder e(w, arch);
  const auto clip = noise_clip(2.1, 8);
  const auto seq = embed_utterance(clip, e);
  const auto patches = log_mel_patches(clip);
  REQUIRE(seq.n_patches() == 2);
  for (std::size_t p = 0; p < 2; ++p) {
    const auto ref = e.embed(patches[p]);
    for (std::size_t i = 0; i < 128; ++i) CHECK(seq.embeddings(p, i) == ref[i]);
  }
}

}  // TEST_SUITE

TEST_SUITE("fusion") {

TEST_CASE("subsample indices") {
  const auto p0 = subsample_indices(0);
  CHECK(p0.size() == 24);
  for (std::size_t j = 0; j < 24; ++j) CHECK(p0[j] == 4 * j);
  CHECK(p0.back() == 92);
  const auto p1 = subsample_indices(1);
  CHECK(p1.front() == 96);
  CHECK(p1.back() == 188);
  CHECK(static_cast<double>(p0.size()) / kPatchFrames == 0.25);
}

namespace {

LldSequence numbered_llds(std::size_t t, std::size_t d = 17) {
  LldSequence s;
  s.values.resize(t, d);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t c = 0; c < d; ++c) s.values(i, c) = 1000.0 * i + c;
  }
  return s;
}

EmbeddingSequence numbered_embs(std::size_t p, std::size_t d = 128) {
  EmbeddingSequence e;
  e.embeddings.resize(p, d);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t c = 0; c < d; ++c) e.embeddings(i, c) = -(1000.0 * i + c) - 1;
  }
  return e;
}

}  // namespace

TEST_CASE("fused rows are [lld row | patch embedding]") {
  for (auto [t, p] : {std::pair<std::size_t, std::size_t>{96, 1}, {192, 2}, {48, 1}, {250, 2}, {1, 1}}) {
    const auto l = numbered_llds(t);
    const auto e = numbered_embs(p);
    const auto f = fuse_utterance(l, e);
    REQUIRE(f.n_frames() == 24 * p);
    REQUIRE(f.dim() == 145);
    CHECK(f.d_lld == 17);
    for (std::size_t q = 0; q < p; ++q) {
      const auto idx = subsample_indices(q);
      for (std::size_t j = 0; j < 24; ++j) {
        const auto row = f.frames.row(q * 24 + j);
        const std::size_t src = std::min(idx[j], t - 1);
        for (std::size_t c = 0; c < 17; ++c) CHECK(row[c] == l.values(src, c));
        for (std::size_t c = 0; c < 128; ++c) CHECK(row[17 + c] == e.embeddings(q, c));
      }
    }
  }
}

TEST_CASE("padded patch clamps indices to the last frame") {
  const auto f = fuse_utterance(numbered_llds(48), numbered_embs(1));
  for (std::size_t j = 12; j < 24; ++j) CHECK(f.frames(j, 0) == 47000.0);
}

TEST_CASE("zero embedding leaves lld columns bit-identical") {
  Rng rng(3);
  LldSequence l;
  l.values = oracle::random_matrix(100, 17, rng);
  const auto f = fuse_utterance(l, EmbeddingSequence{Matrix(1, 128)});
  for (std::size_t j = 0; j < 24; ++j) {
    for (std::size_t c = 0; c < 17; ++c) CHECK(f.frames(j, c) == l.values(4 * j, c));
  }
}

TEST_CASE("patch mismatch") {
  CHECK(code_of([] { fuse_utterance(numbered_llds(96), numbered_embs(2)); }) == ErrorCode::kPatchMismatch);
  CHECK(code_of([] { fuse_utterance(numbered_llds(200), numbered_embs(1)); }) == ErrorCode::kPatchMismatch);
}

TEST_CASE("single-stream variants share the fused geometry") {
  const auto l = numbered_llds(198);
  const auto e = numbered_embs(2);
  const auto fused = fuse_utterance(l, e);
  const auto only_l = subsample_llds(l);
  const auto only_e = repeat_embeddings(e);
  REQUIRE(only_l.n_frames() == fused.n_frames());
  REQUIRE(only_e.n_frames() == fused.n_frames());
  CHECK(only_l.dim() == 17);
  CHECK(only_e.dim() == 128);
  for (std::size_t r = 0; r < fused.n_frames(); ++r) {
    for (std::size_t c = 0; c < 17; ++c) CHECK(only_l.frames(r, c) == fused.frames(r, c));
    for (std::size_t c = 0; c < 128; ++c) CHECK(only_e.frames(r, c) == fused.frames(r, 17 + c));
  }
}

TEST_CASE("utterance lengths give 24/24/48 fused frames") {
  const auto arch = VggishArchitecture::compact();
  const auto w = init_vggish_weights(arch, 3);
  const VggishEmbedder e(w, arch);
  for (auto [sec, n] : {std::pair<double, std::size_t>{0.5, 24}, {1.0, 24}, {2.0, 48}}) {
    const auto clip = noise_clip(sec, 1);
    const auto f = fuse_utterance(extract_lld_sequence(clip), embed_utterance(clip, e));
    CHECK(f.n_frames() == n);
    CHECK(f.dim() == 145);
  }
}

}  // TEST_SUITE
