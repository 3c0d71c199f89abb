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

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ser/cli.hpp"
#include "ser/synth.hpp"
#include "test_util.hpp"

using namespace ser;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text, const fs::path& base = "/base") {
  std::istringstream in(text);
  return parse_run_config(in, base, "test.ini");
}

const char* kMinimal = "[data]\ncorpora = a\n[corpus.a]\nmanifest = a/m.jsonl\n";

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config defaults") {
    const auto c = parse(kMinimal);
    CHECK(c.corpora == std::vector<std::string>{"a"});
    CHECK(c.train_corpora == c.corpora);
    CHECK(c.eval_corpora == c.corpora);
    CHECK(c.manifests.at("a") == fs::path("/base/a/m.jsonl"));
    CHECK(c.features.mode == FeatureMode::kFused);
    CHECK(c.model.fc_dims == std::vector<std::size_t>{256, 256});
    CHECK(c.model.lstm_hidden == 100);
    CHECK(c.model.lstm_layers == 2);
    CHECK(c.model.attn_window == 5);
    CHECK(c.model.n_classes == 4);
    CHECK(c.train.learning_rate == 1e-3);
    CHECK(c.train.clip_norm == 5.0);
    CHECK(c.train.batch_size == 32);
    CHECK(c.out_dir == fs::path("/base/out"));
    CHECK(c.cache_path("a", Split::kDev) == fs::path("/base/out/features/llds+vggishs/a.dev.serf"));
    CHECK(c.checkpoint_path() == fs::path("/base/out/model.ntsr"));
  }

  TEST_CASE("config with every section") {
    const auto c = parse(
        "[data]\ncorpora = a, b\ntrain_corpora = a\neval_corpora = b\n"
        "[corpus.a]\nmanifest = /abs/a.jsonl\n[corpus.b]\nmanifest = b.jsonl\n"
        "[labels]\nclasses = pos, neg\n"
        "[aliases]\ngood = pos\n[aliases.b]\ngood = neg\nmeh = DROP\n"
        "[features]\nmode = llds\ntrim_silence = false\nembedder_weights = w.ntsr\n"
        "[model]\nfc_dims = 32, 16\nlstm_hidden = 8\nlstm_layers = 1\nattn_window = 1\n"
        "[train]\nlearning_rate = 0.01\nbatch_size = 4\nmax_epochs = 7\nclip_norm = 2.5\nstandardize = no\n"
        "[run]\nseed = 99\nout_dir = /tmp/o\nworkers = 3\n");
    CHECK(c.train_corpora == std::vector<std::string>{"a"});
    CHECK(c.eval_corpora == std::vector<std::string>{"b"});
    CHECK(c.manifests.at("a") == fs::path("/abs/a.jsonl"));
    CHECK(c.labels.classes() == std::vector<std::string>{"pos", "neg"});
    CHECK(c.labels.resolve("good", "a") == 0);
    CHECK(c.labels.resolve("good", "b") == 1);
    CHECK_FALSE(c.labels.resolve("meh", "b").has_value());
    CHECK(c.features.mode == FeatureMode::kLlds);
    CHECK_FALSE(c.features.trim_silence);
    CHECK(*c.embedder_weights == fs::path("/base/w.ntsr"));
    CHECK(c.model.fc_dims == std::vector<std::size_t>{32, 16});
    CHECK(c.model.lstm_hidden == 8);
    CHECK(c.model.lstm_layers == 1);
    CHECK(c.model.attn_window == 1);
    CHECK(c.model.n_classes == 2);
    CHECK(c.train.learning_rate == 0.01);
    CHECK(c.train.batch_size == 4);
    CHECK(c.train.max_epochs == 7);
    CHECK(c.train.clip_norm == 2.5);
    CHECK_FALSE(c.train.standardize);
    CHECK(c.train.seed == 99);
    CHECK(c.out_dir == fs::path("/tmp/o"));
    CHECK(c.workers == 3);
  }

  TEST_CASE("config errors") {
    const std::string base = kMinimal;
    CHECK(testutil::code_of([] { parse("[data\ncorpora = a\n"); }) == ErrorCode::kParseError);
    CHECK(testutil::code_of([] { parse("[data]\n"); }) == ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([] { parse("[data]\ncorpora = a\n"); }) == ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] { parse(base + "[features]\nmode = mfcc\n"); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] { parse(base + "[model]\nattn_window = 4\n"); }) == ErrorCode::kEvenWindow);
    CHECK(testutil::code_of([&] { parse(base + "[model]\nlstm_hidden = ten\n"); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] { parse(base + "[model]\nfc_dims = 8, 0\n"); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] { parse(base + "[train]\nbatch_size = -2\n"); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] { parse(base + "[train]\nstandardize = maybe\n"); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] { parse(base + "[train]\nclip_norm = 0\n"); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] { parse(base + "[run]\nworkers = 0\n"); }) == ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] { parse(base + "[aliases]\nx = nothing\n"); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([&] {
            parse("[data]\ncorpora = a\ntrain_corpora = z\n[corpus.a]\nmanifest = m\n");
          }) == ErrorCode::kInvalidArgument);
    CHECK(testutil::code_of([] { load_run_config("/nonexistent/run.ini"); }) == ErrorCode::kIoError);
  }

  TEST_CASE("exit codes") {
    CHECK(exit_code_for(Error(ErrorCode::kInvalidArgument, "")) == kExitUsage);
    CHECK(exit_code_for(Error(ErrorCode::kEvenWindow, "")) == kExitUsage);
    CHECK(exit_code_for(Error(ErrorCode::kNumericFailure, "")) == kExitNumeric);
    CHECK(exit_code_for(Error(ErrorCode::kIoError, "")) == kExitData);
    CHECK(exit_code_for(Error(ErrorCode::kMalformedHeader, "")) == kExitData);
  }

  TEST_CASE("extract caches every mode with one geometry and survives missing audio") {
    const auto dir = testutil::scratch_dir("cli_extract");
    SynthCorpusSpec spec;
    spec.corpus = "c";
    spec.language = {"en", 1.0, 0.6, {"angry", "happy", "sad", "neutral"}};
    spec.n_train = 4;
    spec.n_test = 2;
    spec.lead_silence_s = 0.0;
    spec.duration_s = 1.0;
    spec.seed = 3;
    auto records = write_synth_corpus(spec, dir / "c");
    records.push_back({"ghost", "ghost.wav", "c", "en", "happy", Split::kTrain});
    records.push_back({"gone", "x.wav", "c", "en", "surprise", Split::kTrain});
    write_manifest(records, dir / "c" / "manifest.jsonl");
    save_named_tensors(init_vggish_weights(VggishArchitecture::compact(), 5), dir / "emb.ntsr");

    std::map<std::string, std::size_t> widths;
    for (const char* mode : {"llds", "vggishs", "llds+vggishs"}) {
      std::ofstream(dir / "run.ini", std::ios::trunc)
          << "[data]\ncorpora = c\n[corpus.c]\nmanifest = c/manifest.jsonl\n"
          << "[features]\nmode = " << mode << "\nembedder_weights = emb.ntsr\n"
          << "[run]\nworkers = 2\n";
      const auto config = load_run_config(dir / "run.ini");
      std::ostringstream log;
      const auto summary = cmd_extract(config, log);
      CHECK(summary.written == 6);
      CHECK(summary.failed == 1);
      CHECK(summary.dropped == 1);
      CHECK(log.str().find("error: ghost") != std::string::npos);
      const auto train = read_feature_cache(config.cache_path("c", Split::kTrain));
      const auto test = read_feature_cache(config.cache_path("c", Split::kTest));
      REQUIRE(train.size() == 4);
      REQUIRE(test.size() == 2);
      CHECK(train[1].id == "c_train_0001");
      CHECK(train[1].label_index == 1);
      CHECK_FALSE(fs::exists(config.cache_path("c", Split::kDev)));
      for (const auto& e : train) CHECK(e.frames.rows() == 24);
      widths[mode] = train[0].frames.cols();
    }
    CHECK(widths["llds"] == 17);
    CHECK(widths["vggishs"] == 128);
    CHECK(widths["llds+vggishs"] == 145);
  }

  TEST_CASE("fused mode without embedder weights is a usage error") {
    const auto c = parse(kMinimal);
    std::ostringstream log;
    const auto code = testutil::code_of([&] { cmd_extract(c, log); });
    CHECK(code == ErrorCode::kInvalidArgument);
    CHECK(exit_code_for(Error(code, "")) == kExitUsage);
  }

  TEST_CASE("synth, extract, train, eval and predict end to end") {
    const auto dir = testutil::scratch_dir("cli_e2e");
    SynthOptions so;
    so.out_dir = dir;
    so.seed = 4;
    so.n_train_large = 24;
    so.n_train_small = 12;
    so.n_dev = 4;
    so.n_test = 8;
    std::ostringstream log;
    cmd_synth(so, log);
    REQUIRE(fs::exists(dir / "run.ini"));
    REQUIRE(fs::exists(dir / "embedder.ntsr"));

    auto config = load_run_config(dir / "run.ini");
    CHECK(config.features.mode == FeatureMode::kFused);
    config.model.fc_dims = {32, 32};
    config.model.lstm_hidden = 12;
    config.train.max_epochs = 12;
    config.train.batch_size = 8;
    config.train.learning_rate = 3e-3;
    const auto summary = cmd_extract(config, log);
    CHECK(summary.failed == 0);
    CHECK(summary.written == 24 + 12 + 2 * (4 + 8));

    const auto result = cmd_train(config, config.checkpoint_path(), log);
    CHECK(fs::exists(config.checkpoint_path()));
    const auto train_log = read_text(config.out_dir / "train_log.jsonl");
    std::istringstream lines(train_log);
    std::string first;
    std::getline(lines, first);
    const auto j = nlohmann::json::parse(first);
    CHECK(j.at("epoch") == 1);
    CHECK(j.contains("dev_ua"));
    CHECK(result.log.size() == 12);

    const auto reports = cmd_eval(config, {config.checkpoint_path()}, log);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].overall.n_samples == 16);
    CHECK(reports[0].by_corpus.size() == 2);
    CHECK(reports[0].by_language.count("zh") == 1);
    CHECK(fs::exists(config.out_dir / "eval_report.json"));
    CHECK(fs::exists(config.out_dir / "eval_report.txt"));
    CHECK(read_text(config.out_dir / "comparison.txt").find("model") != std::string::npos);
    const auto json = nlohmann::json::parse(read_text(config.out_dir / "eval_report.json"));
    CHECK(json.at("overall").at("n_samples") == 16);

    // A converged toy model labels its own training utterances.
    const auto records = load_manifest(dir / "synth_a" / "manifest.jsonl");
    std::size_t hits = 0, tried = 0;
    for (const auto& r : records) {
      if (r.split != Split::kTrain || tried == 8) continue;
      ++tried;
      const auto p = cmd_predict(config, config.checkpoint_path(), dir / "synth_a" / r.audio_path);
      double total = 0.0;
      for (const auto& [_, prob] : p.probabilities) total += prob;
      CHECK(total == doctest::Approx(1.0));
      CHECK(p.probabilities.size() == 4);
      hits += p.label == r.label ? 1 : 0;
    }
    CHECK(hits == tried);

    CHECK(testutil::code_of([&] { cmd_predict(config, dir / "missing.ntsr", dir / "x.wav"); }) ==
          ErrorCode::kIoError);
  }

  TEST_CASE("train without caches reports missing data") {
    const auto dir = testutil::scratch_dir("cli_nocache");
    std::ofstream(dir / "run.ini") << kMinimal << "[features]\nmode = llds\n";
    const auto config = load_run_config(dir / "run.ini");
    std::ostringstream log;
    const auto code = testutil::code_of([&] { cmd_train(config, config.checkpoint_path(), log); });
    CHECK(code == ErrorCode::kIoError);
    CHECK(exit_code_for(Error(code, "")) == kExitData);
  }
}
