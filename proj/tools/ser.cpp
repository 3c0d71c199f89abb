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

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ser/cli.hpp"
#include "ser/simd.hpp"

namespace {

namespace fs = std::filesystem;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> feature_mode;
  std::optional<std::size_t> attn_window;
  std::optional<std::string> out;
};

ser::RunConfig resolve_config(const GlobalFlags& flags) {
  if (flags.config.empty()) {
    throw ser::Error(ser::ErrorCode::kInvalidArgument, "--config is required");
  }
  ser::RunConfig config = ser::load_run_config(flags.config);
  if (flags.seed) config.train.seed = *flags.seed;
  if (flags.workers) {
    if (*flags.workers == 0) throw ser::Error(ser::ErrorCode::kInvalidArgument, "--workers must be >= 1");
    config.workers = *flags.workers;
  }
  if (flags.feature_mode) {
    auto mode = ser::parse_feature_mode(*flags.feature_mode);
    if (!mode) {
      throw ser::Error(ser::ErrorCode::kInvalidArgument,
                       "--feature-mode must be llds, vggishs or llds+vggishs");
    }
    config.features.mode = *mode;
  }
  if (flags.attn_window) {
    config.model.attn_window = *flags.attn_window;
    config.model.validate();
  }
  if (flags.out) config.out_dir = *flags.out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech emotion recognition: feature fusion, BiLSTM local attention, WA/UA"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config, "Run configuration (INI)");
  app.add_option("--seed", flags.seed, "Override [run] seed");
  app.add_option("--workers", flags.workers, "Extraction threads");
  app.add_option("--feature-mode", flags.feature_mode, "llds | vggishs | llds+vggishs");
  app.add_option("--attn-window", flags.attn_window, "Local attention window L (odd)");
  app.add_option("--out", flags.out, "Output directory");

  auto* extract = app.add_subcommand("extract", "Compute feature caches for every corpus and split");
  auto* train = app.add_subcommand("train", "Train the classifier on cached features");
  std::string train_checkpoint;
  train->add_option("--checkpoint", train_checkpoint, "Checkpoint to write (default <out>/model.ntsr)");
  auto* eval = app.add_subcommand("eval", "Evaluate checkpoints on the test splits");
  std::vector<std::string> eval_checkpoints;
  eval->add_option("--checkpoint", eval_checkpoints, "Checkpoint(s); repeat to build a comparison table");
  auto* predict = app.add_subcommand("predict", "Classify one WAV file");
  std::string predict_checkpoint;
  std::string wav;
  predict->add_option("--checkpoint", predict_checkpoint, "Checkpoint (default <out>/model.ntsr)");
  predict->add_option("wav", wav, "Recording to classify")->required();
  auto* synth = app.add_subcommand("synth", "Generate synthetic corpora and a run config");
  ser::SynthOptions synth_options;
  bool no_embedder = false;
  synth->add_option("--n-train-large", synth_options.n_train_large, "Train utterances, corpus synth_a");
  synth->add_option("--n-train-small", synth_options.n_train_small, "Train utterances, corpus synth_b");
  synth->add_option("--n-dev", synth_options.n_dev, "Dev utterances per corpus");
  synth->add_option("--n-test", synth_options.n_test, "Test utterances per corpus");
  synth->add_flag("--no-embedder", no_embedder, "Skip the random embedder; config uses llds");
  synth->add_flag("--full-embedder", synth_options.full_embedder, "Full-size embedder weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return ser::kExitUsage;
  }

  try {
    if (*synth) {
      if (flags.out) synth_options.out_dir = *flags.out;
      if (flags.seed) synth_options.seed = *flags.seed;
      synth_options.write_embedder = !no_embedder;
      ser::cmd_synth(synth_options, std::cout);
      return ser::kExitOk;
    }
    const ser::RunConfig config = resolve_config(flags);
    std::clog << "kernels: " << ser::simd::isa_name(ser::simd::active_isa()) << "\n";
    if (*extract) {
      const auto summary = ser::cmd_extract(config, std::clog);
      return summary.failed > 0 ? ser::kExitData : ser::kExitOk;
    }
    if (*train) {
      const fs::path ckpt = train_checkpoint.empty() ? config.checkpoint_path() : fs::path(train_checkpoint);
      ser::cmd_train(config, ckpt, std::clog);
      return ser::kExitOk;
    }
    if (*eval) {
      std::vector<fs::path> ckpts(eval_checkpoints.begin(), eval_checkpoints.end());
      if (ckpts.empty()) ckpts.push_back(config.checkpoint_path());
      ser::cmd_eval(config, ckpts, std::cout);
      return ser::kExitOk;
    }
    if (*predict) {
      const fs::path ckpt = predict_checkpoint.empty() ? config.checkpoint_path() : fs::path(predict_checkpoint);
      const auto p = ser::cmd_predict(config, ckpt, wav);
      std::cout << p.label << "\n";
      for (const auto& [name, prob] : p.probabilities) {
        std::cout << name << " " << std::fixed << std::setprecision(4) << prob << "\n";
      }
      return ser::kExitOk;
    }
  } catch (const ser::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ser::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ser::kExitData;
  }
  return ser::kExitUsage;
}
