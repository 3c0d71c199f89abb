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

#include "ser/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ser/audio_io.hpp"
#include "ser/features_deep.hpp"
#include "ser/synth.hpp"
#include "ser/tensor_store.hpp"

namespace ser {
namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

// Section names contain dots, so paths use '/'.
pt::ptree::path_type key(const std::string& section, const std::string& name) {
  return pt::ptree::path_type(section + "/" + name, '/');
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Error bad_value(const std::string& section, const std::string& name, const std::string& what) {
  return Error(ErrorCode::kInvalidArgument, "[" + section + "] " + name + ": " + what);
}

template <typename T>
T get_or(const pt::ptree& tree, const std::string& section, const std::string& name, T fallback) {
  auto v = tree.get_optional<std::string>(key(section, name));
  if (!v) return fallback;
  std::istringstream in(trim(*v));
  T out{};
  if constexpr (std::is_same_v<T, bool>) {
    const std::string s = trim(*v);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw bad_value(section, name, "expected a boolean, got \"" + s + "\"");
  } else {
    in >> out;
    if (!in || !in.eof()) throw bad_value(section, name, "cannot parse \"" + *v + "\"");
    if constexpr (std::is_unsigned_v<T>) {
      if (trim(*v).front() == '-') throw bad_value(section, name, "must be non-negative");
    }
    return out;
  }
}

fs::path resolve_path(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  for (const auto& item : split_list(text)) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v == 0) throw bad_value("model", "fc_dims", "bad size \"" + item + "\"");
    dims.push_back(v);
  }
  return dims;
}

std::unique_ptr<NamedTensorStore> load_embedder(const RunConfig& config) {
  if (config.features.mode == FeatureMode::kLlds) return nullptr;
  if (!config.embedder_weights) {
    throw Error(ErrorCode::kInvalidArgument,
                "[features] embedder_weights is required for mode " +
                    std::string(feature_mode_name(config.features.mode)));
  }
  return std::make_unique<NamedTensorStore>(load_named_tensors(*config.embedder_weights));
}

std::vector<TrainingExample> load_examples(const RunConfig& config,
                                           const std::vector<std::string>& corpora, Split split,
                                           bool required, std::ostream& log) {
  std::vector<std::vector<TrainingExample>> per_corpus;
  for (const auto& corpus : corpora) {
    const fs::path path = config.cache_path(corpus, split);
    if (!fs::exists(path)) {
      if (required) {
        throw Error(ErrorCode::kIoError, "missing feature cache " + path.string() +
                                             " (run extract first)");
      }
      continue;
    }
    const auto entries = read_feature_cache(path);
    log << "loaded " << entries.size() << " " << split_name(split) << " utterances from "
        << path.string() << "\n";
    per_corpus.push_back(examples_from_cache(entries));
  }
  std::size_t dim = 0;
  for (const auto& c : per_corpus) {
    for (const auto& e : c) {
      if (dim == 0) dim = e.frames.cols();
      if (e.frames.cols() != dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "caches mix feature widths " + std::to_string(dim) + " and " +
                        std::to_string(e.frames.cols()));
      }
    }
  }
  return merge_and_shuffle(per_corpus, config.train.seed);
}

std::string row_name(const fs::path& checkpoint, const std::vector<fs::path>& all) {
  const std::string stem = checkpoint.stem().string();
  std::size_t same = 0;
  for (const auto& p : all) same += p.stem().string() == stem ? 1 : 0;
  return same > 1 ? checkpoint.string() : stem;
}

}  // namespace

fs::path RunConfig::feature_dir() const {
  return out_dir / "features" / std::string(feature_mode_name(features.mode));
}

fs::path RunConfig::cache_path(const std::string& corpus, Split split) const {
  return feature_dir() / (corpus + "." + std::string(split_name(split)) + ".serf");
}

RunConfig parse_run_config(std::istream& in, const fs::path& base_dir, std::string_view origin) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kParseError,
                std::string(origin) + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c;

  c.corpora = split_list(tree.get<std::string>(key("data", "corpora"), ""));
  if (c.corpora.empty()) throw bad_value("data", "corpora", "at least one corpus is required");
  auto subset = [&](const std::string& name) {
    auto list = split_list(tree.get<std::string>(key("data", name), ""));
    if (list.empty()) return c.corpora;
    for (const auto& item : list) {
      if (std::find(c.corpora.begin(), c.corpora.end(), item) == c.corpora.end()) {
        throw bad_value("data", name, "\"" + item + "\" is not listed in corpora");
      }
    }
    return list;
  };
  c.train_corpora = subset("train_corpora");
  c.eval_corpora = subset("eval_corpora");
  for (const auto& corpus : c.corpora) {
    auto manifest = tree.get_optional<std::string>(key("corpus." + corpus, "manifest"));
    if (!manifest) throw bad_value("corpus." + corpus, "manifest", "missing");
    c.manifests[corpus] = resolve_path(base_dir, trim(*manifest));
  }

  if (auto classes = tree.get_optional<std::string>(key("labels", "classes"))) {
    c.labels = LabelMap(split_list(*classes));
  }
  auto add_aliases = [&](const std::string& section, const std::string& corpus) {
    auto child = tree.get_child_optional(pt::ptree::path_type(section, '/'));
    if (!child) return;
    for (const auto& [raw, value] : *child) {
      const std::string target = trim(value.data());
      if (target == "DROP") {
        c.labels.add_alias(corpus, trim(raw), std::nullopt);
      } else {
        c.labels.add_alias(corpus, trim(raw), target);
      }
    }
  };
  add_aliases("aliases", "");
  for (const auto& corpus : c.corpora) add_aliases("aliases." + corpus, corpus);

  const std::string mode = trim(tree.get<std::string>(key("features", "mode"), "llds+vggishs"));
  const auto parsed_mode = parse_feature_mode(mode);
  if (!parsed_mode) {
    throw bad_value("features", "mode", "expected llds, vggishs or llds+vggishs, got \"" + mode + "\"");
  }
  c.features.mode = *parsed_mode;
  c.features.trim_silence = get_or(tree, "features", "trim_silence", true);
  if (auto w = tree.get_optional<std::string>(key("features", "embedder_weights"))) {
    c.embedder_weights = resolve_path(base_dir, trim(*w));
  }

  if (auto dims = tree.get_optional<std::string>(key("model", "fc_dims"))) {
    c.model.fc_dims = parse_dims(*dims);
  }
  c.model.lstm_hidden = get_or(tree, "model", "lstm_hidden", c.model.lstm_hidden);
  c.model.lstm_layers = get_or(tree, "model", "lstm_layers", c.model.lstm_layers);
  c.model.attn_window = get_or(tree, "model", "attn_window", c.model.attn_window);
  c.model.n_classes = c.labels.n_classes();

  c.train.learning_rate = get_or(tree, "train", "learning_rate", c.train.learning_rate);
  c.train.batch_size = get_or(tree, "train", "batch_size", c.train.batch_size);
  c.train.max_epochs = get_or(tree, "train", "max_epochs", c.train.max_epochs);
  c.train.clip_norm = get_or(tree, "train", "clip_norm", c.train.clip_norm);
  c.train.standardize = get_or(tree, "train", "standardize", c.train.standardize);

  c.train.seed = get_or<std::uint64_t>(tree, "run", "seed", c.train.seed);
  c.out_dir = resolve_path(base_dir, trim(tree.get<std::string>(key("run", "out_dir"), "out")));
  c.workers = get_or<std::size_t>(tree, "run", "workers", 1);
  if (c.workers == 0) throw bad_value("run", "workers", "must be at least 1");

  c.model.validate();
  c.train.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  return parse_run_config(in, path.parent_path(), path.string());
}

int exit_code_for(const Error& error) {
  switch (error.code()) {
    case ErrorCode::kNumericFailure: return kExitNumeric;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kEvenWindow: return kExitUsage;
    default: return kExitData;
  }
}

ExtractSummary cmd_extract(const RunConfig& config, std::ostream& log) {
  const auto embedder = load_embedder(config);
  const FeatureExtractor extractor(config.features, embedder.get());
  fs::create_directories(config.feature_dir());
  ExtractSummary summary;

  for (const auto& corpus : config.corpora) {
    const fs::path manifest = config.manifests.at(corpus);
    const auto records = load_manifest(manifest);
    struct Job {
      const UtteranceRecord* record;
      std::size_t label;
    };
    std::vector<Job> jobs;
    for (const auto& r : records) {
      if (r.corpus != corpus) {
        log << "warning: " << r.id << " declares corpus " << r.corpus << " in manifest of "
            << corpus << "\n";
      }
      try {
        if (auto idx = config.labels.resolve(r.label, corpus)) {
          jobs.push_back({&r, *idx});
        } else {
          ++summary.dropped;
        }
      } catch (const Error& e) {
        log << "error: " << r.id << ": " << e.what() << "\n";
        ++summary.failed;
      }
    }

    std::vector<FeatureCacheEntry> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        const auto& r = *jobs[i].record;
        try {
          const fs::path audio = resolve_path(manifest.parent_path(), r.audio_path);
          const FusedSequence seq = extractor.extract(load_wav(audio));
          FeatureCacheEntry& e = results[i];
          e.id = r.id;
          e.corpus = corpus;
          e.language = r.language;
          e.label_index = static_cast<std::uint32_t>(jobs[i].label);
          e.frames.resize(seq.frames.rows(), seq.frames.cols());
          std::transform(seq.frames.data().begin(), seq.frames.data().end(),
                         e.frames.data().begin(), [](double v) { return static_cast<float>(v); });
        } catch (const std::exception& ex) {
          errors[i] = ex.what();
        }
      }
    };
    const std::size_t n_threads = std::min(config.workers, std::max<std::size_t>(jobs.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
      std::vector<FeatureCacheEntry> entries;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].record->split != split) continue;
        if (!errors[i].empty()) continue;
        entries.push_back(std::move(results[i]));
      }
      if (entries.empty()) continue;
      write_feature_cache(entries, config.cache_path(corpus, split));
      summary.written += entries.size();
      log << corpus << "." << split_name(split) << ": " << entries.size() << " utterances -> "
          << config.cache_path(corpus, split).string() << "\n";
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (errors[i].empty()) continue;
      log << "error: " << jobs[i].record->id << ": " << errors[i] << "\n";
      ++summary.failed;
    }
  }
  log << "extract: " << summary.written << " cached, " << summary.dropped << " dropped, "
      << summary.failed << " failed\n";
  return summary;
}

TrainResult cmd_train(const RunConfig& config, const fs::path& checkpoint, std::ostream& log) {
  const auto train_set = load_examples(config, config.train_corpora, Split::kTrain, true, log);
  const auto dev_set = load_examples(config, config.train_corpora, Split::kDev, false, log);
  if (train_set.empty()) throw Error(ErrorCode::kEmptyBatch, "no training utterances");
  ModelConfig model = config.model;
  model.d_in = train_set.front().frames.cols();
  model.n_classes = config.labels.n_classes();
  if (!dev_set.empty() && dev_set.front().frames.cols() != model.d_in) {
    throw Error(ErrorCode::kDimensionMismatch, "dev features differ in width from train features");
  }
  const auto& classes = config.labels.classes();
  TrainResult result = train(train_set, dev_set, model, config.train, classes, &log);
  if (!checkpoint.parent_path().empty()) fs::create_directories(checkpoint.parent_path());
  save_checkpoint(result.best, checkpoint);
  fs::create_directories(config.out_dir);
  std::ofstream out(config.out_dir / "train_log.jsonl", std::ios::trunc);
  write_train_log(result.log, out, false);
  log << "best epoch " << result.best_epoch << ", checkpoint " << checkpoint.string() << "\n";
  return result;
}

std::vector<EvalReport> cmd_eval(const RunConfig& config, const std::vector<fs::path>& checkpoints,
                                 std::ostream& log) {
  if (checkpoints.empty()) throw Error(ErrorCode::kInvalidArgument, "no checkpoint given");
  const auto test_set = load_examples(config, config.eval_corpora, Split::kTest, true, log);
  std::vector<EvalReport> reports;
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& path : checkpoints) {
    const TrainedModel model = load_checkpoint(path);
    reports.push_back(evaluate(model, test_set));
    rows.emplace_back(row_name(path, checkpoints), reports.back());
  }
  fs::create_directories(config.out_dir);
  {
    std::ofstream json(config.out_dir / "eval_report.json", std::ios::trunc);
    json << report_to_json(reports.front()).dump(2) << "\n";
    std::ofstream text(config.out_dir / "eval_report.txt", std::ios::trunc);
    text << report_to_text(reports.front());
  }
  const std::string table = comparison_table(rows);
  std::ofstream(config.out_dir / "comparison.txt", std::ios::trunc) << table;
  log << table;
  return reports;
}

Prediction cmd_predict(const RunConfig& config, const fs::path& checkpoint, const fs::path& wav) {
  const TrainedModel model = load_checkpoint(checkpoint);
  const auto embedder = load_embedder(config);
  const FeatureExtractor extractor(config.features, embedder.get());
  TrainingExample example;
  example.frames = extractor.extract(load_wav(wav)).frames;
  // Same precision as the feature caches the model was trained on.
  for (auto& v : example.frames.data()) v = static_cast<double>(static_cast<float>(v));
  const Matrix logits = predict_logits(model, std::span(&example, 1));
  const auto row = logits.row(0);
  const double peak = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double v : row) z += std::exp(v - peak);
  Prediction p;
  for (std::size_t k = 0; k < row.size(); ++k) {
    p.probabilities.emplace_back(model.class_names.at(k), std::exp(row[k] - peak) / z);
  }
  p.label = model.class_names.at(argmax(row));
  return p;
}

void cmd_synth(const SynthOptions& options, std::ostream& log) {
  SynthCorpusSpec large;
  large.corpus = "synth_a";
  large.language = {"en", 1.0, 0.6, {"angry", "happy", "sad", "neutral"}};
  large.n_train = options.n_train_large;
  large.n_dev = options.n_dev;
  large.n_test = options.n_test;
  large.seed = options.seed;

  SynthCorpusSpec small = large;
  small.corpus = "synth_b";
  small.language = {"zh", 1.25, 0.8, {"anger", "happiness", "sadness", "neu"}};
  small.n_train = options.n_train_small;
  small.seed = options.seed + 1;

  for (const auto* spec : {&large, &small}) {
    const auto records = write_synth_corpus(*spec, options.out_dir / spec->corpus);
    log << spec->corpus << ": " << records.size() << " utterances in "
        << (options.out_dir / spec->corpus).string() << "\n";
  }
  std::string mode = "llds";
  if (options.write_embedder) {
    const auto arch = options.full_embedder ? VggishArchitecture::full()
                                            : VggishArchitecture::compact();
    save_named_tensors(init_vggish_weights(arch, options.seed), options.out_dir / "embedder.ntsr");
    mode = "llds+vggishs";
    log << "embedder weights: " << (options.out_dir / "embedder.ntsr").string() << "\n";
  }
  std::ofstream ini(options.out_dir / "run.ini", std::ios::trunc);
  ini << "[data]\ncorpora = synth_a, synth_b\n\n"
      << "[corpus.synth_a]\nmanifest = synth_a/manifest.jsonl\n\n"
      << "[corpus.synth_b]\nmanifest = synth_b/manifest.jsonl\n\n"
      << "[features]\nmode = " << mode << "\n";
  if (options.write_embedder) ini << "embedder_weights = embedder.ntsr\n";
  ini << "\n[train]\nmax_epochs = 20\n\n"
      << "[run]\nseed = " << options.seed << "\nout_dir = out\nworkers = 1\n";
  log << "config: " << (options.out_dir / "run.ini").string() << "\n";
}

}  // namespace ser
