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

#include "ser/eval.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "ser/error.hpp"
#include "ser/training.hpp"

namespace ser {

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> targets, std::size_t n_classes) {
  if (predictions.size() != targets.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(predictions.size()) +
                                                " predictions for " +
                                                std::to_string(targets.size()) + " targets");
  }
  ConfusionMatrix cm(n_classes, n_classes, 0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= n_classes || predictions[i] >= n_classes) {
      throw Error(ErrorCode::kClassOutOfRange,
                  "class index outside [0, " + std::to_string(n_classes) + ")");
    }
    ++cm(targets[i], predictions[i]);
  }
  return cm;
}

Accuracy compute_wa_ua(const ConfusionMatrix& confusion) {
  std::size_t total = 0;
  std::size_t correct = 0;
  double recall_sum = 0.0;
  std::size_t populated = 0;
  std::size_t common_row = 0;
  bool balanced = true;
  Accuracy acc;
  for (std::size_t i = 0; i < confusion.rows(); ++i) {
    std::size_t row_sum = 0;
    for (std::size_t j = 0; j < confusion.cols(); ++j) row_sum += confusion(i, j);
    total += row_sum;
    correct += confusion(i, i);
    if (row_sum == 0) {
      ++acc.empty_classes;
      continue;
    }
    recall_sum += static_cast<double>(confusion(i, i)) / static_cast<double>(row_sum);
    ++populated;
    if (common_row == 0) common_row = row_sum;
    balanced = balanced && row_sum == common_row;
  }
  if (total == 0) throw Error(ErrorCode::kEmptyMatrix, "confusion matrix holds no samples");
  acc.wa = static_cast<double>(correct) / static_cast<double>(total);
  // Equal class sizes: the recall mean is exactly trace / total.
  acc.ua = balanced ? acc.wa : recall_sum / static_cast<double>(populated);
  return acc;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

MetricReport metric_report(std::span<const std::size_t> predictions,
                           std::span<const std::size_t> targets, std::size_t n_classes) {
  MetricReport r;
  r.confusion = confusion_matrix(predictions, targets, n_classes);
  r.n_samples = targets.size();
  r.accuracy = compute_wa_ua(r.confusion);
  return r;
}

EvalReport evaluate(const TrainedModel& model, std::span<const TrainingExample> test_set) {
  if (test_set.empty()) throw Error(ErrorCode::kEmptyMatrix, "empty test set");
  for (const auto& ex : test_set) {
    if (ex.frames.cols() != model.config.d_in) {
      throw Error(ErrorCode::kDimensionMismatch,
                  ex.id + " has feature dim " + std::to_string(ex.frames.cols()) +
                      ", checkpoint expects " + std::to_string(model.config.d_in));
    }
  }
  const Matrix logits = predict_logits(model, test_set);
  const std::size_t c = model.config.n_classes;

  std::vector<std::size_t> preds(test_set.size());
  std::vector<std::size_t> targets(test_set.size());
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> corpus_groups;
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> lang_groups;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    preds[i] = argmax(logits.row(i));
    targets[i] = test_set[i].label;
    auto& cg = corpus_groups[test_set[i].corpus];
    cg.first.push_back(preds[i]);
    cg.second.push_back(targets[i]);
    auto& lg = lang_groups[test_set[i].language];
    lg.first.push_back(preds[i]);
    lg.second.push_back(targets[i]);
  }

  EvalReport report;
  report.class_names = model.class_names;
  report.overall = metric_report(preds, targets, c);
  for (const auto& [name, g] : corpus_groups) {
    report.by_corpus.emplace(name, metric_report(g.first, g.second, c));
  }
  for (const auto& [name, g] : lang_groups) {
    report.by_language.emplace(name, metric_report(g.first, g.second, c));
  }
  return report;
}

namespace {

nlohmann::ordered_json MetricJson(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["n_samples"] = r.n_samples;
  j["wa"] = r.accuracy.wa;
  j["ua"] = r.accuracy.ua;
  j["empty_classes"] = r.accuracy.empty_classes;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.confusion.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j;
}

void MetricText(std::ostringstream& out, const std::string& prefix, const MetricReport& r) {
  out << prefix << "n_samples = " << r.n_samples << '\n';
  out << prefix << "wa = " << r.accuracy.wa << '\n';
  out << prefix << "ua = " << r.accuracy.ua << '\n';
  out << prefix << "empty_classes = " << r.accuracy.empty_classes << '\n';
  for (std::size_t i = 0; i < r.confusion.rows(); ++i) {
    out << prefix << "confusion." << i << " =";
    for (std::size_t k = 0; k < r.confusion.cols(); ++k) out << ' ' << r.confusion(i, k);
    out << '\n';
  }
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["classes"] = report.class_names;
  j["overall"] = MetricJson(report.overall);
  nlohmann::ordered_json corpora = nlohmann::ordered_json::object();
  for (const auto& [name, r] : report.by_corpus) corpora[name] = MetricJson(r);
  j["by_corpus"] = corpora;
  nlohmann::ordered_json langs = nlohmann::ordered_json::object();
  for (const auto& [name, r] : report.by_language) langs[name] = MetricJson(r);
  j["by_language"] = langs;
  return j;
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << "classes =";
  for (const auto& c : report.class_names) out << ' ' << c;
  out << '\n';
  MetricText(out, "overall.", report.overall);
  for (const auto& [name, r] : report.by_corpus) MetricText(out, "corpus." + name + ".", r);
  for (const auto& [name, r] : report.by_language) MetricText(out, "language." + name + ".", r);
  return out.str();
}

std::string comparison_table(std::span<const std::pair<std::string, EvalReport>> rows) {
  std::set<std::string> corpora;
  std::size_t label_width = 8;
  for (const auto& [label, r] : rows) {
    label_width = std::max(label_width, label.size());
    for (const auto& [name, _] : r.by_corpus) corpora.insert(name);
  }
  std::ostringstream out;
  char cell[64];
  out << std::string(label_width, ' ');
  for (const auto& c : corpora) {
    std::snprintf(cell, sizeof cell, " | %-15s", c.c_str());
    out << cell;
  }
  out << '\n' << std::string(label_width, ' ');
  for (std::size_t i = 0; i < corpora.size(); ++i) out << " |  WA(%)  UA(%) ";
  out << '\n';
  for (const auto& [label, r] : rows) {
    out << label << std::string(label_width - label.size(), ' ');
    for (const auto& c : corpora) {
      auto it = r.by_corpus.find(c);
      if (it == r.by_corpus.end()) {
        std::snprintf(cell, sizeof cell, " | %6s %6s ", "-", "-");
      } else {
        std::snprintf(cell, sizeof cell, " | %6.1f %6.1f ", 100.0 * it->second.accuracy.wa,
                      100.0 * it->second.accuracy.ua);
      }
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ser
