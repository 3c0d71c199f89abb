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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ser/matrix.hpp"

namespace ser {

struct TrainedModel;
struct TrainingExample;

// Rows are true classes, columns predictions.
using ConfusionMatrix = BasicMatrix<std::size_t>;

// Throws kLengthMismatch, kClassOutOfRange.
ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> targets, std::size_t n_classes);

struct Accuracy {
  double wa = 0.0;  // trace / total
  double ua = 0.0;  // mean recall over classes that have samples
  std::size_t empty_classes = 0;
};

// Throws kEmptyMatrix when the matrix holds no samples.
Accuracy compute_wa_ua(const ConfusionMatrix& confusion);

// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

struct MetricReport {
  ConfusionMatrix confusion;
  Accuracy accuracy;
  std::size_t n_samples = 0;
};

struct EvalReport {
  std::vector<std::string> class_names;
  MetricReport overall;
  std::map<std::string, MetricReport> by_corpus;
  std::map<std::string, MetricReport> by_language;
};

MetricReport metric_report(std::span<const std::size_t> predictions,
                           std::span<const std::size_t> targets, std::size_t n_classes);

// Argmax predictions with global, per-corpus and per-language breakdowns.
// Throws kDimensionMismatch, kEmptyMatrix.
EvalReport evaluate(const TrainedModel& model, std::span<const TrainingExample> test_set);

nlohmann::ordered_json report_to_json(const EvalReport& report);
// key = value lines.
std::string report_to_text(const EvalReport& report);

// WA/UA per training condition (rows) and test corpus (columns).
std::string comparison_table(std::span<const std::pair<std::string, EvalReport>> rows);

}  // namespace ser
