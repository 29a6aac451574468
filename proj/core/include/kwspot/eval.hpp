// Copyright 2026 The kwspot Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kwspot/audio.hpp"
#include "kwspot/model.hpp"
#include "kwspot/quant.hpp"

namespace kwspot {

enum class Split { kTrain, kTest };

struct SplitEntry {
  std::string path;
  Split split = Split::kTrain;
  bool operator==(const SplitEntry&) const = default;
};

struct SplitManifest {
  std::filesystem::path root;
  int sample_rate_hz = kSampleRateHz;
  std::uint64_t seed = 0;
  double default_test_ratio = 0.20;
  /// Test ratio actually used per label (default or override).
  std::map<std::string, double> test_ratio;
  std::map<std::string, std::vector<SplitEntry>> labels;

  std::size_t count(const std::string& label, Split split) const;
  std::vector<std::string> label_names() const;

  std::string to_json() const;
  static SplitManifest from_json(const std::string& text);
};

/// Per-label seeded shuffle, then the first round_half_up(n * ratio) clips
/// go to TEST. `overrides` replaces the ratio for individual labels.
SplitManifest split_dataset(const DatasetManifest& manifest, double test_ratio, std::uint64_t seed,
                            const std::map<std::string, double>& overrides = {});

/// Inverse of split_dataset up to file order (files come back sorted).
DatasetManifest merge_split(const SplitManifest& split);

/// Rows are true labels, columns predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);
  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  /// Element-wise sum; labels must match.
  void merge(const ConfusionMatrix& other);

  std::string to_csv() const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::uint64_t> counts_;
};

using Classifier = std::function<std::size_t(const MfccMatrix&)>;

/// One count per example at (true label, argmax prediction). No confidence
/// gating. Throws kLabelMismatch if an example's label is not a model label.
ConfusionMatrix confusion(const std::vector<std::string>& model_labels, const Classifier& classify,
                          std::span<const LabeledExample> test_set);
ConfusionMatrix confusion(const FloatModel& model, std::span<const LabeledExample> test_set);
ConfusionMatrix confusion(const QuantizedModel& model, std::span<const LabeledExample> test_set);

struct LabelMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  std::vector<LabelMetrics> per_label;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

/// Harmonic mean 2PR/(P+R); 0 when P+R == 0.
double f1_score(double precision, double recall) noexcept;

/// Per-label precision/recall/F1 and unweighted macro averages. A zero
/// denominator yields 0 for that metric. Throws kEmptyMatrix if total == 0.
EvalReport metrics(const ConfusionMatrix& cm);

/// Half-up rounding to `digits` decimals (0.955 -> 0.96).
double round_half_up(double value, int digits = 2);

/// Plain-text table: label, F1, precision, recall, plus a MACRO row and accuracy.
std::string render_table(const EvalReport& report);
/// `label,f1,precision,recall` rows (2 decimals) with a final MACRO row.
std::string render_csv(const EvalReport& report);

struct ReportRow {
  std::string label;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};
std::vector<ReportRow> parse_report_csv(const std::string& csv);

}  // namespace kwspot
