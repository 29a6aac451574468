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

#include "kwspot/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "kwspot/error.hpp"
#include "kwspot/random.hpp"

namespace kwspot {

std::size_t SplitManifest::count(const std::string& label, Split split) const {
  auto it = labels.find(label);
  if (it == labels.end()) return 0;
  return static_cast<std::size_t>(std::count_if(it->second.begin(), it->second.end(),
                                                [&](const SplitEntry& e) { return e.split == split; }));
}

std::vector<std::string> SplitManifest::label_names() const {
  std::vector<std::string> out;
  for (const auto& [label, entries] : labels) out.push_back(label);
  return out;
}

std::string SplitManifest::to_json() const {
  nlohmann::ordered_json j;
  j["sample_rate_hz"] = sample_rate_hz;
  j["seed"] = seed;
  j["default_test_ratio"] = default_test_ratio;
  if (!root.empty()) j["root"] = root.generic_string();
  j["labels"] = nlohmann::ordered_json::object();
  for (const auto& [label, entries] : labels) {
    nlohmann::ordered_json train = nlohmann::ordered_json::array();
    nlohmann::ordered_json test = nlohmann::ordered_json::array();
    for (const auto& e : entries) (e.split == Split::kTrain ? train : test).push_back(e.path);
    j["labels"][label] = {{"test_ratio", test_ratio.at(label)}, {"train", train}, {"test", test}};
  }
  return j.dump(2);
}

SplitManifest SplitManifest::from_json(const std::string& text) {
  SplitManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.default_test_ratio = j.at("default_test_ratio").get<double>();
    if (j.contains("root")) m.root = j["root"].get<std::string>();
    for (const auto& [label, body] : j.at("labels").items()) {
      m.test_ratio[label] = body.at("test_ratio").get<double>();
      auto& entries = m.labels[label];
      for (const auto& p : body.at("train")) entries.push_back({p.get<std::string>(), Split::kTrain});
      for (const auto& p : body.at("test")) entries.push_back({p.get<std::string>(), Split::kTest});
      std::sort(entries.begin(), entries.end(),
                [](const SplitEntry& a, const SplitEntry& b) { return a.path < b.path; });
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad split manifest: ") + e.what());
  }
  return m;
}

SplitManifest split_dataset(const DatasetManifest& manifest, double test_ratio, std::uint64_t seed,
                            const std::map<std::string, double>& overrides) {
  if (manifest.labels.empty()) throw Error(ErrorCode::kEmptyDataset, "manifest has no labels");
  SplitManifest out;
  out.root = manifest.root;
  out.sample_rate_hz = manifest.sample_rate_hz;
  out.seed = seed;
  out.default_test_ratio = test_ratio;
  for (const auto& [label, files] : manifest.labels) {
    if (files.empty()) throw Error(ErrorCode::kEmptyClass, "label '" + label + "' has no clips");
    auto ov = overrides.find(label);
    const double ratio = ov != overrides.end() ? ov->second : test_ratio;
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "test ratio for '" + label + "' outside [0, 1]");
    }
    out.test_ratio[label] = ratio;

    std::vector<std::string> sorted = files;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> order(sorted.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed ^ fnv1a(label));
    rng.shuffle(std::span<std::size_t>(order));

    const auto n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(sorted.size()) * ratio + 0.5 + 1e-9));
    std::vector<Split> tag(sorted.size(), Split::kTrain);
    for (std::size_t i = 0; i < n_test && i < order.size(); ++i) tag[order[i]] = Split::kTest;
    auto& entries = out.labels[label];
    for (std::size_t i = 0; i < sorted.size(); ++i) entries.push_back({sorted[i], tag[i]});
  }
  return out;
}

DatasetManifest merge_split(const SplitManifest& split) {
  DatasetManifest m;
  m.root = split.root;
  m.sample_rate_hz = split.sample_rate_hz;
  for (const auto& [label, entries] : split.labels) {
    auto& files = m.labels[label];
    for (const auto& e : entries) files.push_back(e.path);
    std::sort(files.begin(), files.end());
  }
  return m;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  if (truth >= size() || predicted >= size()) throw Error(ErrorCode::kInvalidArgument, "index out of range");
  return counts_[truth * size() + predicted];
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  if (truth >= size() || predicted >= size()) throw Error(ErrorCode::kInvalidArgument, "index out of range");
  counts_[truth * size() + predicted] += count;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += counts_[i * size() + i];
  return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.labels_ != labels_) throw Error(ErrorCode::kLabelMismatch, "cannot merge: labels differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream os;
  os << "true\\predicted";
  for (const auto& l : labels_) os << ',' << l;
  os << '\n';
  for (std::size_t r = 0; r < size(); ++r) {
    os << labels_[r];
    for (std::size_t c = 0; c < size(); ++c) os << ',' << counts_[r * size() + c];
    os << '\n';
  }
  return os.str();
}

ConfusionMatrix confusion(const std::vector<std::string>& model_labels, const Classifier& classify,
                          std::span<const LabeledExample> test_set) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < model_labels.size(); ++i) index[model_labels[i]] = i;
  ConfusionMatrix cm(model_labels);
  for (const auto& ex : test_set) {
    auto it = index.find(ex.label);
    if (it == index.end()) {
      throw Error(ErrorCode::kLabelMismatch, "test label '" + ex.label + "' is not a model label");
    }
    cm.add(it->second, classify(ex.features));
  }
  return cm;
}

ConfusionMatrix confusion(const FloatModel& model, std::span<const LabeledExample> test_set) {
  return confusion(
      model.class_labels, [&](const MfccMatrix& f) { return forward(model, f).top_index; }, test_set);
}

ConfusionMatrix confusion(const QuantizedModel& model, std::span<const LabeledExample> test_set) {
  InferenceContext ctx(model);
  return confusion(
      model.class_labels, [&](const MfccMatrix& f) { return ctx.run(f).top_index; }, test_set);
}

double f1_score(double precision, double recall) noexcept {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

EvalReport metrics(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error(ErrorCode::kEmptyMatrix, "confusion matrix has no counts");
  const std::size_t n = cm.size();
  EvalReport report;
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t col = 0;
    std::uint64_t row = 0;
    for (std::size_t j = 0; j < n; ++j) {
      col += cm.at(j, k);
      row += cm.at(k, j);
    }
    const std::uint64_t tp = cm.at(k, k);
    LabelMetrics m;
    m.label = cm.labels()[k];
    m.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    m.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    m.f1 = f1_score(m.precision, m.recall);
    m.support = row;
    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
    report.macro_f1 += m.f1;
    report.per_label.push_back(std::move(m));
  }
  const double dn = static_cast<double>(n);
  report.macro_precision /= dn;
  report.macro_recall /= dn;
  report.macro_f1 /= dn;
  report.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  return report;
}

double round_half_up(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", round_half_up(v, 2));
  return buf;
}

}  // namespace

std::string render_table(const EvalReport& report) {
  std::size_t width = 7;
  for (const auto& m : report.per_label) width = std::max(width, m.label.size());
  char line[256];
  std::ostringstream os;
  std::snprintf(line, sizeof(line), "%-*s  %8s  %9s  %6s\n", static_cast<int>(width), "label", "F1-Score",
                "Precision", "Recall");
  os << line;
  auto row = [&](const std::string& label, double f1, double p, double r) {
    std::snprintf(line, sizeof(line), "%-*s  %8s  %9s  %6s\n", static_cast<int>(width), label.c_str(),
                  fixed2(f1).c_str(), fixed2(p).c_str(), fixed2(r).c_str());
    os << line;
  };
  for (const auto& m : report.per_label) row(m.label, m.f1, m.precision, m.recall);
  row("MACRO", report.macro_f1, report.macro_precision, report.macro_recall);
  os << "accuracy " << fixed2(report.accuracy) << '\n';
  return os.str();
}

std::string render_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "label,f1,precision,recall\n";
  for (const auto& m : report.per_label) {
    os << m.label << ',' << fixed2(m.f1) << ',' << fixed2(m.precision) << ',' << fixed2(m.recall) << '\n';
  }
  os << "MACRO," << fixed2(report.macro_f1) << ',' << fixed2(report.macro_precision) << ','
     << fixed2(report.macro_recall) << '\n';
  return os.str();
}

std::vector<ReportRow> parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<ReportRow> rows;
  if (!std::getline(in, line) || line != "label,f1,precision,recall") {
    throw Error(ErrorCode::kInvalidArgument, "missing report CSV header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ReportRow r;
    std::string f1, p, rc;
    if (!std::getline(ls, r.label, ',') || !std::getline(ls, f1, ',') || !std::getline(ls, p, ',') ||
        !std::getline(ls, rc)) {
      throw Error(ErrorCode::kInvalidArgument, "malformed report row: " + line);
    }
    r.f1 = std::stod(f1);
    r.precision = std::stod(p);
    r.recall = std::stod(rc);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace kwspot
