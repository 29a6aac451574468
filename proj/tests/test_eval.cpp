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


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "kwspot/error.hpp"
#include "kwspot/eval.hpp"
#include "kwspot/random.hpp"
#include "support/oracles.hpp"
#include "support/published_tables.hpp"

using namespace kwspot;

namespace {

DatasetManifest manifest_with(const std::map<std::string, int>& counts) {
  DatasetManifest m;
  m.root = "/data";
  for (const auto& [label, n] : counts) {
    auto& files = m.labels[label];
    for (int i = 0; i < n; ++i) files.push_back(label + "/clip_" + std::to_string(i) + ".wav");
  }
  return m;
}

ConfusionMatrix from_rows(const std::vector<std::string>& labels,
                          const std::vector<std::vector<std::uint64_t>>& rows) {
  ConfusionMatrix cm(labels);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      if (rows[i][j]) cm.add(i, j, rows[i][j]);
  return cm;
}

// Per-class metrics straight from the definitions.
struct Ref {
  double p, r, f;
};
Ref reference_metrics(const ConfusionMatrix& cm, std::size_t k) {
  double tp = double(cm.at(k, k)), col = 0, row = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    col += double(cm.at(i, k));
    row += double(cm.at(k, i));
  }
  const double p = col > 0 ? tp / col : 0.0;
  const double r = row > 0 ? tp / row : 0.0;
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

}  // namespace

TEST_CASE("split counts follow half-up rounding of n * ratio") {
  auto split = split_dataset(manifest_with({{"BLUE", 116}, {"X", 10}}), 0.20, 1, {{"BLUE", 0.22}});
  CHECK(split.count("BLUE", Split::kTest) == 26);
  CHECK(split.count("BLUE", Split::kTrain) == 90);
  CHECK(split.count("X", Split::kTest) == 2);
  CHECK(split.count("X", Split::kTrain) == 8);
  CHECK(split.test_ratio.at("BLUE") == doctest::Approx(0.22));
  CHECK(split.test_ratio.at("X") == doctest::Approx(0.20));
}

TEST_CASE("split reproduces the published composition") {
  std::map<std::string, int> counts;
  std::map<std::string, double> ratios;
  for (const auto& row : tables::table2()) {
    counts[row.label] = row.count;
    ratios[row.label] = row.test_pct / 100.0;
  }
  auto split = split_dataset(manifest_with(counts), 0.20, 42, ratios);
  std::size_t total = 0;
  for (const auto& row : tables::table2()) {
    const auto test = split.count(row.label, Split::kTest);
    const auto train = split.count(row.label, Split::kTrain);
    total += test + train;
    CHECK(test + train == std::size_t(row.count));
    // integer percentages, recomputed from the counts
    const auto pct = static_cast<int>(std::floor(100.0 * double(test) / row.count + 0.5));
    CHECK_MESSAGE(pct == row.test_pct, row.label);
    const auto train_pct = static_cast<int>(std::floor(100.0 * double(train) / row.count + 0.5));
    CHECK_MESSAGE(train_pct == row.train_pct, row.label);
  }
  CHECK(total == std::size_t(tables::kTable2Total));
}

TEST_CASE("split is deterministic per seed and varies across seeds") {
  auto m = manifest_with({{"A", 50}, {"B", 30}});
  auto a = split_dataset(m, 0.2, 9);
  auto b = split_dataset(m, 0.2, 9);
  auto c = split_dataset(m, 0.2, 10);
  CHECK(a.labels == b.labels);
  CHECK(a.labels != c.labels);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("split rejects empty labels and bad ratios") {
  CHECK(oracle::thrown_code([] { split_dataset(manifest_with({{"A", 4}, {"B", 0}}), 0.2, 1); }) ==
        ErrorCode::kEmptyClass);
  CHECK(oracle::thrown_code([] { split_dataset(DatasetManifest{}, 0.2, 1); }) == ErrorCode::kEmptyDataset);
  CHECK(oracle::thrown_code([] { split_dataset(manifest_with({{"A", 4}}), 1.5, 1); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("merge_split inverts split_dataset and JSON round-trips") {
  auto m = manifest_with({{"A", 17}, {"B", 23}, {"C", 5}});
  for (auto& [label, files] : m.labels) std::sort(files.begin(), files.end());
  auto split = split_dataset(m, 0.25, 3);
  auto back = merge_split(split);
  CHECK(back.labels == m.labels);
  auto reparsed = SplitManifest::from_json(split.to_json());
  CHECK(reparsed.labels == split.labels);
  CHECK(reparsed.seed == split.seed);
  CHECK(reparsed.test_ratio == split.test_ratio);
}

TEST_CASE("confusion from a classifier") {
  const std::vector<std::string> labels = {"A", "B", "C"};
  std::vector<LabeledExample> set;
  for (int i = 0; i < 12; ++i) set.push_back({MfccMatrix{}, labels[i % 3]});

  SUBCASE("perfect") {
    std::size_t i = 0;
    auto cm = confusion(labels, [&](const MfccMatrix&) { return (i++) % 3; }, set);
    CHECK(cm.trace() == 12);
    CHECK(cm.total() == 12);
  }
  SUBCASE("one wrong") {
    std::size_t i = 0;
    auto cm = confusion(
        labels, [&](const MfccMatrix&) { const auto k = i++; return k == 4 ? std::size_t{2} : k % 3; }, set);
    CHECK(cm.trace() == 11);
    CHECK(cm.at(1, 2) == 1);
  }
  SUBCASE("matches an independent tally") {
    Rng rng(5);
    std::vector<std::size_t> preds(set.size());
    for (auto& p : preds) p = rng.below(3);
    std::size_t i = 0;
    auto cm = confusion(labels, [&](const MfccMatrix&) { return preds[i++]; }, set);
    std::uint64_t tally[3][3] = {};
    for (std::size_t k = 0; k < set.size(); ++k) ++tally[k % 3][preds[k]];
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) CHECK(cm.at(a, b) == tally[a][b]);
  }
  SUBCASE("unknown label") {
    set.push_back({MfccMatrix{}, "Z"});
    CHECK(oracle::thrown_code([&] { confusion(labels, [](const MfccMatrix&) { return std::size_t{0}; }, set); }) ==
          ErrorCode::kLabelMismatch);
  }
}

TEST_CASE("metrics on worked examples") {
  // 24 true WAKE UP all recalled, one false positive: P = 24/25 = .96, R = 1
  auto cm = from_rows({"WAKE UP", "OTHER"}, {{24, 0}, {1, 50}});
  auto rep = metrics(cm);
  CHECK(rep.per_label[0].precision == doctest::Approx(0.96));
  CHECK(rep.per_label[0].recall == doctest::Approx(1.0));
  CHECK(round_half_up(rep.per_label[0].f1) == doctest::Approx(0.98));

  CHECK(f1_score(1.00, 0.91) == doctest::Approx(2 * 0.91 / 1.91));
  CHECK(round_half_up(f1_score(1.00, 0.91), 4) == doctest::Approx(0.9529));
  CHECK(f1_score(0, 0) == 0.0);

  auto diag = metrics(from_rows({"A", "B"}, {{3, 0}, {0, 5}}));
  for (const auto& m : diag.per_label) {
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  CHECK(diag.accuracy == 1.0);

  // label A never predicted: TP = FP = 0, FN = 3
  auto never = metrics(from_rows({"A", "B"}, {{0, 3}, {0, 4}}));
  CHECK(never.per_label[0].precision == 0.0);
  CHECK(never.per_label[0].recall == 0.0);
  CHECK(never.per_label[0].f1 == 0.0);
  CHECK(never.per_label[0].support == 3);

  CHECK(oracle::thrown_code([] { metrics(ConfusionMatrix({"A", "B"})); }) == ErrorCode::kEmptyMatrix);
}

TEST_CASE("metric identities on random matrices") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back("L" + std::to_string(i));
    std::vector<std::vector<std::uint64_t>> rows(n, std::vector<std::uint64_t>(n));
    for (auto& r : rows)
      for (auto& v : r) v = rng.below(10);
    rows[0][0] += 1;
    auto cm = from_rows(labels, rows);
    auto rep = metrics(cm);

    double support_weighted_recall = 0, mp = 0, mr = 0, mf = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto ref = reference_metrics(cm, k);
      const auto& m = rep.per_label[k];
      CHECK(m.precision == doctest::Approx(ref.p).epsilon(1e-12));
      CHECK(m.recall == doctest::Approx(ref.r).epsilon(1e-12));
      CHECK(m.f1 == doctest::Approx(ref.f).epsilon(1e-12));
      support_weighted_recall += m.recall * double(m.support);
      mp += ref.p;
      mr += ref.r;
      mf += ref.f;
    }
    CHECK(rep.accuracy == doctest::Approx(support_weighted_recall / double(cm.total())));
    CHECK(rep.macro_precision == doctest::Approx(mp / double(n)));
    CHECK(rep.macro_recall == doctest::Approx(mr / double(n)));
    CHECK(rep.macro_f1 == doctest::Approx(mf / double(n)));

    // relabeling permutes the per-label results
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<std::string> plabels(n);
    std::vector<std::vector<std::uint64_t>> prows(n, std::vector<std::uint64_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
      plabels[perm[i]] = labels[i];
      for (std::size_t j = 0; j < n; ++j) prows[perm[i]][perm[j]] = rows[i][j];
    }
    auto prep = metrics(from_rows(plabels, prows));
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(prep.per_label[perm[k]].label == rep.per_label[k].label);
      CHECK(prep.per_label[perm[k]].f1 == doctest::Approx(rep.per_label[k].f1));
    }
    CHECK(prep.macro_f1 == doctest::Approx(rep.macro_f1));
  }
}

TEST_CASE("round_half_up") {
  CHECK(round_half_up(0.955) == doctest::Approx(0.96));
  CHECK(round_half_up(0.945) == doctest::Approx(0.95));
  CHECK(round_half_up(0.9449) == doctest::Approx(0.94));
  CHECK(round_half_up(1.0) == 1.0);
  CHECK(round_half_up(0.0) == 0.0);
  CHECK(round_half_up(0.98565, 3) == doctest::Approx(0.986));
}

TEST_CASE("rendering") {
  auto rep = metrics(from_rows({"A", "B"}, {{3, 0}, {0, 5}}));
  const auto text = render_table(rep);
  CHECK(text.find("1.00") != std::string::npos);
  CHECK(text.find("MACRO") != std::string::npos);

  auto rows = parse_report_csv(render_csv(rep));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].label == "A");
  CHECK(rows[2].label == "MACRO");
  CHECK(rows[2].f1 == 1.0);
}

TEST_CASE("constructed matrix reproduces every published per-label row") {
  const auto cm = tables::table1_confusion();
  CHECK(cm.size() == 23);
  const auto rep = metrics(cm);
  const auto rows = parse_report_csv(render_csv(rep));
  REQUIRE(rows.size() == 24);
  for (std::size_t i = 0; i < 23; ++i) {
    const auto& want = tables::table1()[i];
    CAPTURE(want.label);
    CHECK(rows[i].label == want.label);
    CHECK(rows[i].f1 == doctest::Approx(want.f1));
    CHECK(rows[i].precision == doctest::Approx(want.precision));
    CHECK(rows[i].recall == doctest::Approx(want.recall));
  }
  // macro F1 and recall agree with the published macro row; macro precision
  // cannot (the per-label precisions average to .99, not .97)
  tables::MacroRow macro;
  CHECK(rows[23].f1 == doctest::Approx(macro.f1));
  CHECK(rows[23].recall == doctest::Approx(macro.recall));
  CHECK(rows[23].precision == doctest::Approx(0.99));
}
