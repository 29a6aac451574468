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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kwspot/eval.hpp"
#include "kwspot/model.hpp"
#include "kwspot/quant.hpp"
#include "kwspot/session.hpp"

namespace kwspot::cli {

struct PrepareOptions {
  std::filesystem::path dataset_root;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  double ratio = 0.20;
  std::map<std::string, double> label_ratios;
};

SplitManifest cmd_prepare(const PrepareOptions& opts, std::ostream& log);

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  /// One JSON line per epoch; defaults to <out>.log.jsonl.
  std::filesystem::path log_path;
  /// Overrides the root recorded in the manifest.
  std::filesystem::path dataset_root;
  TrainHyper hyper;
};

TrainResult cmd_train(const TrainOptions& opts, std::ostream& log);

struct QuantizeOptions {
  std::filesystem::path model;
  std::filesystem::path manifest;
  std::filesystem::path out;
  /// Size/arena report as JSON; defaults to <out>.report.json.
  std::filesystem::path report_path;
  std::filesystem::path dataset_root;
  std::size_t budget_bytes = 196608;
  std::size_t calibration_clips = 400;
};

struct QuantizeResult {
  QuantizedModel model;
  ArenaPlan plan;
  MemoryReport memory;
  std::size_t artifact_bytes = 0;
};

QuantizeResult cmd_quantize(const QuantizeOptions& opts, std::ostream& log);

struct EvalOptions {
  /// Either may be a float ("KWSM") or quantized ("KWSQ") artifact; at least
  /// one is required.
  std::vector<std::filesystem::path> models;
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::filesystem::path dataset_root;
};

struct EvalResult {
  std::vector<std::pair<std::string, EvalReport>> reports;  // name -> report
  /// Fraction of test clips where the two models' argmax agree; set when
  /// two models were given.
  std::optional<double> agreement;
};

EvalResult cmd_eval(const EvalOptions& opts, std::ostream& log);

/// Streams a WAV file, or raw little-endian PCM-16 from `stdin_source` when
/// `input` is "-", through StreamingSession and writes JSON lines to `out`.
void cmd_run(const RunConfig& config, const std::string& input, std::istream& stdin_source,
             std::ostream& out);

/// Runs the demo service until interrupted.
void cmd_serve(const RunConfig& config, std::ostream& log);

struct SynthOptions {
  std::filesystem::path out;
  std::vector<std::string> labels;
  std::size_t clips_per_label = 40;
  std::uint64_t seed = 0;
};

void cmd_synth(const SynthOptions& opts, std::ostream& log);

/// Writes a fixture WAV speaking `keywords` with the synthetic patterns that
/// the labels of `model_labels` map to.
void write_fixture_stream(const std::filesystem::path& out, const std::vector<std::string>& model_labels,
                          const std::vector<std::string>& keywords, std::uint64_t seed);

/// Loads TRAIN or TEST examples of a split manifest as MFCC matrices.
std::vector<LabeledExample> load_examples(const SplitManifest& manifest, Split split,
                                          const MfccConfig& config,
                                          const std::filesystem::path& root_override = {});

SplitManifest load_split_manifest(const std::filesystem::path& path);

}  // namespace kwspot::cli
