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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kwspot/commands.hpp"
#include "kwspot/error.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kwspot::cli;
  CLI::App app{"kwspot: keyword spotting for tiny devices"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  RunConfig run;

  PrepareOptions prep;
  std::vector<std::string> label_ratios;
  auto* c_prep = app.add_subcommand("prepare", "Split a dataset tree into TRAIN/TEST");
  c_prep->add_option("--dataset-root", prep.dataset_root, "Directory with one subdirectory per label")->required();
  c_prep->add_option("--out", prep.out, "Split manifest JSON to write")->required();
  c_prep->add_option("--ratio", prep.ratio, "Default test ratio")->check(CLI::Range(0.0, 1.0));
  c_prep->add_option("--label-ratio", label_ratios, "Per-label test ratio, LABEL=R (repeatable)");
  c_prep->add_option("--seed", seed, "Shuffle seed");

  TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "Train the float CNN");
  c_train->add_option("--manifest", tr.manifest, "Split manifest")->required();
  c_train->add_option("--out", tr.out, "Model artifact to write")->required();
  c_train->add_option("--log", tr.log_path, "Per-epoch JSON-lines log");
  c_train->add_option("--dataset-root", tr.dataset_root, "Override the manifest root");
  c_train->add_option("--epochs", tr.hyper.epochs)->check(CLI::PositiveNumber);
  c_train->add_option("--batch", tr.hyper.batch)->check(CLI::PositiveNumber);
  c_train->add_option("--lr", tr.hyper.lr)->check(CLI::PositiveNumber);
  c_train->add_option("--seed", seed);

  QuantizeOptions qo;
  auto* c_quant = app.add_subcommand("quantize", "Post-training int8 quantization");
  c_quant->add_option("--model", qo.model, "Float model artifact")->required();
  c_quant->add_option("--manifest", qo.manifest, "Split manifest (TRAIN clips calibrate)")->required();
  c_quant->add_option("--out", qo.out, "Quantized artifact to write")->required();
  c_quant->add_option("--report", qo.report_path, "Size/arena report JSON");
  c_quant->add_option("--dataset-root", qo.dataset_root, "Override the manifest root");
  c_quant->add_option("--budget-bytes", qo.budget_bytes, "Weights + arena budget");
  c_quant->add_option("--calibration-clips", qo.calibration_clips)->check(CLI::PositiveNumber);

  EvalOptions eo;
  auto* c_eval = app.add_subcommand("eval", "Evaluate on the TEST split");
  c_eval->add_option("--model", eo.models, "Float and/or quantized artifact (up to two)")->required();
  c_eval->add_option("--manifest", eo.manifest, "Split manifest")->required();
  c_eval->add_option("--out-dir", eo.out_dir, "Directory for reports")->required();
  c_eval->add_option("--dataset-root", eo.dataset_root, "Override the manifest root");

  std::string input = "-";
  auto add_run_flags = [&](CLI::App* c) {
    c->add_option("--model", run.model_path, "Quantized artifact")->required();
    c->add_option("--hop-ms", run.hop_ms)->check(CLI::Range(50, 1000));
    c->add_option("--threshold", run.threshold)->check(CLI::Range(0.0, 1.0));
    c->add_option("--timeout-ms", run.timeout_ms)->check(CLI::PositiveNumber);
    c->add_option("--budget-bytes", run.budget_bytes);
    c->add_option("--seed", seed);
  };
  auto* c_run = app.add_subcommand("run", "Stream audio through the interpreter, JSON lines out");
  add_run_flags(c_run);
  c_run->add_option("--input", input, "WAV file, or - for raw PCM-16 LE on stdin");
  auto* c_serve = app.add_subcommand("serve", "WebSocket demo service on localhost");
  add_run_flags(c_serve);
  c_serve->add_option("--port", run.port)->check(CLI::Range(0, 65535));

  SynthOptions so;
  std::string labels;
  auto* c_synth = app.add_subcommand("synth", "Write a seeded synthetic dataset tree");
  c_synth->add_option("--out", so.out)->required();
  c_synth->add_option("--labels", labels, "Comma-separated labels (default: the 23 keywords)");
  c_synth->add_option("--clips", so.clips_per_label)->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", seed);

  std::string fixture_model;
  std::string fixture_out;
  std::string fixture_words;
  auto* c_fixture = app.add_subcommand("fixture", "Write a synthetic spoken command sequence WAV");
  c_fixture->add_option("--model", fixture_model, "Model whose labels select the patterns")->required();
  c_fixture->add_option("--words", fixture_words, "Comma-separated keywords")->required();
  c_fixture->add_option("--out", fixture_out)->required();
  c_fixture->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    seed = seed_from_env(seed);
    if (c_prep->parsed()) {
      for (const auto& item : label_ratios) {
        const auto eq = item.rfind('=');
        if (eq == std::string::npos) {
          std::cerr << "--label-ratio expects LABEL=R, got '" << item << "'\n";
          return 2;
        }
        prep.label_ratios[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      }
      prep.seed = seed;
      cmd_prepare(prep, std::cout);
    } else if (c_train->parsed()) {
      tr.hyper.seed = seed;
      cmd_train(tr, std::cout);
    } else if (c_quant->parsed()) {
      cmd_quantize(qo, std::cout);
    } else if (c_eval->parsed()) {
      cmd_eval(eo, std::cout);
    } else if (c_run->parsed()) {
      run.seed = seed;
      cmd_run(run, input, std::cin, std::cout);
    } else if (c_serve->parsed()) {
      run.seed = seed;
      cmd_serve(run, std::cout);
    } else if (c_synth->parsed()) {
      so.labels = split_list(labels);
      so.seed = seed;
      cmd_synth(so, std::cout);
    } else if (c_fixture->parsed()) {
      const std::string magic_path = fixture_model;
      std::vector<std::string> model_labels;
      try {
        model_labels = kwspot::import_quantized(magic_path).class_labels;
      } catch (const kwspot::Error&) {
        model_labels = kwspot::load_model(magic_path).class_labels;
      }
      write_fixture_stream(fixture_out, model_labels, split_list(fixture_words), seed);
      std::cout << "wrote " << fixture_out << '\n';
    }
  } catch (const kwspot::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
