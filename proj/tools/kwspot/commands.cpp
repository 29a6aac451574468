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

#include "kwspot/commands.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "kwspot/audio.hpp"
#include "kwspot/error.hpp"
#include "kwspot/interpreter.hpp"
#include "kwspot/server.hpp"
#include "kwspot/synth.hpp"

namespace kwspot::cli {
namespace fs = std::filesystem;
namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

std::string magic_of(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  return std::string(magic, static_cast<std::size_t>(in.gcount()));
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

DemoServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

SplitManifest load_split_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kIo, "manifest not found: " + path.string());
  return SplitManifest::from_json(read_text(path));
}

std::vector<LabeledExample> load_examples(const SplitManifest& manifest, Split split,
                                          const MfccConfig& config, const fs::path& root_override) {
  const fs::path root = root_override.empty() ? manifest.root : root_override;
  MfccExtractor extractor(config);
  std::vector<LabeledExample> out;
  for (const auto& [label, entries] : manifest.labels) {
    for (const auto& e : entries) {
      if (e.split != split) continue;
      const AudioClip clip = normalize_length(load_wav(root / e.path));
      out.push_back({extractor.extract(clip.samples), label});
    }
  }
  return out;
}

SplitManifest cmd_prepare(const PrepareOptions& opts, std::ostream& log) {
  const DatasetManifest dataset = ingest_dataset(opts.dataset_root);
  SplitManifest split = split_dataset(dataset, opts.ratio, opts.seed, opts.label_ratios);
  write_text(opts.out, split.to_json());
  std::size_t train = 0;
  std::size_t test = 0;
  for (const auto& label : split.label_names()) {
    train += split.count(label, Split::kTrain);
    test += split.count(label, Split::kTest);
  }
  log << "prepared " << split.labels.size() << " labels, " << train << " train / " << test
      << " test clips";
  if (!dataset.unreadable.empty()) log << ", skipped " << dataset.unreadable.size() << " unreadable";
  log << " -> " << opts.out.string() << '\n';
  return split;
}

TrainResult cmd_train(const TrainOptions& opts, std::ostream& log) {
  const SplitManifest manifest = load_split_manifest(opts.manifest);
  FloatModel model = default_architecture(manifest.label_names(), opts.hyper.seed);
  const auto train_set = load_examples(manifest, Split::kTrain, model.mfcc_config, opts.dataset_root);
  TrainResult result = train(std::move(model), train_set, opts.hyper);
  save_model(result.model, opts.out);

  std::string lines;
  for (const auto& e : result.log) {
    nlohmann::ordered_json j = {{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}};
    lines += j.dump() + "\n";
  }
  write_text(opts.log_path.empty() ? with_suffix(opts.out, ".log.jsonl") : opts.log_path, lines);
  const auto& last = result.log.back();
  log << "trained " << result.log.size() << " epochs on " << train_set.size()
      << " clips; final loss " << fixed(last.loss, 4) << ", train accuracy "
      << fixed(last.accuracy, 4) << " -> " << opts.out.string() << '\n';
  return result;
}

QuantizeResult cmd_quantize(const QuantizeOptions& opts, std::ostream& log) {
  const FloatModel model = load_model(opts.model);
  const SplitManifest manifest = load_split_manifest(opts.manifest);
  auto train_set = load_examples(manifest, Split::kTrain, model.mfcc_config, opts.dataset_root);

  // Evenly strided subset keeps every class represented.
  std::vector<MfccMatrix> rep;
  const std::size_t n = train_set.size();
  const std::size_t take = std::min(n, opts.calibration_clips);
  for (std::size_t i = 0; i < take; ++i) rep.push_back(std::move(train_set[i * n / take].features));

  QuantizeResult r;
  r.model = quantize_model(model, calibrate(model, rep));
  r.plan = plan_arena(r.model, opts.budget_bytes);
  r.memory = memory_report(r.model, r.plan);
  export_quantized(r.model, opts.out);
  r.artifact_bytes = static_cast<std::size_t>(fs::file_size(opts.out));

  nlohmann::ordered_json rep_json;
  rep_json["layers"] = nlohmann::ordered_json::array();
  for (const auto& e : r.memory.layers) rep_json["layers"].push_back({{"name", e.name}, {"bytes", e.bytes}});
  rep_json["weight_bytes"] = r.memory.weight_bytes;
  rep_json["arena_bytes"] = r.memory.arena_bytes;
  rep_json["total_bytes"] = r.memory.total_bytes;
  rep_json["artifact_bytes"] = r.artifact_bytes;
  rep_json["budget_bytes"] = opts.budget_bytes;
  write_text(opts.report_path.empty() ? with_suffix(opts.out, ".report.json") : opts.report_path,
             rep_json.dump(2) + "\n");

  for (const auto& e : r.memory.layers) log << std::left << std::setw(16) << e.name << e.bytes << '\n';
  log << std::left << std::setw(16) << "arena" << r.memory.arena_bytes << '\n';
  log << std::left << std::setw(16) << "total" << r.memory.total_bytes << " of " << opts.budget_bytes
      << " (artifact file " << r.artifact_bytes << " bytes) -> " << opts.out.string() << '\n';
  return r;
}

EvalResult cmd_eval(const EvalOptions& opts, std::ostream& log) {
  if (opts.models.empty() || opts.models.size() > 2) {
    throw Error(ErrorCode::kInvalidArgument, "eval takes one or two model artifacts");
  }
  const SplitManifest manifest = load_split_manifest(opts.manifest);

  struct Loaded {
    std::string name;
    std::optional<FloatModel> fmodel;
    std::optional<QuantizedModel> qmodel;
  };
  std::vector<Loaded> loaded;
  for (const auto& path : opts.models) {
    Loaded l;
    const std::string magic = magic_of(path);
    if (magic == "KWSM") {
      l.fmodel = load_model(path);
      l.name = "float";
    } else if (magic == "KWSQ") {
      l.qmodel = import_quantized(path);
      l.name = "quantized";
    } else {
      throw Error(ErrorCode::kCorruptArtifact, path.string() + " is not a kwspot artifact");
    }
    for (const auto& other : loaded) {
      if (other.name == l.name) l.name += "2";
    }
    loaded.push_back(std::move(l));
  }

  const MfccConfig& mfcc = loaded[0].fmodel ? loaded[0].fmodel->mfcc_config : loaded[0].qmodel->mfcc_config;
  const auto test_set = load_examples(manifest, Split::kTest, mfcc, opts.dataset_root);
  fs::create_directories(opts.out_dir);

  EvalResult result;
  std::vector<std::vector<std::size_t>> predictions;
  for (const auto& l : loaded) {
    const std::vector<std::string>& labels = l.fmodel ? l.fmodel->class_labels : l.qmodel->class_labels;
    std::vector<std::size_t> preds;
    Classifier classify;
    std::unique_ptr<InferenceContext> ctx;
    if (l.fmodel) {
      classify = [&](const MfccMatrix& m) { return forward(*l.fmodel, m).top_index; };
    } else {
      ctx = std::make_unique<InferenceContext>(*l.qmodel);
      classify = [&](const MfccMatrix& m) { return ctx->run(m).top_index; };
    }
    const Classifier recording = [&](const MfccMatrix& m) {
      const std::size_t p = classify(m);
      preds.push_back(p);
      return p;
    };
    const ConfusionMatrix cm = confusion(labels, recording, test_set);
    const EvalReport report = metrics(cm);
    write_text(opts.out_dir / (l.name + "_report.txt"), render_table(report));
    write_text(opts.out_dir / (l.name + "_report.csv"), render_csv(report));
    write_text(opts.out_dir / (l.name + "_confusion.csv"), cm.to_csv());
    log << "[" << l.name << "] accuracy " << fixed(report.accuracy, 4) << ", macro F1 "
        << fixed(report.macro_f1, 4) << '\n';
    result.reports.emplace_back(l.name, report);
    predictions.push_back(std::move(preds));
  }

  if (predictions.size() == 2) {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < predictions[0].size(); ++i) agree += predictions[0][i] == predictions[1][i];
    result.agreement = predictions[0].empty() ? 1.0
                                              : static_cast<double>(agree) / static_cast<double>(predictions[0].size());
    write_text(opts.out_dir / "agreement.txt",
               "agreement " + fixed(100.0 * *result.agreement, 2) + "% (" + std::to_string(agree) + "/" +
                   std::to_string(predictions[0].size()) + ")\n");
    log << "argmax agreement " << fixed(100.0 * *result.agreement, 2) << "% (" << agree << "/"
        << predictions[0].size() << ")\n";
  }
  return result;
}

void cmd_run(const RunConfig& config, const std::string& input, std::istream& stdin_source,
             std::ostream& out) {
  const QuantizedModel model = import_quantized(config.model_path);
  plan_arena(model, config.budget_bytes);
  StreamingSession session(model, config);
  const EventSink sink = [&](const ServiceEvent& ev) { out << ev.to_json() << '\n'; };

  if (input != "-") {
    AudioClip clip;
    try {
      clip = load_wav(input);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kIo) throw;
      throw Error(ErrorCode::kBadAudioFormat, e.what());
    }
    if (clip.sample_rate_hz != kSampleRateHz) {
      throw Error(ErrorCode::kBadAudioFormat,
                  input + " is " + std::to_string(clip.sample_rate_hz) + " Hz; 16000 Hz required");
    }
    session.feed(clip.samples, sink);
    out.flush();
    return;
  }

  std::vector<char> bytes(8192);
  std::vector<std::int16_t> samples;
  std::optional<std::uint8_t> carry;
  while (stdin_source) {
    stdin_source.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    const auto n = static_cast<std::size_t>(stdin_source.gcount());
    if (n == 0) break;
    samples.clear();
    std::size_t i = 0;
    if (carry) {
      samples.push_back(static_cast<std::int16_t>(*carry | (static_cast<std::uint8_t>(bytes[0]) << 8)));
      carry.reset();
      i = 1;
    }
    for (; i + 1 < n; i += 2) {
      samples.push_back(static_cast<std::int16_t>(static_cast<std::uint8_t>(bytes[i]) |
                                                  (static_cast<std::uint8_t>(bytes[i + 1]) << 8)));
    }
    if (i < n) carry = static_cast<std::uint8_t>(bytes[i]);
    session.feed(samples, sink);
    out.flush();
  }
  if (carry) throw Error(ErrorCode::kBadAudioFormat, "PCM stream ended on an odd byte");
}

void cmd_serve(const RunConfig& config, std::ostream& log) {
  const QuantizedModel model = import_quantized(config.model_path);
  plan_arena(model, config.budget_bytes);
  DemoServer server(model, config);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  log << "listening on ws://127.0.0.1:" << server.port() << '\n' << std::flush;
  server.serve();
  g_server = nullptr;
}

void cmd_synth(const SynthOptions& opts, std::ostream& log) {
  std::vector<std::string> labels = opts.labels;
  if (labels.empty()) {
    for (Keyword k : all_keywords()) labels.emplace_back(keyword_name(k));
  }
  std::sort(labels.begin(), labels.end());
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (const auto& l : labels) counts.emplace_back(l, opts.clips_per_label);
  write_synthetic_dataset(opts.out, counts, opts.seed);
  log << "wrote " << labels.size() << " x " << opts.clips_per_label << " clips -> " << opts.out.string()
      << '\n';
}

void write_fixture_stream(const fs::path& out, const std::vector<std::string>& model_labels,
                          const std::vector<std::string>& keywords, std::uint64_t seed) {
  const auto classes = synth_classes_for(model_labels);
  std::vector<std::size_t> patterns;
  for (const auto& word : keywords) {
    const Keyword k = parse_keyword(word);
    bool found = false;
    for (std::size_t i = 0; i < model_labels.size(); ++i) {
      const auto parsed = try_parse_keyword(model_labels[i]);
      if (parsed && *parsed == k && classes[i].kind == SynthKind::kPattern) {
        patterns.push_back(classes[i].pattern);
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorCode::kUnknownKeyword, "model has no spoken pattern for '" + word + "'");
  }
  Rng rng(seed);
  const SynthStream stream = synth_command_stream(patterns, rng);
  write_wav(out, stream.samples);
}

}  // namespace kwspot::cli
