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
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "kwspot/audio.hpp"
#include "kwspot/commands.hpp"
#include "kwspot/error.hpp"
#include "kwspot/synth.hpp"
#include "support/oracles.hpp"
#include "support/pipeline.hpp"
#include "support/published_tables.hpp"

using namespace kwspot;
using namespace kwspot::cli;
using nlohmann::json;

namespace {

std::string run_to_string(RunConfig cfg, const std::string& input, const std::string& stdin_bytes = {}) {
  std::istringstream in(stdin_bytes);
  std::ostringstream out;
  cmd_run(cfg, input, in, out);
  return out.str();
}

RunConfig fixture_config() {
  RunConfig cfg;
  cfg.model_path = pipeline::get().quant_model.string();
  return cfg;
}

std::vector<json> events(const std::string& text) {
  std::vector<json> out;
  for (const auto& l : pipeline::lines(text)) out.push_back(json::parse(l));
  return out;
}

int exit_code(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + " " KWSPOT_BIN " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("prepare over the published 23-label composition") {
  oracle::TempDir dir;
  std::vector<std::pair<std::string, std::size_t>> counts;
  std::map<std::string, double> ratios;
  for (const auto& row : tables::table2()) {
    counts.emplace_back(row.label, row.count);
    ratios[row.label] = row.test_pct / 100.0;
  }
  // 20 ms clips: only the layout matters here
  write_synthetic_dataset(dir / "data", counts, 1, 20);

  PrepareOptions po;
  po.dataset_root = dir / "data";
  po.out = dir / "split.json";
  po.seed = 5;
  po.label_ratios = ratios;
  std::ostringstream log;
  const auto split = cmd_prepare(po, log);
  std::size_t total = 0;
  for (const auto& row : tables::table2()) {
    CAPTURE(row.label);
    const auto n = split.count(row.label, Split::kTrain) + split.count(row.label, Split::kTest);
    CHECK(n == std::size_t(row.count));
    total += n;
  }
  CHECK(total == std::size_t(tables::kTable2Total));

  const auto first = pipeline::slurp(po.out);
  cmd_prepare(po, log);
  CHECK(pipeline::slurp(po.out) == first);

  PrepareOptions empty = po;
  std::filesystem::create_directories(dir / "empty");
  empty.dataset_root = dir / "empty";
  CHECK(oracle::thrown_code([&] { cmd_prepare(empty, log); }) == ErrorCode::kEmptyDataset);
}

TEST_CASE("train writes a model and one log line per epoch") {
  oracle::TempDir dir;
  std::ostringstream log;
  SynthOptions so{dir / "data", {"NOISE", "ON"}, 20, 2};
  cmd_synth(so, log);
  PrepareOptions po;
  po.dataset_root = dir / "data";
  po.out = dir / "split.json";
  cmd_prepare(po, log);

  TrainOptions to;
  to.manifest = po.out;
  to.out = dir / "m.kwsm";
  to.hyper.epochs = 12;
  to.hyper.batch = 8;
  to.hyper.lr = 3e-3;
  const auto result = cmd_train(to, log);
  CHECK(std::filesystem::exists(to.out));
  const auto lines = pipeline::lines(pipeline::slurp(dir / "m.kwsm.log.jsonl"));
  REQUIRE(lines.size() == 12);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto j = json::parse(lines[i]);
    CHECK(j.at("epoch").get<int>() == int(i) + 1);
    CHECK(j.contains("loss"));
  }
  CHECK(json::parse(lines.back()).at("accuracy").get<double>() >= 0.95);
  CHECK(result.model.class_labels == std::vector<std::string>{"NOISE", "ON"});

  TrainOptions missing = to;
  missing.manifest = dir / "nope.json";
  CHECK(oracle::thrown_code([&] { cmd_train(missing, log); }) == ErrorCode::kIo);
}

TEST_CASE("quantize report and budget") {
  const auto& p = pipeline::get();
  const auto report = json::parse(pipeline::slurp(p.quant_model.string() + ".report.json"));
  std::size_t layer_sum = 0;
  for (const auto& l : report.at("layers")) layer_sum += l.at("bytes").get<std::size_t>();
  CHECK(layer_sum == report.at("weight_bytes").get<std::size_t>());
  CHECK(report.at("total_bytes").get<std::size_t>() ==
        report.at("weight_bytes").get<std::size_t>() + report.at("arena_bytes").get<std::size_t>());
  CHECK(report.at("artifact_bytes").get<std::size_t>() == std::filesystem::file_size(p.quant_model));
  CHECK(report.at("total_bytes").get<std::size_t>() <= 196608);

  oracle::TempDir dir;
  QuantizeOptions qo;
  qo.model = p.float_model;
  qo.manifest = p.manifest;
  qo.out = dir / "q.kwsq";
  qo.budget_bytes = 1024;
  std::ostringstream log;
  CHECK(oracle::thrown_code([&] { cmd_quantize(qo, log); }) == ErrorCode::kBudgetExceeded);
}

TEST_CASE("eval of float and quantized artifacts") {
  const auto& p = pipeline::get();
  oracle::TempDir dir;
  EvalOptions eo;
  eo.models = {p.float_model, p.quant_model};
  eo.manifest = p.manifest;
  eo.out_dir = dir.path();
  std::ostringstream log;
  const auto result = cmd_eval(eo, log);
  REQUIRE(result.reports.size() == 2);
  CHECK(result.reports[0].first == "float");
  CHECK(result.reports[1].first == "quantized");
  REQUIRE(result.agreement);
  CHECK(*result.agreement >= 0.98);
  for (const char* f : {"float_report.txt", "float_report.csv", "float_confusion.csv", "quantized_report.txt",
                        "quantized_report.csv", "quantized_confusion.csv", "agreement.txt"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
  }
  const auto rows = parse_report_csv(pipeline::slurp(dir / "float_report.csv"));
  CHECK(rows.size() == p.labels.size() + 1);
  CHECK(rows.back().label == "MACRO");

  EvalOptions none = eo;
  none.models.clear();
  CHECK(oracle::thrown_code([&] { cmd_eval(none, log); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("run over the command fixture ends with a blue LED") {
  const auto out = run_to_string(fixture_config(), pipeline::get().fixture.string());
  const auto evs = events(out);
  std::vector<std::string> accepted;
  for (const auto& e : evs)
    if (e.at("kind") == "PREDICTION" && e.at("accepted").get<bool>() && e.at("label") != "UNKNOWN" &&
        e.at("label") != "NOISE")
      accepted.push_back(e.at("label"));
  CHECK(accepted == std::vector<std::string>{"WAKE UP", "BLUE", "ON", "LED"});

  json last_led;
  for (const auto& e : evs)
    if (e.at("kind") == "LED") last_led = e;
  REQUIRE(!last_led.is_null());
  CHECK(last_led.at("led").at("on") == true);
  CHECK(last_led.at("led").at("rgb") == json::parse("[[0,0,255]]"));

  // identical bytes on a second run
  CHECK(run_to_string(fixture_config(), pipeline::get().fixture.string()) == out);
}

TEST_CASE("run: debounce, silence and threshold") {
  const auto& p = pipeline::get();
  SUBCASE("no two accepted predictions of one label within the debounce window") {
    std::map<std::string, std::int64_t> last;
    for (const auto& e : events(run_to_string(fixture_config(), p.fixture.string()))) {
      if (e.at("kind") != "PREDICTION" || !e.at("accepted").get<bool>()) continue;
      const auto label = e.at("label").get<std::string>();
      const auto ts = e.at("ts").get<std::int64_t>();
      if (last.count(label)) CHECK(ts - last[label] >= 1000);
      last[label] = ts;
    }
  }
  SUBCASE("silence produces no accepted keyword") {
    oracle::TempDir dir;
    std::vector<std::int16_t> zeros(3 * 16000, 0);
    write_wav(dir / "silent.wav", zeros);
    for (const auto& e : events(run_to_string(fixture_config(), (dir / "silent.wav").string()))) {
      if (e.at("kind") != "PREDICTION" || !e.at("accepted").get<bool>()) continue;
      const auto label = e.at("label").get<std::string>();
      CHECK_MESSAGE((label == "NOISE" || label == "UNKNOWN"), label);
    }
  }
  SUBCASE("threshold 1.0 accepts nothing and the state never changes") {
    auto cfg = fixture_config();
    cfg.threshold = 1.0;
    const auto evs = events(run_to_string(cfg, p.fixture.string()));
    CHECK(!evs.empty());
    for (const auto& e : evs) {
      CHECK(e.at("kind") == "PREDICTION");
      CHECK(e.at("accepted") == false);
    }
  }
}

TEST_CASE("run: stdin PCM matches the WAV path") {
  const auto& p = pipeline::get();
  const auto clip = load_wav(p.fixture);
  std::string bytes;
  for (auto s : clip.samples) {
    bytes.push_back(char(std::uint16_t(s) & 0xff));
    bytes.push_back(char(std::uint16_t(s) >> 8));
  }
  CHECK(run_to_string(fixture_config(), "-", bytes) == run_to_string(fixture_config(), p.fixture.string()));
  CHECK(oracle::thrown_code([&] { run_to_string(fixture_config(), "-", bytes + "x"); }) ==
        ErrorCode::kBadAudioFormat);
}

TEST_CASE("run rejects audio at the wrong rate") {
  oracle::TempDir dir;
  const auto bytes = oracle::wav_bytes(std::vector<std::int16_t>(8000, 0), 1, 8000);
  std::ofstream(dir / "8k.wav", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                       std::streamsize(bytes.size()));
  CHECK(oracle::thrown_code([&] { run_to_string(fixture_config(), (dir / "8k.wav").string()); }) ==
        ErrorCode::kBadAudioFormat);
  std::ofstream(dir / "junk.wav") << "not a wav";
  CHECK(oracle::thrown_code([&] { run_to_string(fixture_config(), (dir / "junk.wav").string()); }) ==
        ErrorCode::kBadAudioFormat);
}

TEST_CASE("KWSPOT_SEED") {
  ::unsetenv("KWSPOT_SEED");
  CHECK(seed_from_env(11) == 11);
  ::setenv("KWSPOT_SEED", "1234", 1);
  CHECK(seed_from_env(11) == 1234);
  ::setenv("KWSPOT_SEED", "abc", 1);
  CHECK(oracle::thrown_code([] { seed_from_env(11); }) == ErrorCode::kInvalidArgument);
  ::unsetenv("KWSPOT_SEED");
}

TEST_CASE("binary exit codes") {
  const auto& p = pipeline::get();
  CHECK(exit_code("--help") == 0);
  CHECK(exit_code("") == 2);
  CHECK(exit_code("frobnicate") == 2);
  CHECK(exit_code("run --threshold") == 2);
  CHECK(exit_code("run --model " + p.quant_model.string() + " --input " + p.fixture.string()) == 0);
  CHECK(exit_code("run --model /nonexistent.kwsq --input " + p.fixture.string()) == 1);
  CHECK(exit_code("prepare --dataset-root /nonexistent --out /tmp/x.json") == 1);

  // same seed from the environment gives the same split
  oracle::TempDir dir;
  const auto prep = [&](const std::string& out, const std::string& seed) {
    return exit_code("prepare --dataset-root " + p.data.string() + " --out " + (dir / out).string(),
                     "KWSPOT_SEED=" + seed);
  };
  CHECK(prep("a.json", "9") == 0);
  CHECK(prep("b.json", "9") == 0);
  CHECK(prep("c.json", "10") == 0);
  CHECK(pipeline::slurp(dir / "a.json") == pipeline::slurp(dir / "b.json"));
  CHECK(pipeline::slurp(dir / "a.json") != pipeline::slurp(dir / "c.json"));
}
