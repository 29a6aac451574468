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


#include <benchmark/benchmark.h>

#include <vector>

#include "kwspot/features.hpp"
#include "kwspot/interpreter.hpp"
#include "kwspot/model.hpp"
#include "kwspot/quant.hpp"
#include "kwspot/random.hpp"
#include "kwspot/synth.hpp"

namespace {

using namespace kwspot;

std::vector<std::int16_t> sample_clip(std::uint64_t seed) {
  Rng rng(seed);
  return synth_clip_samples(SynthClass{SynthKind::kPattern, seed % kSynthPatternCount}, rng);
}

struct Models {
  FloatModel fmodel;
  QuantizedModel qmodel;
  MfccMatrix features;
};

const Models& models() {
  static const Models m = [] {
    Models r{default_architecture(23, 1), {}, {}};
    MfccExtractor ex(r.fmodel.mfcc_config);
    std::vector<MfccMatrix> rep;
    for (std::uint64_t s = 0; s < 32; ++s) rep.push_back(ex.extract(sample_clip(s)));
    r.qmodel = quantize_model(r.fmodel, calibrate(r.fmodel, rep));
    r.features = rep.front();
    return r;
  }();
  return m;
}

void BM_MfccExtract(benchmark::State& state) {
  const auto clip = sample_clip(3);
  MfccExtractor ex;
  for (auto _ : state) benchmark::DoNotOptimize(ex.extract(clip));
}
BENCHMARK(BM_MfccExtract);

void BM_RealFft512(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> frame(400), out(257);
  for (auto& v : frame) v = rng.uniform(-1.0, 1.0);
  RealFft fft(512);
  for (auto _ : state) {
    fft.magnitude(frame, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_RealFft512);

void BM_FloatForward(benchmark::State& state) {
  const auto& m = models();
  for (auto _ : state) benchmark::DoNotOptimize(forward(m.fmodel, m.features));
}
BENCHMARK(BM_FloatForward);

void BM_QuantizedInference(benchmark::State& state) {
  const auto& m = models();
  InferenceContext ctx(m.qmodel);
  for (auto _ : state) benchmark::DoNotOptimize(ctx.run(m.features).top_index);
}
BENCHMARK(BM_QuantizedInference);

void BM_InterpreterStep(benchmark::State& state) {
  const std::vector<const char*> words = {"WAKE UP", "RED", "AND", "BLUE", "ON", "LED", "BLINK", "CANCEL"};
  std::vector<CommandEvent> events;
  std::int64_t ts = 0;
  for (const char* w : words) events.push_back(CommandEvent::from_label(w, 0.9, ts += 500));
  for (auto _ : state) {
    InterpreterState s;
    for (const auto& e : events) s = step(s, e).state;
    benchmark::DoNotOptimize(s.color);
  }
}
BENCHMARK(BM_InterpreterStep);

}  // namespace

BENCHMARK_MAIN();
