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

#include <cmath>
#include <fstream>

#include "kwspot/arena.hpp"
#include "kwspot/quant.hpp"
#include "kwspot/random.hpp"
#include "kwspot/synth.hpp"
#include "support/alloc_counter.hpp"
#include "support/oracles.hpp"

using namespace kwspot;
using oracle::thrown_code;

namespace {

MfccMatrix grid(std::size_t frames, std::size_t coeffs, const std::vector<double>& channel_major) {
  MfccMatrix m{Matrix(frames, coeffs), MfccConfig{}};
  for (std::size_t c = 0; c < coeffs; ++c) {
    for (std::size_t t = 0; t < frames; ++t) m.values(t, c) = channel_major[c * frames + t];
  }
  return m;
}

MfccMatrix random_features(kwspot::Rng& rng, double scale = 3.0) {
  MfccMatrix m{Matrix(98, 13), MfccConfig{}};
  for (double& v : m.values.data()) v = scale * rng.normal();
  return m;
}

std::vector<std::string> labels_n(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("k" + std::to_string(i));
  return out;
}

struct Trained {
  FloatModel model;
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
};

// Five synthetic classes, trained briefly; shared across test cases.
const Trained& trained() {
  static const Trained t = [] {
    Trained out;
    const std::vector<std::string> labels = {"BLUE", "NOISE", "RED", "UNKNOWN", "WAKE UP"};
    const auto classes = synth_classes_for(labels);
    kwspot::Rng rng(17);
    MfccExtractor ex;
    for (std::size_t c = 0; c < labels.size(); ++c) {
      for (int i = 0; i < 30; ++i) {
        auto& dst = i < 22 ? out.train : out.test;
        dst.push_back({ex.extract(synth_clip_samples(classes[c], rng)), labels[c]});
      }
    }
    TrainHyper h;
    h.epochs = 20;
    h.seed = 17;
    out.model = train(default_architecture(labels, 17), out.train, h).model;
    return out;
  }();
  return t;
}

QuantizedModel quantized(const FloatModel& m, const std::vector<LabeledExample>& rep) {
  std::vector<MfccMatrix> feats;
  for (const auto& e : rep) feats.push_back(e.features);
  return quantize_model(m, calibrate(m, feats));
}

}  // namespace

TEST_CASE("rounding and saturation") {
  CHECK(round_half_away(2.5) == 3);
  CHECK(round_half_away(-2.5) == -3);
  CHECK(round_half_away(2.4999) == 2);
  CHECK(round_half_away(-0.5) == -1);
  const QuantParams unit{1.0, 0};
  CHECK(unit.quantize(5.0) == 5);
  CHECK(unit.quantize(300.0) == 127);
  CHECK(unit.quantize(-300.0) == -128);
}

TEST_CASE("symmetric weight quantization by hand") {
  const std::vector<float> w = {-1.0f, 0.5f, 1.0f};
  const QuantParams p = symmetric_weight_params(w);
  CHECK(p.scale == doctest::Approx(1.0 / 127.0).epsilon(1e-15));
  CHECK(p.zero_point == 0);
  CHECK(p.quantize(-1.0) == -127);
  CHECK(p.quantize(0.5) == 64);
  CHECK(p.quantize(1.0) == 127);

  // Same tensor inside a model: a dense 1 -> 3 layer.
  FloatModel m = build_model({LayerSpec::dense(1, 3)}, Shape{1, 1}, {"a", "b", "c"}, 0);
  m.weights[0] = {-1.0f, 0.5f, 1.0f, 0.0f, 0.0f, 0.0f};
  std::vector<MfccMatrix> rep = {grid(1, 1, {-2.0}), grid(1, 1, {3.0})};
  const QuantizedModel q = quantize_model(m, calibrate(m, rep));
  CHECK(q.layers[0].weights == std::vector<std::int8_t>{-127, 64, 127});
}

TEST_CASE("activation params and round-trip error") {
  const QuantParams p = activation_params(-1.0, 3.0);
  CHECK(p.scale == doctest::Approx(4.0 / 255.0));
  CHECK(p.zero_point == -128 + 64);
  kwspot::Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const double lo = -rng.uniform(0.0, 50.0);
    const double hi = rng.uniform(1e-3, 50.0);
    const QuantParams q = activation_params(lo, hi);
    REQUIRE(q.zero_point >= -128);
    REQUIRE(q.zero_point <= 127);
    const double x_lo = q.dequantize(-128);
    const double x_hi = q.dequantize(127);
    for (int i = 0; i < 50; ++i) {
      const double x = rng.uniform(x_lo, x_hi);
      REQUIRE(std::abs(q.dequantize(q.quantize(x)) - x) <= q.scale / 2 + 1e-12);
    }
  }
}

TEST_CASE("fixed-point multiplier matches exact rounding") {
  kwspot::Rng rng(12);
  for (int t = 0; t < 500; ++t) {
    const double real = std::exp(rng.uniform(std::log(1e-6), std::log(50.0)));
    const FixedMultiplier fm = FixedMultiplier::from_real(real);
    REQUIRE(fm.mantissa >= (1 << 30));
    REQUIRE(std::abs(fm.real() - real) <= real * std::ldexp(1.0, -30));
    for (int i = 0; i < 20; ++i) {
      const std::int64_t acc = static_cast<std::int64_t>(rng.below(2000001)) - 1000000;
      const long double exact = static_cast<long double>(acc) * fm.real();
      const long double r = exact < 0 ? -std::floor(-exact + 0.5L) : std::floor(exact + 0.5L);
      const auto clamped = std::clamp<long double>(r, INT32_MIN, INT32_MAX);
      REQUIRE(fm.apply(acc) == static_cast<std::int32_t>(clamped));
    }
  }
}

TEST_CASE("calibration ranges") {
  FloatModel zero = default_architecture(3, 1);
  for (auto& w : zero.weights) std::fill(w.begin(), w.end(), 0.0f);
  const std::vector<MfccMatrix> silent(2, MfccMatrix{Matrix(98, 13), MfccConfig{}});
  const CalibrationRanges z = calibrate(zero, silent);
  CHECK(z.input.min == 0.0);
  CHECK(z.input.max == kMinRangeWidth);
  for (std::size_t i = 0; i + 1 < z.outputs.size(); ++i) {
    CHECK(z.outputs[i].min == 0.0);
    CHECK(z.outputs[i].max == kMinRangeWidth);
  }
  CHECK(z.outputs.back().max == doctest::Approx(1.0 / 3.0));  // softmax of zeros

  const FloatModel m = default_architecture(4, 2);
  kwspot::Rng rng(3);
  std::vector<MfccMatrix> rep;
  for (int i = 0; i < 12; ++i) rep.push_back(random_features(rng));
  const CalibrationRanges got = calibrate(m, rep);
  std::vector<TensorRange> brute(m.layers.size() + 1, TensorRange{0.0, 0.0});
  for (const auto& f : rep) {
    const auto acts = forward_activations(m, model_input(m, f));
    for (std::size_t i = 0; i < acts.size(); ++i) {
      for (double v : acts[i]) {
        brute[i].min = std::min(brute[i].min, v);
        brute[i].max = std::max(brute[i].max, v);
      }
    }
  }
  CHECK(got.input.min == brute[0].min);
  CHECK(got.input.max == brute[0].max);
  REQUIRE(got.outputs.size() == m.layers.size());
  for (std::size_t i = 0; i < got.outputs.size(); ++i) {
    CHECK(got.outputs[i].min <= 0.0);
    CHECK(got.outputs[i].max >= 0.0);
    if (brute[i + 1].max - brute[i + 1].min >= kMinRangeWidth) {
      CHECK(got.outputs[i].min == brute[i + 1].min);
      CHECK(got.outputs[i].max == brute[i + 1].max);
    }
  }
  CHECK(thrown_code([&] { calibrate(m, std::vector<MfccMatrix>{}); }) == ErrorCode::kEmptyCalibrationSet);
  CalibrationRanges partial = got;
  partial.outputs.pop_back();
  CHECK(thrown_code([&] { quantize_model(m, partial); }) == ErrorCode::kUncalibratedTensor);
}

TEST_CASE("identity layer passes values through exactly") {
  FloatModel m = build_model({LayerSpec::conv1d(1, 1, 1), LayerSpec::flatten()}, Shape{1, 8}, labels_n(8), 0);
  m.weights[0] = {1.0f, 0.0f};
  CalibrationRanges r;
  r.input = {-128.0, 127.0};
  r.outputs = {{-128.0, 127.0}, {-128.0, 127.0}};
  const QuantizedModel q = quantize_model(m, r);
  CHECK(q.input_params == QuantParams{1.0, 0});
  InferenceContext ctx(q);
  const std::vector<std::int8_t> in = {-128, -7, 0, 1, 2, 64, 100, 127};
  const auto out = ctx.run_quantized(in);
  CHECK(std::vector<std::int8_t>(out.begin(), out.end()) == in);
}

TEST_CASE("quantized conv equals float conv on representable values") {
  FloatModel m = build_model({LayerSpec::conv1d(2, 3, 3), LayerSpec::flatten()}, Shape{2, 6}, labels_n(12), 0);
  // [out][in][k] then bias; the 127 pins the weight scale to exactly 1.
  m.weights[0] = {1, -1, 0,   127, 0, 0,
                  0, 2, 1,    0, -1, 1,
                  -2, 0, 1,   1, 1, -1,
                  3, -4, 0};
  CalibrationRanges r;
  r.input = {-128.0, 127.0};
  r.outputs = {{-128.0, 127.0}, {-128.0, 127.0}};
  const QuantizedModel q = quantize_model(m, r);
  REQUIRE(q.layers[0].weight_params.scale == 1.0);
  // Channel 1 is zero where the 127 tap reads it.
  const std::vector<double> x = {1, -2, 3, 0, 2, -1,
                                 0, 0, 0, 0, 5, -3};
  const auto expect = forward_logits(m, x);
  std::vector<std::int8_t> qin(x.begin(), x.end());
  InferenceContext ctx(q);
  const auto out = ctx.run_quantized(qin);
  REQUIRE(out.size() == expect.size());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(static_cast<double>(out[i]) == expect[i]);
}

TEST_CASE("quantized model invariants and fidelity on a trained model") {
  const Trained& t = trained();
  const QuantizedModel q = quantized(t.model, t.train);
  for (const auto& l : q.layers) {
    for (auto w : l.weights) REQUIRE(w >= -127);
    CHECK(l.weight_params.zero_point == 0);
    CHECK(l.output_params.zero_point >= -128);
    CHECK(l.output_params.zero_point <= 127);
  }
  CHECK(q.layers.size() == 5);  // conv, pool, conv, pool, dense
  CHECK(q.layers[0].fused_relu);
  CHECK(!q.layers[4].fused_relu);

  // Tolerance is relative to the calibrated logit tensor range.
  const double logit_range = 255.0 * q.layers.back().output_params.scale;
  const double tol = std::max(0.1, 0.05 * logit_range);
  std::size_t agree = 0;
  InferenceContext ctx(q);
  for (const auto& e : t.test) {
    const Prediction fp = forward(t.model, e.features);
    const Prediction& qp = ctx.run(e.features);
    agree += fp.top_index == qp.top_index;
    const auto logits = forward_logits(t.model, model_input(t.model, e.features));
    const auto ql = ctx.logits();
    for (std::size_t i = 0; i < logits.size(); ++i) CHECK(std::abs(ql[i] - logits[i]) <= tol);
    CHECK(quantized_forward(q, e.features).probs == qp.probs);
  }
  CHECK(static_cast<double>(agree) / static_cast<double>(t.test.size()) >= 0.98);
}

TEST_CASE("inference does not allocate after construction") {
  const Trained& t = trained();
  const QuantizedModel q = quantized(t.model, t.train);
  InferenceContext ctx(q);
  ctx.run(t.test[0].features);
  std::vector<std::int8_t> raw(13 * 98, 3);
  std::size_t n = 0;
  {
    alloc_counter::Scope scope;
    for (const auto& e : t.test) ctx.run(e.features);
    ctx.run_quantized(raw);
    n = scope.count();
  }
  CHECK(n == 0);
}

TEST_CASE("arena planner") {
  const std::vector<BufferRequest> disjoint = {{100, 0, 1, "a"}, {100, 2, 3, "b"}};
  CHECK(plan_buffers(disjoint).total_bytes == 100);
  const std::vector<BufferRequest> overlap = {{100, 0, 2, "a"}, {100, 1, 3, "b"}};
  const ArenaPlan p = plan_buffers(overlap);
  CHECK(p.total_bytes >= 200);
  CHECK(p.valid());
  const auto e = thrown_code([&] { plan_buffers(overlap, 150); });
  CHECK(e == ErrorCode::kBudgetExceeded);

  kwspot::Rng rng(77);
  for (int t = 0; t < 300; ++t) {
    std::vector<BufferRequest> reqs;
    const std::size_t n = 1 + rng.below(12);
    std::size_t sum = 0;
    std::size_t largest = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int a = static_cast<int>(rng.below(10));
      const int b = a + static_cast<int>(rng.below(5));
      const std::size_t size = 1 + rng.below(500);
      reqs.push_back({size, a, b, "t" + std::to_string(i)});
      sum += size;
      largest = std::max(largest, size);
    }
    const ArenaPlan plan = plan_buffers(reqs);
    REQUIRE(plan.offsets.size() == n);
    REQUIRE(plan.total_bytes <= sum);
    REQUIRE(plan.total_bytes >= largest);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(plan.offsets[i] + plan.buffers[i].size <= plan.total_bytes);
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& x = plan.buffers[i];
        const auto& y = plan.buffers[j];
        const bool live_together = x.first_use <= y.last_use && y.first_use <= x.last_use;
        const bool disjoint_mem = plan.offsets[i] + x.size <= plan.offsets[j] ||
                                  plan.offsets[j] + y.size <= plan.offsets[i];
        REQUIRE((!live_together || disjoint_mem));
      }
    }
  }
}

TEST_CASE("default architecture fits the memory budget") {
  const FloatModel m = default_architecture(23, 4);
  kwspot::Rng rng(5);
  std::vector<MfccMatrix> rep;
  for (int i = 0; i < 100; ++i) rep.push_back(random_features(rng));
  const QuantizedModel q = quantize_model(m, calibrate(m, rep));
  const ArenaPlan plan = plan_arena(q, 196608);
  CHECK(plan.valid());
  const MemoryReport r = memory_report(q, plan);
  std::size_t sum = r.arena_bytes;
  for (const auto& e : r.layers) sum += e.bytes;
  CHECK(sum == r.total_bytes);
  CHECK(r.total_bytes <= 196608);

  oracle::TempDir dir;
  export_quantized(q, dir / "q.kwsq");
  const auto size = std::filesystem::file_size(dir / "q.kwsq");
  CHECK(size + plan.total_bytes <= 196608);

  try {
    plan_arena(q, 1024);
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBudgetExceeded);
    CHECK(std::string(e.what()).find("at least " + std::to_string(r.total_bytes)) != std::string::npos);
  }
}

TEST_CASE("quantized artifact round trip") {
  const Trained& t = trained();
  const QuantizedModel q = quantized(t.model, t.train);
  oracle::TempDir dir;
  export_quantized(q, dir / "q.kwsq");
  const QuantizedModel back = import_quantized(dir / "q.kwsq");
  CHECK(serialize_quantized(back) == serialize_quantized(q));
  for (const auto& e : t.test) CHECK(quantized_forward(back, e.features).probs == quantized_forward(q, e.features).probs);

  auto bytes = serialize_quantized(q);
  bytes.resize(bytes.size() - 1);
  CHECK(thrown_code([&] { deserialize_quantized(bytes); }) == ErrorCode::kCorruptArtifact);
  auto flipped = serialize_quantized(q);
  flipped[flipped.size() / 2 + 40] ^= 1;
  CHECK(thrown_code([&] { deserialize_quantized(flipped); }) == ErrorCode::kCorruptArtifact);
  CHECK(thrown_code([&] { deserialize_quantized(serialize_model(t.model)); }) == ErrorCode::kCorruptArtifact);
}
