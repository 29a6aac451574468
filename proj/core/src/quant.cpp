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

#include "kwspot/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kwspot/error.hpp"

namespace kwspot {
namespace {

constexpr std::int32_t kQMin = -128;
constexpr std::int32_t kQMax = 127;
constexpr std::int32_t kWeightMax = 127;

std::int8_t clamp_q(std::int64_t v, std::int32_t lo = kQMin) noexcept {
  return static_cast<std::int8_t>(std::clamp<std::int64_t>(v, lo, kQMax));
}

// Rounds x / 2^shift to nearest, ties away from zero. shift in [1, 62].
std::int64_t rounding_shift(std::int64_t x, int shift) noexcept {
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  return x >= 0 ? (x + half) >> shift : -((-x + half) >> shift);
}

}  // namespace

std::int64_t round_half_away(double x) noexcept { return static_cast<std::int64_t>(std::round(x)); }

std::int8_t QuantParams::quantize(double x) const noexcept {
  const double q = std::round(x / scale) + zero_point;
  return static_cast<std::int8_t>(std::clamp(q, static_cast<double>(kQMin), static_cast<double>(kQMax)));
}

QuantParams symmetric_weight_params(std::span<const float> weights) noexcept {
  double max_abs = 0.0;
  for (float w : weights) max_abs = std::max(max_abs, std::abs(static_cast<double>(w)));
  return {max_abs > 0.0 ? max_abs / kWeightMax : 1.0, 0};
}

QuantParams activation_params(double min, double max) {
  if (!(min <= 0.0 && max >= 0.0 && max > min)) {
    throw Error(ErrorCode::kInvalidArgument, "activation range must contain 0 and be non-empty");
  }
  QuantParams p;
  p.scale = (max - min) / 255.0;
  p.zero_point = static_cast<std::int32_t>(
      std::clamp<std::int64_t>(round_half_away(-128.0 - min / p.scale), kQMin, kQMax));
  return p;
}

FixedMultiplier FixedMultiplier::from_real(double real) {
  if (!(real > 0.0) || !std::isfinite(real)) return {};
  int exp = 0;
  const double q = std::frexp(real, &exp);
  std::int64_t m = round_half_away(q * static_cast<double>(std::int64_t{1} << 31));
  if (m == (std::int64_t{1} << 31)) {
    m /= 2;
    ++exp;
  }
  return {static_cast<std::int32_t>(m), exp};
}

double FixedMultiplier::real() const noexcept {
  return std::ldexp(static_cast<double>(mantissa), exponent - 31);
}

std::int32_t FixedMultiplier::apply(std::int64_t acc) const noexcept {
  constexpr std::int64_t lo = std::numeric_limits<std::int32_t>::min();
  constexpr std::int64_t hi = std::numeric_limits<std::int32_t>::max();
  acc = std::clamp(acc, lo, hi);
  const std::int64_t prod = acc * mantissa;
  const int shift = 31 - exponent;
  std::int64_t out;
  if (shift > 62) {
    out = 0;
  } else if (shift > 0) {
    out = rounding_shift(prod, shift);
  } else {
    const int left = -shift;
    if (left >= 32) {
      out = prod == 0 ? 0 : (prod > 0 ? hi : lo);
    } else {
      const long double wide = static_cast<long double>(prod) * static_cast<long double>(std::int64_t{1} << left);
      out = wide > hi ? hi : (wide < lo ? lo : static_cast<std::int64_t>(wide));
    }
  }
  return static_cast<std::int32_t>(std::clamp(out, lo, hi));
}

CalibrationRanges calibrate(const FloatModel& model, std::span<const MfccMatrix> rep_set) {
  if (rep_set.empty()) throw Error(ErrorCode::kEmptyCalibrationSet, "no calibration samples");
  model.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();
  CalibrationRanges ranges;
  ranges.input = {inf, -inf};
  ranges.outputs.assign(model.layers.size(), {inf, -inf});
  for (const auto& features : rep_set) {
    const auto acts = forward_activations(model, model_input(model, features));
    for (std::size_t t = 0; t < acts.size(); ++t) {
      TensorRange& r = t == 0 ? ranges.input : ranges.outputs[t - 1];
      for (double v : acts[t]) {
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
      }
    }
  }
  auto widen = [](TensorRange& r) {
    r.min = std::min(r.min, 0.0);
    r.max = std::max(r.max, 0.0);
    if (r.max - r.min < kMinRangeWidth) r.max = r.min + kMinRangeWidth;
  };
  widen(ranges.input);
  for (auto& r : ranges.outputs) widen(r);
  return ranges;
}

std::string_view to_string(QuantOp op) noexcept {
  switch (op) {
    case QuantOp::kConv1d: return "conv1d";
    case QuantOp::kMaxPool1d: return "maxpool1d";
    case QuantOp::kDense: return "dense";
    case QuantOp::kRelu: return "relu";
  }
  return "?";
}

std::size_t QuantizedModel::weight_bytes() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight_bytes();
  return n;
}

void QuantizedModel::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kShapeMismatch, why); };
  if (layers.empty()) fail("quantized model has no layers");
  Shape s = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in_shape.size() != s.size()) fail("layer " + std::to_string(i) + " input size differs");
    switch (l.op) {
      case QuantOp::kConv1d: {
        if (l.kernel <= 0 || l.stride <= 0 || l.in_shape.length < l.kernel) fail("bad conv parameters");
        const int out_len = (l.in_shape.length - l.kernel) / l.stride + 1;
        if (l.out_shape.length != out_len) fail("conv output length differs");
        if (l.weights.size() != static_cast<std::size_t>(l.out_shape.channels * l.in_shape.channels * l.kernel) ||
            l.bias.size() != static_cast<std::size_t>(l.out_shape.channels)) {
          fail("conv weight size differs");
        }
        break;
      }
      case QuantOp::kDense:
        if (l.weights.size() != l.in_shape.size() * l.out_shape.size() || l.bias.size() != l.out_shape.size()) {
          fail("dense weight size differs");
        }
        break;
      case QuantOp::kMaxPool1d:
        if (l.pool <= 0 || l.out_shape.channels != l.in_shape.channels ||
            l.out_shape.length != l.in_shape.length / l.pool) {
          fail("pool shape differs");
        }
        break;
      case QuantOp::kRelu:
        if (l.out_shape.size() != l.in_shape.size()) fail("relu shape differs");
        break;
    }
    for (std::int8_t w : l.weights) {
      if (w < -kWeightMax) fail("weight -128 outside symmetric range");
    }
    s = l.out_shape;
  }
  if (s.size() != class_labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "output width differs from label count");
  }
}

QuantizedModel quantize_model(const FloatModel& model, const CalibrationRanges& ranges) {
  model.validate();
  if (ranges.outputs.size() != model.layers.size()) {
    throw Error(ErrorCode::kUncalibratedTensor,
                "ranges cover " + std::to_string(ranges.outputs.size()) + " of " +
                    std::to_string(model.layers.size()) + " layer outputs");
  }
  auto params_for = [&](const TensorRange& r, const std::string& name) {
    if (!(r.min <= 0.0 && r.max >= 0.0 && r.max > r.min) || !std::isfinite(r.min) || !std::isfinite(r.max)) {
      throw Error(ErrorCode::kUncalibratedTensor, "no usable range for " + name);
    }
    return activation_params(r.min, r.max);
  };

  const auto shapes = trace_shapes(model.layers, model.input_shape);
  QuantizedModel q;
  q.input_shape = model.input_shape;
  q.input_params = params_for(ranges.input, "input");
  q.class_labels = model.class_labels;
  q.mfcc_config = model.mfcc_config;
  q.feature_stats = model.feature_stats;

  QuantParams current = q.input_params;
  Shape in_shape = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& L = model.layers[i];
    const std::string name = std::string(to_string(L.kind)) + "[" + std::to_string(i) + "]";
    switch (L.kind) {
      case LayerKind::kConv1d:
      case LayerKind::kDense: {
        QuantizedLayer ql;
        ql.op = L.kind == LayerKind::kConv1d ? QuantOp::kConv1d : QuantOp::kDense;
        ql.kernel = L.kernel;
        ql.stride = L.stride;
        ql.in_shape = in_shape;
        ql.out_shape = shapes[i];
        std::size_t out_index = i;
        if (i + 1 < model.layers.size() && model.layers[i + 1].kind == LayerKind::kRelu) {
          ql.fused_relu = true;
          out_index = i + 1;
        }
        const auto& w = model.weights[i];
        const std::size_t n_bias = L.kind == LayerKind::kConv1d ? static_cast<std::size_t>(L.out_ch)
                                                                : static_cast<std::size_t>(L.out_dim);
        const std::size_t n_w = w.size() - n_bias;
        ql.weight_params = symmetric_weight_params(std::span<const float>(w.data(), n_w));
        ql.weights.resize(n_w);
        for (std::size_t k = 0; k < n_w; ++k) {
          ql.weights[k] = static_cast<std::int8_t>(std::clamp<std::int64_t>(
              round_half_away(w[k] / ql.weight_params.scale), -kWeightMax, kWeightMax));
        }
        ql.input_params = current;
        ql.output_params = params_for(ranges.outputs[out_index], name);
        const double acc_scale = current.scale * ql.weight_params.scale;
        ql.bias.resize(n_bias);
        for (std::size_t k = 0; k < n_bias; ++k) {
          ql.bias[k] = static_cast<std::int32_t>(round_half_away(w[n_w + k] / acc_scale));
        }
        ql.requant = FixedMultiplier::from_real(acc_scale / ql.output_params.scale);
        current = ql.output_params;
        in_shape = ql.out_shape;
        q.layers.push_back(std::move(ql));
        i = out_index;
        break;
      }
      case LayerKind::kMaxPool1d: {
        QuantizedLayer ql;
        ql.op = QuantOp::kMaxPool1d;
        ql.pool = L.pool;
        ql.in_shape = in_shape;
        ql.out_shape = shapes[i];
        ql.input_params = ql.output_params = current;
        in_shape = ql.out_shape;
        q.layers.push_back(std::move(ql));
        break;
      }
      case LayerKind::kRelu: {
        QuantizedLayer ql;
        ql.op = QuantOp::kRelu;
        ql.in_shape = in_shape;
        ql.out_shape = shapes[i];
        ql.input_params = ql.output_params = current;
        in_shape = ql.out_shape;
        q.layers.push_back(std::move(ql));
        break;
      }
      case LayerKind::kFlatten:
        in_shape = shapes[i];
        break;
      case LayerKind::kDropout:
      case LayerKind::kSoftmax:
        break;
    }
  }
  q.validate();
  return q;
}

std::vector<BufferRequest> arena_requests(const QuantizedModel& model) {
  std::vector<BufferRequest> reqs;
  reqs.push_back({model.input_shape.size(), 0, 1, "input"});
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const int t = static_cast<int>(i) + 1;
    reqs.push_back({model.layers[i].out_shape.size(), t, t + 1,
                    std::string(to_string(model.layers[i].op)) + "[" + std::to_string(i) + "]"});
  }
  return reqs;
}

ArenaPlan plan_arena(const QuantizedModel& model, std::size_t budget_bytes) {
  const auto reqs = arena_requests(model);
  ArenaPlan plan = plan_buffers(reqs);
  const std::size_t needed = plan.total_bytes + model.weight_bytes();
  if (needed > budget_bytes) {
    throw Error(ErrorCode::kBudgetExceeded,
                "model needs at least " + std::to_string(needed) + " bytes (arena " +
                    std::to_string(plan.total_bytes) + " + weights " +
                    std::to_string(model.weight_bytes()) + "); budget is " +
                    std::to_string(budget_bytes) + " bytes");
  }
  return plan;
}

MemoryReport memory_report(const QuantizedModel& model, const ArenaPlan& plan) {
  MemoryReport r;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    r.layers.push_back({std::string(to_string(l.op)) + "[" + std::to_string(i) + "]", l.weight_bytes()});
    r.weight_bytes += l.weight_bytes();
  }
  r.arena_bytes = plan.total_bytes;
  r.total_bytes = r.weight_bytes + r.arena_bytes;
  return r;
}

InferenceContext::InferenceContext(const QuantizedModel& model)
    : model_(model), plan_(plan_buffers(arena_requests(model))) {
  model_.validate();
  arena_.assign(plan_.total_bytes, 0);
  for (std::size_t i = 0; i < plan_.buffers.size(); ++i) {
    if (plan_.offsets[i] + plan_.buffers[i].size > arena_.size()) {
      throw Error(ErrorCode::kArenaOverflow, "tensor '" + plan_.buffers[i].name + "' exceeds the arena");
    }
  }
  logits_.assign(model_.num_classes(), 0.0);
  prediction_.probs.assign(model_.num_classes(), 0.0);
  std::size_t longest = 0;
  for (const auto& label : model_.class_labels) longest = std::max(longest, label.size());
  prediction_.top_label.reserve(longest);
}

std::span<std::int8_t> InferenceContext::tensor(std::size_t index) noexcept {
  return {arena_.data() + plan_.offsets[index], plan_.buffers[index].size};
}

std::span<const std::int8_t> InferenceContext::run_quantized(std::span<const std::int8_t> input) {
  auto in = tensor(0);
  if (input.size() != in.size()) {
    throw Error(ErrorCode::kShapeMismatch, "quantized input size differs from model input");
  }
  std::copy(input.begin(), input.end(), in.begin());
  execute();
  return tensor(model_.layers.size());
}

void InferenceContext::execute() {
  for (std::size_t li = 0; li < model_.layers.size(); ++li) {
    const QuantizedLayer& l = model_.layers[li];
    const auto in = tensor(li);
    const auto out = tensor(li + 1);
    const std::int32_t zp_in = l.input_params.zero_point;
    const std::int32_t zp_out = l.output_params.zero_point;
    const std::int32_t lo = l.fused_relu ? std::max(kQMin, zp_out) : kQMin;
    switch (l.op) {
      case QuantOp::kConv1d: {
        const auto C = static_cast<std::size_t>(l.in_shape.channels);
        const auto Lin = static_cast<std::size_t>(l.in_shape.length);
        const auto O = static_cast<std::size_t>(l.out_shape.channels);
        const auto Lout = static_cast<std::size_t>(l.out_shape.length);
        const auto K = static_cast<std::size_t>(l.kernel);
        const auto S = static_cast<std::size_t>(l.stride);
        for (std::size_t o = 0; o < O; ++o) {
          for (std::size_t t = 0; t < Lout; ++t) {
            std::int64_t acc = l.bias[o];
            for (std::size_t c = 0; c < C; ++c) {
              const std::int8_t* wk = &l.weights[(o * C + c) * K];
              const std::int8_t* xk = &in[c * Lin + t * S];
              for (std::size_t k = 0; k < K; ++k) {
                acc += static_cast<std::int32_t>(xk[k] - zp_in) * static_cast<std::int32_t>(wk[k]);
              }
            }
            out[o * Lout + t] = clamp_q(static_cast<std::int64_t>(zp_out) + l.requant.apply(acc), lo);
          }
        }
        break;
      }
      case QuantOp::kDense: {
        const std::size_t I = in.size();
        const std::size_t O = out.size();
        for (std::size_t o = 0; o < O; ++o) {
          std::int64_t acc = l.bias[o];
          const std::int8_t* wo = &l.weights[o * I];
          for (std::size_t i = 0; i < I; ++i) {
            acc += static_cast<std::int32_t>(in[i] - zp_in) * static_cast<std::int32_t>(wo[i]);
          }
          out[o] = clamp_q(static_cast<std::int64_t>(zp_out) + l.requant.apply(acc), lo);
        }
        break;
      }
      case QuantOp::kMaxPool1d: {
        const auto P = static_cast<std::size_t>(l.pool);
        const auto Lin = static_cast<std::size_t>(l.in_shape.length);
        const auto Lout = static_cast<std::size_t>(l.out_shape.length);
        for (std::size_t c = 0; c < static_cast<std::size_t>(l.in_shape.channels); ++c) {
          for (std::size_t t = 0; t < Lout; ++t) {
            std::int8_t m = in[c * Lin + t * P];
            for (std::size_t j = 1; j < P; ++j) m = std::max(m, in[c * Lin + t * P + j]);
            out[c * Lout + t] = m;
          }
        }
        break;
      }
      case QuantOp::kRelu:
        for (std::size_t i = 0; i < in.size(); ++i) {
          out[i] = static_cast<std::int8_t>(std::max<std::int32_t>(in[i], zp_in));
        }
        break;
    }
  }
  const auto result = tensor(model_.layers.size());
  const QuantParams& op = model_.layers.back().output_params;
  for (std::size_t i = 0; i < logits_.size(); ++i) logits_[i] = op.dequantize(result[i]);
}

const Prediction& InferenceContext::run(const MfccMatrix& features) {
  const auto frames = static_cast<std::size_t>(model_.input_shape.length);
  const auto coeffs = static_cast<std::size_t>(model_.input_shape.channels);
  if (features.values.rows() != frames || features.values.cols() != coeffs) {
    throw Error(ErrorCode::kShapeMismatch, "features do not match the model input shape");
  }
  auto in = tensor(0);
  const auto& st = model_.feature_stats;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < coeffs; ++c) {
      const double x = (features.values(t, c) - st.mean[c]) / std::max(st.stddev[c], kMinStddev);
      in[c * frames + t] = model_.input_params.quantize(x);
    }
  }
  execute();
  softmax(logits_, prediction_.probs);
  prediction_.top_index = argmax(prediction_.probs);
  prediction_.confidence = prediction_.probs[prediction_.top_index];
  prediction_.top_label.assign(model_.class_labels[prediction_.top_index]);
  return prediction_;
}

Prediction quantized_forward(const QuantizedModel& model, const MfccMatrix& features) {
  InferenceContext ctx(model);
  return ctx.run(features);
}

}  // namespace kwspot
