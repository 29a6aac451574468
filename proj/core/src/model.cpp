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

#include "kwspot/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "kwspot/error.hpp"
#include "kwspot/random.hpp"

namespace kwspot {

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kMaxPool1d: return "maxpool1d";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto k : {LayerKind::kConv1d, LayerKind::kMaxPool1d, LayerKind::kFlatten,
                 LayerKind::kDropout, LayerKind::kDense, LayerKind::kRelu, LayerKind::kSoftmax}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::kCorruptArtifact, "unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv1d(int in_ch, int out_ch, int kernel, int stride) {
  LayerSpec s;
  s.kind = LayerKind::kConv1d;
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::maxpool1d(int size) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool1d;
  s.pool = size;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::kFlatten;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::dense(int in_dim, int out_dim) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in_dim = in_dim;
  s.out_dim = out_dim;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::kSoftmax;
  return s;
}

std::size_t LayerSpec::param_count() const noexcept {
  switch (kind) {
    case LayerKind::kConv1d:
      return static_cast<std::size_t>(out_ch) * static_cast<std::size_t>(in_ch * kernel + 1);
    case LayerKind::kDense:
      return static_cast<std::size_t>(out_dim) * static_cast<std::size_t>(in_dim + 1);
    default:
      return 0;
  }
}

Shape LayerSpec::output_shape(Shape in) const {
  auto fail = [&](const std::string& why) -> Shape {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(to_string(kind)) + ": " + why + " (input " +
                    std::to_string(in.channels) + "x" + std::to_string(in.length) + ")");
  };
  switch (kind) {
    case LayerKind::kConv1d:
      if (in_ch <= 0 || out_ch <= 0 || kernel <= 0 || stride <= 0) return fail("bad parameters");
      if (in.channels != in_ch) return fail("channel count differs");
      if (in.length < kernel) return fail("sequence shorter than kernel");
      return {out_ch, (in.length - kernel) / stride + 1};
    case LayerKind::kMaxPool1d:
      if (pool <= 0) return fail("bad pool size");
      if (in.length < pool) return fail("sequence shorter than pool");
      return {in.channels, in.length / pool};
    case LayerKind::kFlatten:
      return {static_cast<int>(in.size()), 1};
    case LayerKind::kDense:
      if (in_dim <= 0 || out_dim <= 0) return fail("bad parameters");
      if (static_cast<int>(in.size()) != in_dim) return fail("input width differs");
      return {out_dim, 1};
    case LayerKind::kDropout:
      if (!(rate >= 0.0 && rate < 1.0)) return fail("rate outside [0, 1)");
      return in;
    case LayerKind::kRelu:
    case LayerKind::kSoftmax:
      return in;
  }
  return in;
}

std::vector<Shape> trace_shapes(std::span<const LayerSpec> layers, Shape input) {
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape s = input;
  for (const auto& layer : layers) {
    s = layer.output_shape(s);
    shapes.push_back(s);
  }
  return shapes;
}

std::size_t FloatModel::param_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.param_count();
  return n;
}

void FloatModel::validate() const {
  if (layers.empty()) throw Error(ErrorCode::kShapeMismatch, "model has no layers");
  const auto shapes = trace_shapes(layers, input_shape);
  if (weights.size() != layers.size()) {
    throw Error(ErrorCode::kShapeMismatch, "weights/layers count differs");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (weights[i].size() != layers[i].param_count()) {
      throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(i) + " weight size differs");
    }
    if (layers[i].kind == LayerKind::kSoftmax && i + 1 != layers.size()) {
      throw Error(ErrorCode::kShapeMismatch, "softmax must be the last layer");
    }
  }
  if (shapes.back().size() != class_labels.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "output width " + std::to_string(shapes.back().size()) + " != " +
                    std::to_string(class_labels.size()) + " labels");
  }
  if (feature_stats.mean.size() != static_cast<std::size_t>(input_shape.channels) ||
      feature_stats.stddev.size() != static_cast<std::size_t>(input_shape.channels)) {
    throw Error(ErrorCode::kShapeMismatch, "feature stats width differs from input channels");
  }
}

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void softmax(std::span<const double> logits, std::span<double> out) noexcept {
  if (logits.empty()) return;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
}

namespace {

using Params = std::vector<std::vector<double>>;

std::size_t logit_layer_count(const std::vector<LayerSpec>& layers) {
  return (!layers.empty() && layers.back().kind == LayerKind::kSoftmax) ? layers.size() - 1
                                                                         : layers.size();
}

Params to_double(const FloatModel& model) {
  Params p(model.weights.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i].assign(model.weights[i].begin(), model.weights[i].end());
  return p;
}

// Activation tape for one sample: acts[0] = input, acts[i+1] = layer i output.
struct Tape {
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> dropout_scale;
};

void layer_forward(const LayerSpec& L, Shape in, Shape out, std::span<const double> w,
                   const std::vector<double>& x, std::vector<double>& y,
                   std::vector<double>* dropout_scale, Rng* rng) {
  y.assign(out.size(), 0.0);
  switch (L.kind) {
    case LayerKind::kConv1d: {
      const std::size_t K = static_cast<std::size_t>(L.kernel);
      const std::size_t C = static_cast<std::size_t>(L.in_ch);
      const std::size_t Lin = static_cast<std::size_t>(in.length);
      const std::size_t Lout = static_cast<std::size_t>(out.length);
      const std::size_t S = static_cast<std::size_t>(L.stride);
      const std::size_t n_w = static_cast<std::size_t>(L.out_ch) * C * K;
      for (std::size_t o = 0; o < static_cast<std::size_t>(L.out_ch); ++o) {
        for (std::size_t t = 0; t < Lout; ++t) {
          double acc = w[n_w + o];
          for (std::size_t c = 0; c < C; ++c) {
            const double* wk = &w[(o * C + c) * K];
            const double* xk = &x[c * Lin + t * S];
            for (std::size_t k = 0; k < K; ++k) acc += wk[k] * xk[k];
          }
          y[o * Lout + t] = acc;
        }
      }
      break;
    }
    case LayerKind::kMaxPool1d: {
      const std::size_t P = static_cast<std::size_t>(L.pool);
      const std::size_t Lin = static_cast<std::size_t>(in.length);
      const std::size_t Lout = static_cast<std::size_t>(out.length);
      for (std::size_t c = 0; c < static_cast<std::size_t>(in.channels); ++c) {
        for (std::size_t t = 0; t < Lout; ++t) {
          double m = x[c * Lin + t * P];
          for (std::size_t j = 1; j < P; ++j) m = std::max(m, x[c * Lin + t * P + j]);
          y[c * Lout + t] = m;
        }
      }
      break;
    }
    case LayerKind::kDense: {
      const std::size_t I = static_cast<std::size_t>(L.in_dim);
      const std::size_t O = static_cast<std::size_t>(L.out_dim);
      for (std::size_t o = 0; o < O; ++o) {
        double acc = w[O * I + o];
        const double* wo = &w[o * I];
        for (std::size_t i = 0; i < I; ++i) acc += wo[i] * x[i];
        y[o] = acc;
      }
      break;
    }
    case LayerKind::kRelu:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case LayerKind::kDropout:
      if (rng != nullptr && L.rate > 0.0) {
        const double keep = 1.0 - L.rate;
        dropout_scale->assign(x.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
          (*dropout_scale)[i] = rng->uniform() < keep ? 1.0 / keep : 0.0;
          y[i] = x[i] * (*dropout_scale)[i];
        }
      } else {
        y = x;
        if (dropout_scale != nullptr) dropout_scale->clear();
      }
      break;
    case LayerKind::kFlatten:
      y = x;
      break;
    case LayerKind::kSoftmax:
      softmax(x, y);
      break;
  }
}

// Runs layers [0, n_layers) and fills the tape. `rng` enables dropout.
void run_forward(const FloatModel& model, const std::vector<Shape>& shapes, const Params& params,
                 std::span<const double> input, std::size_t n_layers, Tape& tape, Rng* rng) {
  tape.acts.resize(n_layers + 1);
  tape.dropout_scale.resize(n_layers);
  tape.acts[0].assign(input.begin(), input.end());
  Shape in = model.input_shape;
  for (std::size_t i = 0; i < n_layers; ++i) {
    layer_forward(model.layers[i], in, shapes[i], params[i], tape.acts[i], tape.acts[i + 1],
                  &tape.dropout_scale[i], rng);
    in = shapes[i];
  }
}

// Backpropagates `grad_out` (gradient w.r.t. the output of layer n_layers-1)
// and accumulates parameter gradients into `grads`.
void run_backward(const FloatModel& model, const std::vector<Shape>& shapes, const Params& params,
                  std::size_t n_layers, const Tape& tape, std::vector<double> grad_out,
                  Params& grads) {
  std::vector<double> grad_in;
  for (std::size_t li = n_layers; li-- > 0;) {
    const LayerSpec& L = model.layers[li];
    const Shape in = li == 0 ? model.input_shape : shapes[li - 1];
    const Shape out = shapes[li];
    const auto& x = tape.acts[li];
    const auto& w = params[li];
    auto& g = grads[li];
    grad_in.assign(in.size(), 0.0);
    switch (L.kind) {
      case LayerKind::kConv1d: {
        const std::size_t K = static_cast<std::size_t>(L.kernel);
        const std::size_t C = static_cast<std::size_t>(L.in_ch);
        const std::size_t Lin = static_cast<std::size_t>(in.length);
        const std::size_t Lout = static_cast<std::size_t>(out.length);
        const std::size_t S = static_cast<std::size_t>(L.stride);
        const std::size_t n_w = static_cast<std::size_t>(L.out_ch) * C * K;
        for (std::size_t o = 0; o < static_cast<std::size_t>(L.out_ch); ++o) {
          for (std::size_t t = 0; t < Lout; ++t) {
            const double go = grad_out[o * Lout + t];
            if (go == 0.0) continue;
            g[n_w + o] += go;
            for (std::size_t c = 0; c < C; ++c) {
              const std::size_t wbase = (o * C + c) * K;
              const std::size_t xbase = c * Lin + t * S;
              for (std::size_t k = 0; k < K; ++k) {
                g[wbase + k] += go * x[xbase + k];
                grad_in[xbase + k] += go * w[wbase + k];
              }
            }
          }
        }
        break;
      }
      case LayerKind::kMaxPool1d: {
        const std::size_t P = static_cast<std::size_t>(L.pool);
        const std::size_t Lin = static_cast<std::size_t>(in.length);
        const std::size_t Lout = static_cast<std::size_t>(out.length);
        for (std::size_t c = 0; c < static_cast<std::size_t>(in.channels); ++c) {
          for (std::size_t t = 0; t < Lout; ++t) {
            std::size_t best = c * Lin + t * P;
            for (std::size_t j = 1; j < P; ++j) {
              if (x[c * Lin + t * P + j] > x[best]) best = c * Lin + t * P + j;
            }
            grad_in[best] += grad_out[c * Lout + t];
          }
        }
        break;
      }
      case LayerKind::kDense: {
        const std::size_t I = static_cast<std::size_t>(L.in_dim);
        const std::size_t O = static_cast<std::size_t>(L.out_dim);
        for (std::size_t o = 0; o < O; ++o) {
          const double go = grad_out[o];
          g[O * I + o] += go;
          if (go == 0.0) continue;
          for (std::size_t i = 0; i < I; ++i) {
            g[o * I + i] += go * x[i];
            grad_in[i] += go * w[o * I + i];
          }
        }
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < x.size(); ++i) grad_in[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
        break;
      case LayerKind::kDropout:
        if (tape.dropout_scale[li].empty()) {
          grad_in = grad_out;
        } else {
          for (std::size_t i = 0; i < x.size(); ++i) grad_in[i] = grad_out[i] * tape.dropout_scale[li][i];
        }
        break;
      case LayerKind::kFlatten:
        grad_in = grad_out;
        break;
      case LayerKind::kSoftmax:
        throw Error(ErrorCode::kShapeMismatch, "softmax backward is folded into the loss");
    }
    grad_out.swap(grad_in);
  }
}

// Cross-entropy of softmax(logits) against `label`; fills probs.
double cross_entropy(std::span<const double> logits, std::size_t label, std::vector<double>& probs) {
  probs.resize(logits.size());
  softmax(logits, probs);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return (std::log(sum) + mx) - logits[label];
}

Params zero_like(const Params& p) {
  Params z(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) z[i].assign(p[i].size(), 0.0);
  return z;
}

double loss_for(const FloatModel& model, const std::vector<Shape>& shapes, const Params& params,
                std::span<const double> input, std::size_t label) {
  Tape tape;
  const std::size_t n = logit_layer_count(model.layers);
  run_forward(model, shapes, params, input, n, tape, nullptr);
  std::vector<double> probs;
  return cross_entropy(tape.acts[n], label, probs);
}

}  // namespace

FloatModel build_model(std::vector<LayerSpec> layers, Shape input_shape,
                       std::vector<std::string> labels, std::uint64_t seed) {
  FloatModel model;
  model.input_shape = input_shape;
  model.layers = std::move(layers);
  model.class_labels = std::move(labels);
  model.feature_stats = FeatureStats::identity(static_cast<std::size_t>(input_shape.channels));
  (void)trace_shapes(model.layers, input_shape);

  Rng rng(seed);
  model.weights.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& L = model.layers[i];
    auto& w = model.weights[i];
    w.assign(L.param_count(), 0.0f);
    std::size_t n_weights = 0;
    int fan_in = 0;
    if (L.kind == LayerKind::kConv1d) {
      fan_in = L.in_ch * L.kernel;
      n_weights = static_cast<std::size_t>(L.out_ch) * static_cast<std::size_t>(fan_in);
    } else if (L.kind == LayerKind::kDense) {
      fan_in = L.in_dim;
      n_weights = static_cast<std::size_t>(L.out_dim) * static_cast<std::size_t>(fan_in);
    }
    if (fan_in == 0) continue;
    const double limit = std::sqrt(6.0 / fan_in);
    for (std::size_t k = 0; k < n_weights; ++k) w[k] = static_cast<float>(rng.uniform(-limit, limit));
  }
  model.validate();
  return model;
}

FloatModel default_architecture(std::vector<std::string> labels, std::uint64_t seed) {
  const int n_classes = static_cast<int>(labels.size());
  if (n_classes < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  const MfccConfig mfcc;
  const Shape input{mfcc.n_coeffs, static_cast<int>(mfcc.frame_count())};
  std::vector<LayerSpec> layers{
      LayerSpec::conv1d(input.channels, 8, 3), LayerSpec::relu(), LayerSpec::maxpool1d(2),
      LayerSpec::conv1d(8, 16, 3),             LayerSpec::relu(), LayerSpec::maxpool1d(2),
      LayerSpec::flatten(),                    LayerSpec::dropout(0.25),
  };
  const auto shapes = trace_shapes(layers, input);
  layers.push_back(LayerSpec::dense(static_cast<int>(shapes.back().size()), n_classes));
  layers.push_back(LayerSpec::softmax());
  FloatModel model = build_model(std::move(layers), input, std::move(labels), seed);
  model.mfcc_config = mfcc;
  return model;
}

FloatModel default_architecture(int n_classes, std::uint64_t seed) {
  if (n_classes < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  std::vector<std::string> labels;
  for (int i = 0; i < n_classes; ++i) labels.push_back("class" + std::to_string(i));
  return default_architecture(std::move(labels), seed);
}

std::vector<double> model_input(const FloatModel& model, const MfccMatrix& features) {
  const auto frames = static_cast<std::size_t>(model.input_shape.length);
  const auto coeffs = static_cast<std::size_t>(model.input_shape.channels);
  if (features.values.rows() != frames || features.values.cols() != coeffs) {
    throw Error(ErrorCode::kShapeMismatch,
                "features " + std::to_string(features.values.rows()) + "x" +
                    std::to_string(features.values.cols()) + "; model expects " +
                    std::to_string(frames) + "x" + std::to_string(coeffs));
  }
  std::vector<double> x(frames * coeffs);
  const auto& st = model.feature_stats;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < coeffs; ++c) {
      x[c * frames + t] = (features.values(t, c) - st.mean[c]) / std::max(st.stddev[c], kMinStddev);
    }
  }
  return x;
}

std::vector<double> forward_logits(const FloatModel& model, std::span<const double> input) {
  if (input.size() != model.input_shape.size()) {
    throw Error(ErrorCode::kShapeMismatch, "input size differs from model input");
  }
  const auto shapes = trace_shapes(model.layers, model.input_shape);
  const Params params = to_double(model);
  Tape tape;
  const std::size_t n = logit_layer_count(model.layers);
  run_forward(model, shapes, params, input, n, tape, nullptr);
  return tape.acts[n];
}

std::vector<std::vector<double>> forward_activations(const FloatModel& model,
                                                     std::span<const double> input) {
  if (input.size() != model.input_shape.size()) {
    throw Error(ErrorCode::kShapeMismatch, "input size differs from model input");
  }
  const auto shapes = trace_shapes(model.layers, model.input_shape);
  const Params params = to_double(model);
  Tape tape;
  run_forward(model, shapes, params, input, model.layers.size(), tape, nullptr);
  return tape.acts;
}

Prediction forward(const FloatModel& model, const MfccMatrix& features) {
  const auto logits = forward_logits(model, model_input(model, features));
  Prediction p;
  p.probs.resize(logits.size());
  softmax(logits, p.probs);
  p.top_index = argmax(p.probs);
  p.confidence = p.probs[p.top_index];
  if (p.top_index < model.class_labels.size()) p.top_label = model.class_labels[p.top_index];
  return p;
}

Gradients compute_gradients(const FloatModel& model, std::span<const double> input,
                            std::size_t label, const std::vector<std::vector<double>>& params) {
  model.validate();
  if (label >= model.num_classes()) throw Error(ErrorCode::kLabelMismatch, "label index out of range");
  const auto shapes = trace_shapes(model.layers, model.input_shape);
  const Params p = params.empty() ? to_double(model) : params;
  Tape tape;
  const std::size_t n = logit_layer_count(model.layers);
  run_forward(model, shapes, p, input, n, tape, nullptr);
  Gradients out;
  out.loss = cross_entropy(tape.acts[n], label, out.probs);
  std::vector<double> grad = out.probs;
  grad[label] -= 1.0;
  out.per_layer = zero_like(p);
  run_backward(model, shapes, p, n, tape, std::move(grad), out.per_layer);
  return out;
}

double gradient_check(const FloatModel& model, const MfccMatrix& features, std::size_t label,
                      double eps) {
  const auto input = model_input(model, features);
  const auto shapes = trace_shapes(model.layers, model.input_shape);
  Params params = to_double(model);
  const Gradients analytic = compute_gradients(model, input, label, params);
  double worst = 0.0;
  for (std::size_t li = 0; li < params.size(); ++li) {
    for (std::size_t k = 0; k < params[li].size(); ++k) {
      const double saved = params[li][k];
      params[li][k] = saved + eps;
      const double up = loss_for(model, shapes, params, input, label);
      params[li][k] = saved - eps;
      const double down = loss_for(model, shapes, params, input, label);
      params[li][k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.per_layer[li][k];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

TrainResult train(FloatModel model, std::span<const LabeledExample> train_set,
                  const TrainHyper& hyper) {
  model.validate();
  if (hyper.epochs < 0 || hyper.batch <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0 and batch > 0");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < model.class_labels.size(); ++i) index[model.class_labels[i]] = i;

  std::vector<std::size_t> per_class(model.num_classes(), 0);
  std::vector<std::size_t> targets;
  targets.reserve(train_set.size());
  std::vector<MfccMatrix> feats;
  feats.reserve(train_set.size());
  for (const auto& ex : train_set) {
    auto it = index.find(ex.label);
    if (it == index.end()) throw Error(ErrorCode::kLabelMismatch, "unknown label '" + ex.label + "'");
    ++per_class[it->second];
    targets.push_back(it->second);
    feats.push_back(ex.features);
  }
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c] == 0) {
      throw Error(ErrorCode::kEmptyClass, "no training clips for '" + model.class_labels[c] + "'");
    }
  }

  model.feature_stats = compute_feature_stats(feats);
  std::vector<std::vector<double>> inputs;
  inputs.reserve(feats.size());
  for (const auto& f : feats) inputs.push_back(model_input(model, f));
  feats.clear();

  const auto shapes = trace_shapes(model.layers, model.input_shape);
  const std::size_t n_logit = logit_layer_count(model.layers);
  Params params = to_double(model);
  Params m1 = zero_like(params);
  Params m2 = zero_like(params);
  Params grads = zero_like(params);
  Rng rng(hyper.seed);
  std::vector<std::size_t> order(inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  Tape tape;
  std::vector<double> probs;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        run_forward(model, shapes, params, inputs[idx], n_logit, tape, &rng);
        const double loss = cross_entropy(tape.acts[n_logit], targets[idx], probs);
        if (!std::isfinite(loss)) {
          throw Error(ErrorCode::kDivergedLoss, "non-finite loss at epoch " + std::to_string(epoch));
        }
        loss_sum += loss;
        if (argmax(probs) == targets[idx]) ++correct;
        std::vector<double> grad = probs;
        grad[targets[idx]] -= 1.0;
        run_backward(model, shapes, params, n_logit, tape, std::move(grad), grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      ++step;
      const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
      for (std::size_t li = 0; li < params.size(); ++li) {
        for (std::size_t k = 0; k < params[li].size(); ++k) {
          const double g = grads[li][k] * inv;
          m1[li][k] = hyper.beta1 * m1[li][k] + (1.0 - hyper.beta1) * g;
          m2[li][k] = hyper.beta2 * m2[li][k] + (1.0 - hyper.beta2) * g * g;
          const double mhat = m1[li][k] / bc1;
          const double vhat = m2[li][k] / bc2;
          params[li][k] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.adam_eps);
        }
      }
    }
    const double n = static_cast<double>(std::max<std::size_t>(order.size(), 1));
    result.log.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
  }

  for (std::size_t li = 0; li < params.size(); ++li) {
    for (std::size_t k = 0; k < params[li].size(); ++k) {
      model.weights[li][k] = static_cast<float>(params[li][k]);
    }
  }
  result.model = std::move(model);
  return result;
}

}  // namespace kwspot
