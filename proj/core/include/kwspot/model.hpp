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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kwspot/features.hpp"

namespace kwspot {

enum class LayerKind { kConv1d, kMaxPool1d, kFlatten, kDropout, kDense, kRelu, kSoftmax };

std::string_view to_string(LayerKind kind) noexcept;
LayerKind layer_kind_from_string(std::string_view name);

/// Activation shape: channels x length. Dense layers and flatten produce
/// {features, 1}.
struct Shape {
  int channels = 0;
  int length = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(length);
  }
  bool operator==(const Shape&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 0;
  int stride = 1;
  int pool = 0;
  double rate = 0.0;
  int in_dim = 0;
  int out_dim = 0;

  static LayerSpec conv1d(int in_ch, int out_ch, int kernel, int stride = 1);
  static LayerSpec maxpool1d(int size);
  static LayerSpec flatten();
  static LayerSpec dropout(double rate);
  static LayerSpec dense(int in_dim, int out_dim);
  static LayerSpec relu();
  static LayerSpec softmax();

  /// Number of trainable parameters (weights then biases).
  std::size_t param_count() const noexcept;
  /// Throws kShapeMismatch when `in` does not compose with this layer.
  Shape output_shape(Shape in) const;

  bool operator==(const LayerSpec&) const = default;
};

/// Walks the stack from `input`, throwing kShapeMismatch on the first layer
/// that does not compose. Returns the shape after every layer.
std::vector<Shape> trace_shapes(std::span<const LayerSpec> layers, Shape input);

/// Float 1D CNN. Input MFCC frames x coeffs is read as a coeffs-channel
/// sequence of length frames. Weights per layer: conv [out][in][k] then bias
/// [out]; dense [out][in] then bias [out].
struct FloatModel {
  Shape input_shape{13, 98};
  std::vector<LayerSpec> layers;
  std::vector<std::vector<float>> weights;
  std::vector<std::string> class_labels;
  MfccConfig mfcc_config;
  FeatureStats feature_stats = FeatureStats::identity(13);

  std::size_t num_classes() const noexcept { return class_labels.size(); }
  std::size_t param_count() const noexcept;
  /// Checks shape composition, weight sizes and that the output width equals
  /// the label count.
  void validate() const;
};

struct Prediction {
  std::vector<double> probs;
  std::size_t top_index = 0;
  std::string top_label;
  double confidence = 0.0;
};

/// Index of the largest element; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;

/// Numerically stable softmax into `out` (may alias `logits`).
void softmax(std::span<const double> logits, std::span<double> out) noexcept;

/// conv(13->8,k3) relu pool2 conv(8->16,k3) relu pool2 flatten dropout(0.25)
/// dense(368->n) softmax, He-uniform initialized from `seed`.
FloatModel default_architecture(int n_classes, std::uint64_t seed = 0);
FloatModel default_architecture(std::vector<std::string> labels, std::uint64_t seed = 0);

/// Builds a model over an arbitrary stack with fan-in uniform init.
FloatModel build_model(std::vector<LayerSpec> layers, Shape input_shape,
                       std::vector<std::string> labels, std::uint64_t seed);

/// Reads an MFCC matrix (frames x coeffs) into channel-major input layout
/// after applying the model's feature statistics.
std::vector<double> model_input(const FloatModel& model, const MfccMatrix& features);

/// Pre-softmax output for already-scaled channel-major input.
std::vector<double> forward_logits(const FloatModel& model, std::span<const double> input);

/// Inference-mode forward pass (dropout disabled). Applies feature_stats.
Prediction forward(const FloatModel& model, const MfccMatrix& features);

/// Every intermediate activation for a scaled input, in inference mode.
/// Entry 0 is the input, entry i+1 is the output of layer i.
std::vector<std::vector<double>> forward_activations(const FloatModel& model,
                                                     std::span<const double> input);

struct LabeledExample {
  MfccMatrix features;
  std::string label;
};

struct TrainHyper {
  int epochs = 100;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  FloatModel model;
  std::vector<EpochLog> log;
};

/// Minibatch Adam on softmax cross-entropy. Computes feature_stats from
/// `train_set` and stores them in the returned model.
TrainResult train(FloatModel model, std::span<const LabeledExample> train_set,
                  const TrainHyper& hyper);

/// Gradients of the cross-entropy loss for one sample, in double precision.
struct Gradients {
  std::vector<std::vector<double>> per_layer;
  std::vector<double> probs;
  double loss = 0.0;
};

/// `params` replaces the model's float weights when non-empty. Input is
/// channel-major and already scaled.
Gradients compute_gradients(const FloatModel& model, std::span<const double> input,
                            std::size_t label,
                            const std::vector<std::vector<double>>& params = {});

/// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
/// using central differences with step `eps` in double precision.
double gradient_check(const FloatModel& model, const MfccMatrix& features, std::size_t label,
                      double eps = 1e-5);

inline constexpr int kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const FloatModel& model);
FloatModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const FloatModel& model, const std::filesystem::path& path);
FloatModel load_model(const std::filesystem::path& path);

}  // namespace kwspot
