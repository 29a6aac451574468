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

#include "kwspot/arena.hpp"
#include "kwspot/features.hpp"
#include "kwspot/model.hpp"

namespace kwspot {

/// Rounds to nearest, ties away from zero. Used for every float->int
/// conversion in the quantized path.
std::int64_t round_half_away(double x) noexcept;

/// Affine int8 mapping: real = scale * (q - zero_point).
struct QuantParams {
  double scale = 1.0;
  std::int32_t zero_point = 0;

  std::int8_t quantize(double x) const noexcept;
  double dequantize(std::int32_t q) const noexcept { return scale * (q - zero_point); }
  bool operator==(const QuantParams&) const = default;
};

/// Symmetric weights: scale = max|w| / 127, zero_point 0.
QuantParams symmetric_weight_params(std::span<const float> weights) noexcept;
/// Asymmetric activations over [min, max] (which must contain 0).
QuantParams activation_params(double min, double max);

/// Fixed-point multiplier: real ~= mantissa * 2^(exponent - 31), mantissa in
/// [2^30, 2^31).
struct FixedMultiplier {
  std::int32_t mantissa = 0;
  int exponent = 0;

  static FixedMultiplier from_real(double real);
  double real() const noexcept;
  /// round_half_away(acc * real) computed in integer arithmetic, saturated to int32.
  std::int32_t apply(std::int64_t acc) const noexcept;
  bool operator==(const FixedMultiplier&) const = default;
};

struct TensorRange {
  double min = 0.0;
  double max = 0.0;
};

/// Observed activation ranges: `input` is the scaled model input, `outputs[i]`
/// is the output of float layer i.
struct CalibrationRanges {
  TensorRange input;
  std::vector<TensorRange> outputs;
};

inline constexpr double kMinRangeWidth = 1e-5;

/// Min/max of every activation tensor over the representative set, widened to
/// contain 0 and to a width of at least kMinRangeWidth.
CalibrationRanges calibrate(const FloatModel& model, std::span<const MfccMatrix> rep_set);

enum class QuantOp { kConv1d, kMaxPool1d, kDense, kRelu };
std::string_view to_string(QuantOp op) noexcept;

struct QuantizedLayer {
  QuantOp op = QuantOp::kRelu;
  int kernel = 0;
  int stride = 1;
  int pool = 0;
  bool fused_relu = false;
  Shape in_shape;
  Shape out_shape;
  std::vector<std::int8_t> weights;
  std::vector<std::int32_t> bias;
  QuantParams weight_params;
  QuantParams input_params;
  QuantParams output_params;
  FixedMultiplier requant;

  std::size_t weight_bytes() const noexcept { return weights.size() + 4 * bias.size(); }
};

struct QuantizedModel {
  Shape input_shape{13, 98};
  QuantParams input_params;
  std::vector<QuantizedLayer> layers;
  std::vector<std::string> class_labels;
  MfccConfig mfcc_config;
  FeatureStats feature_stats = FeatureStats::identity(13);

  std::size_t num_classes() const noexcept { return class_labels.size(); }
  std::size_t weight_bytes() const noexcept;
  void validate() const;
};

/// Per-tensor int8 post-training quantization. ReLU following a conv/dense
/// layer is fused; flatten and dropout vanish; a trailing softmax is computed
/// in float on the dequantized logits.
QuantizedModel quantize_model(const FloatModel& model, const CalibrationRanges& ranges);

/// Arena requests for the activation tensors of `model`: tensor 0 is the
/// input, tensor i+1 the output of layer i.
std::vector<BufferRequest> arena_requests(const QuantizedModel& model);

/// Plans the activation arena. The budget covers arena plus weight bytes, both
/// of which must fit in device SRAM; kBudgetExceeded reports the minimum.
ArenaPlan plan_arena(const QuantizedModel& model, std::size_t budget_bytes);

/// Runs quantized inference out of one preplanned arena. After construction,
/// `run` and `run_quantized` perform no heap allocation.
class InferenceContext {
 public:
  explicit InferenceContext(const QuantizedModel& model);

  InferenceContext(const InferenceContext&) = delete;
  InferenceContext& operator=(const InferenceContext&) = delete;

  const ArenaPlan& plan() const noexcept { return plan_; }

  /// Scales and quantizes raw MFCC features into the arena, then runs.
  const Prediction& run(const MfccMatrix& features);

  /// Runs on an already quantized channel-major input; returns the int8
  /// output tensor (valid until the next call).
  std::span<const std::int8_t> run_quantized(std::span<const std::int8_t> input);

  /// Dequantized output of the last run.
  std::span<const double> logits() const noexcept { return logits_; }

 private:
  std::span<std::int8_t> tensor(std::size_t index) noexcept;
  void execute();

  const QuantizedModel& model_;
  ArenaPlan plan_;
  std::vector<std::int8_t> arena_;
  std::vector<double> logits_;
  Prediction prediction_;
};

Prediction quantized_forward(const QuantizedModel& model, const MfccMatrix& features);

inline constexpr int kQuantFormatVersion = 1;

std::vector<std::uint8_t> serialize_quantized(const QuantizedModel& model);
QuantizedModel deserialize_quantized(std::span<const std::uint8_t> bytes);
void export_quantized(const QuantizedModel& model, const std::filesystem::path& path);
QuantizedModel import_quantized(const std::filesystem::path& path);

/// Per-layer footprint for reporting; layer bytes + arena bytes == total.
struct MemoryReport {
  struct Entry {
    std::string name;
    std::size_t bytes = 0;
  };
  std::vector<Entry> layers;
  std::size_t weight_bytes = 0;
  std::size_t arena_bytes = 0;
  std::size_t total_bytes = 0;
};

MemoryReport memory_report(const QuantizedModel& model, const ArenaPlan& plan);

}  // namespace kwspot
