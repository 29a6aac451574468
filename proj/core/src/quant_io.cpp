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

#include "artifact.hpp"
#include "kwspot/error.hpp"
#include "kwspot/quant.hpp"
#include "model_json.hpp"

namespace kwspot {
namespace {

constexpr std::string_view kMagic = "KWSQ";

nlohmann::ordered_json params_json(const QuantParams& p) {
  return {{"scale", p.scale}, {"zero_point", p.zero_point}};
}

QuantParams params_from(const nlohmann::json& j) {
  return {j.at("scale").get<double>(), j.at("zero_point").get<std::int32_t>()};
}

QuantOp op_from(const std::string& name) {
  for (auto op : {QuantOp::kConv1d, QuantOp::kMaxPool1d, QuantOp::kDense, QuantOp::kRelu}) {
    if (to_string(op) == name) return op;
  }
  throw Error(ErrorCode::kCorruptArtifact, "unknown quantized op '" + name + "'");
}

}  // namespace

std::vector<std::uint8_t> serialize_quantized(const QuantizedModel& model) {
  model.validate();
  nlohmann::ordered_json header;
  header["format"] = "kwspot-int8-model";
  header["version"] = kQuantFormatVersion;
  header["input_shape"] = {model.input_shape.channels, model.input_shape.length};
  header["input_params"] = params_json(model.input_params);
  header["layers"] = nlohmann::ordered_json::array();
  std::vector<std::uint8_t> payload;
  for (const auto& l : model.layers) {
    nlohmann::ordered_json lj{
        {"op", to_string(l.op)},
        {"in_shape", {l.in_shape.channels, l.in_shape.length}},
        {"out_shape", {l.out_shape.channels, l.out_shape.length}},
        {"kernel", l.kernel},
        {"stride", l.stride},
        {"pool", l.pool},
        {"fused_relu", l.fused_relu},
        {"weight_params", params_json(l.weight_params)},
        {"input_params", params_json(l.input_params)},
        {"output_params", params_json(l.output_params)},
        {"requant", {{"mantissa", l.requant.mantissa}, {"exponent", l.requant.exponent}}},
        {"weights", l.weights.size()},
        {"bias", l.bias.size()},
    };
    header["layers"].push_back(std::move(lj));
    for (std::int8_t w : l.weights) payload.push_back(static_cast<std::uint8_t>(w));
    for (std::int32_t b : l.bias) detail::append_le(payload, b);
  }
  header["labels"] = model.class_labels;
  header["mfcc_config"] = nlohmann::ordered_json::parse(model.mfcc_config.to_json());
  header["feature_stats"] = detail::stats_to_json(model.feature_stats);
  return detail::pack_artifact(kMagic, std::move(header), payload);
}

QuantizedModel deserialize_quantized(std::span<const std::uint8_t> bytes) {
  const auto art = detail::unpack_artifact(kMagic, kQuantFormatVersion, bytes);
  QuantizedModel model;
  std::size_t pos = 0;
  auto shape_of = [](const nlohmann::json& j) { return Shape{j.at(0).get<int>(), j.at(1).get<int>()}; };
  try {
    const auto& h = art.header;
    model.input_shape = shape_of(h.at("input_shape"));
    model.input_params = params_from(h.at("input_params"));
    for (const auto& lj : h.at("layers")) {
      QuantizedLayer l;
      l.op = op_from(lj.at("op").get<std::string>());
      l.in_shape = shape_of(lj.at("in_shape"));
      l.out_shape = shape_of(lj.at("out_shape"));
      l.kernel = lj.at("kernel").get<int>();
      l.stride = lj.at("stride").get<int>();
      l.pool = lj.at("pool").get<int>();
      l.fused_relu = lj.at("fused_relu").get<bool>();
      l.weight_params = params_from(lj.at("weight_params"));
      l.input_params = params_from(lj.at("input_params"));
      l.output_params = params_from(lj.at("output_params"));
      l.requant = {lj.at("requant").at("mantissa").get<std::int32_t>(),
                   lj.at("requant").at("exponent").get<int>()};
      const auto n_w = lj.at("weights").get<std::size_t>();
      const auto n_b = lj.at("bias").get<std::size_t>();
      if (art.payload.size() - pos < n_w + 4 * n_b) {
        throw Error(ErrorCode::kCorruptArtifact, "payload too short");
      }
      l.weights.resize(n_w);
      for (std::size_t k = 0; k < n_w; ++k) l.weights[k] = static_cast<std::int8_t>(art.payload[pos++]);
      l.bias.resize(n_b);
      for (std::size_t k = 0; k < n_b; ++k, pos += 4) {
        l.bias[k] = detail::read_le<std::int32_t>(&art.payload[pos]);
      }
      model.layers.push_back(std::move(l));
    }
    model.class_labels = h.at("labels").get<std::vector<std::string>>();
    model.mfcc_config = MfccConfig::from_json(h.at("mfcc_config").dump());
    model.feature_stats = detail::stats_from_json(h.at("feature_stats"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, e.what());
  }
  if (pos != art.payload.size()) throw Error(ErrorCode::kCorruptArtifact, "trailing payload bytes");
  try {
    model.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptArtifact, e.what());
  }
  return model;
}

void export_quantized(const QuantizedModel& model, const std::filesystem::path& path) {
  detail::write_file(path.string(), serialize_quantized(model));
}

QuantizedModel import_quantized(const std::filesystem::path& path) {
  return deserialize_quantized(detail::read_file(path.string()));
}

}  // namespace kwspot
