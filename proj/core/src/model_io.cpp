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
#include "kwspot/model.hpp"
#include "model_json.hpp"

namespace kwspot {
namespace detail {

nlohmann::ordered_json layer_to_json(const LayerSpec& layer) {
  nlohmann::ordered_json j{{"kind", to_string(layer.kind)}};
  switch (layer.kind) {
    case LayerKind::kConv1d:
      j["in_ch"] = layer.in_ch;
      j["out_ch"] = layer.out_ch;
      j["kernel"] = layer.kernel;
      j["stride"] = layer.stride;
      break;
    case LayerKind::kMaxPool1d:
      j["pool"] = layer.pool;
      break;
    case LayerKind::kDropout:
      j["rate"] = layer.rate;
      break;
    case LayerKind::kDense:
      j["in_dim"] = layer.in_dim;
      j["out_dim"] = layer.out_dim;
      break;
    default:
      break;
  }
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  const auto kind = layer_kind_from_string(j.at("kind").get<std::string>());
  switch (kind) {
    case LayerKind::kConv1d:
      return LayerSpec::conv1d(j.at("in_ch").get<int>(), j.at("out_ch").get<int>(),
                               j.at("kernel").get<int>(), j.at("stride").get<int>());
    case LayerKind::kMaxPool1d: return LayerSpec::maxpool1d(j.at("pool").get<int>());
    case LayerKind::kFlatten: return LayerSpec::flatten();
    case LayerKind::kDropout: return LayerSpec::dropout(j.at("rate").get<double>());
    case LayerKind::kDense: return LayerSpec::dense(j.at("in_dim").get<int>(), j.at("out_dim").get<int>());
    case LayerKind::kRelu: return LayerSpec::relu();
    case LayerKind::kSoftmax: return LayerSpec::softmax();
  }
  return LayerSpec::relu();
}

nlohmann::ordered_json stats_to_json(const FeatureStats& stats) {
  return {{"mean", stats.mean}, {"stddev", stats.stddev}};
}

FeatureStats stats_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<std::vector<double>>(), j.at("stddev").get<std::vector<double>>()};
}

}  // namespace detail

namespace {
constexpr std::string_view kMagic = "KWSM";
}

std::vector<std::uint8_t> serialize_model(const FloatModel& model) {
  model.validate();
  nlohmann::ordered_json header;
  header["format"] = "kwspot-float-model";
  header["version"] = kModelFormatVersion;
  header["input_shape"] = {model.input_shape.channels, model.input_shape.length};
  header["layers"] = nlohmann::ordered_json::array();
  for (const auto& layer : model.layers) header["layers"].push_back(detail::layer_to_json(layer));
  header["labels"] = model.class_labels;
  header["mfcc_config"] = nlohmann::ordered_json::parse(model.mfcc_config.to_json());
  header["feature_stats"] = detail::stats_to_json(model.feature_stats);

  std::vector<std::uint8_t> payload;
  payload.reserve(model.param_count() * 4);
  for (const auto& w : model.weights) {
    for (float v : w) detail::append_f32(payload, v);
  }
  return detail::pack_artifact(kMagic, std::move(header), payload);
}

FloatModel deserialize_model(std::span<const std::uint8_t> bytes) {
  const auto art = detail::unpack_artifact(kMagic, kModelFormatVersion, bytes);
  FloatModel model;
  try {
    const auto& h = art.header;
    model.input_shape = {h.at("input_shape").at(0).get<int>(), h.at("input_shape").at(1).get<int>()};
    for (const auto& lj : h.at("layers")) model.layers.push_back(detail::layer_from_json(lj));
    model.class_labels = h.at("labels").get<std::vector<std::string>>();
    model.mfcc_config = MfccConfig::from_json(h.at("mfcc_config").dump());
    model.feature_stats = detail::stats_from_json(h.at("feature_stats"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, e.what());
  }

  std::size_t pos = 0;
  model.weights.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const std::size_t n = model.layers[i].param_count();
    if ((art.payload.size() - pos) / 4 < n) throw Error(ErrorCode::kCorruptArtifact, "payload too short");
    model.weights[i].resize(n);
    for (std::size_t k = 0; k < n; ++k, pos += 4) model.weights[i][k] = detail::read_f32(&art.payload[pos]);
  }
  if (pos != art.payload.size()) throw Error(ErrorCode::kCorruptArtifact, "trailing payload bytes");
  try {
    model.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptArtifact, e.what());
  }
  return model;
}

void save_model(const FloatModel& model, const std::filesystem::path& path) {
  detail::write_file(path.string(), serialize_model(model));
}

FloatModel load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file(path.string()));
}

}  // namespace kwspot
