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

#include "kwspot/session.hpp"

#include <cstdlib>

#include "json.hpp"
#include "kwspot/error.hpp"

namespace kwspot::cli {

void RunConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be in [0, 1]");
  }
  if (hop_ms < 50 || hop_ms > 1000) throw Error(ErrorCode::kInvalidArgument, "hop_ms must be in [50, 1000]");
  if (timeout_ms <= 0) throw Error(ErrorCode::kInvalidArgument, "timeout_ms must be positive");
  if (port < 0 || port > 65535) throw Error(ErrorCode::kInvalidArgument, "port out of range");
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("KWSPOT_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw Error(ErrorCode::kInvalidArgument, "KWSPOT_SEED is not an integer");
  return v;
}

std::string ServiceEvent::to_json() const {
  nlohmann::ordered_json j;
  switch (kind) {
    case EventKind::kPrediction:
      j = {{"kind", "PREDICTION"}, {"ts", ts}, {"label", label},
           {"confidence", confidence}, {"accepted", accepted}};
      break;
    case EventKind::kState:
      j = {{"kind", "STATE"}, {"ts", ts}, {"mode", to_string(mode)}, {"color", color},
           {"flags", nlohmann::ordered_json::parse(flags_json(flags))}};
      break;
    case EventKind::kLed:
      j = {{"kind", "LED"}, {"ts", ts}, {"led", nlohmann::ordered_json::parse(led_json(led))}};
      break;
    case EventKind::kError:
      j = {{"kind", "ERROR"}, {"message", message}};
      break;
  }
  return j.dump();
}

StreamingSession::StreamingSession(const QuantizedModel& model, const RunConfig& config)
    : model_(model),
      config_(config),
      interp_config_{config.threshold, config.timeout_ms},
      context_(model),
      extractor_(model.mfcc_config),
      window_(config.hop_ms) {
  config_.validate();
  for (const auto& label : model.class_labels) keywords_.push_back(parse_keyword(label));
}

void StreamingSession::feed(std::span<const std::int16_t> samples, const EventSink& sink) {
  window_.feed(samples, [&](const StreamWindow& w) { on_window(w, sink); });
}

void StreamingSession::reset(const EventSink& sink) {
  state_ = InterpreterState{};
  last_accepted_.clear();
  ServiceEvent ev;
  ev.kind = EventKind::kState;
  ev.ts = static_cast<std::int64_t>(window_.samples_seen() * 1000 / kSampleRateHz);
  ev.mode = state_.mode;
  ev.color = state_.color;
  ev.flags = state_.flags;
  sink(ev);
}

void StreamingSession::on_window(const StreamWindow& window, const EventSink& sink) {
  const MfccMatrix features = extractor_.extract(window.samples);
  const Prediction& pred = context_.run(features);
  const std::int64_t ts = window.start_time_ms;
  const bool accepted = pred.confidence >= config_.threshold;

  if (accepted) {
    auto it = last_accepted_.find(pred.top_index);
    if (it != last_accepted_.end() && ts - it->second < kDebounceMs) return;
    last_accepted_[pred.top_index] = ts;
  }

  ServiceEvent p;
  p.kind = EventKind::kPrediction;
  p.ts = ts;
  p.label = pred.top_label;
  p.confidence = pred.confidence;
  p.accepted = accepted;
  sink(p);
  if (!accepted) return;

  const LedState before = state_.led;
  auto result = step(state_, CommandEvent{keywords_[pred.top_index], pred.confidence, ts}, interp_config_);
  state_ = std::move(result.state);

  ServiceEvent s;
  s.kind = EventKind::kState;
  s.ts = ts;
  s.mode = state_.mode;
  s.color = state_.color;
  s.flags = state_.flags;
  sink(s);

  if (!(state_.led == before)) {
    ServiceEvent l;
    l.kind = EventKind::kLed;
    l.ts = ts;
    l.led = state_.led;
    sink(l);
  }
}

}  // namespace kwspot::cli
