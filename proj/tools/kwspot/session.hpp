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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kwspot/features.hpp"
#include "kwspot/interpreter.hpp"
#include "kwspot/quant.hpp"
#include "kwspot/stream.hpp"

namespace kwspot::cli {

struct RunConfig {
  std::string model_path;
  std::string dataset_root;
  int hop_ms = 250;
  double threshold = 0.60;
  std::int64_t timeout_ms = 10000;
  std::size_t budget_bytes = 196608;
  std::uint64_t seed = 0;
  int port = 7878;

  /// Throws kInvalidArgument for out-of-range fields.
  void validate() const;
};

/// Applies KWSPOT_SEED from the environment when set.
std::uint64_t seed_from_env(std::uint64_t fallback);

inline constexpr std::int64_t kDebounceMs = 1000;

enum class EventKind { kPrediction, kState, kLed, kError };

struct ServiceEvent {
  EventKind kind = EventKind::kError;
  std::int64_t ts = 0;
  // PREDICTION
  std::string label;
  double confidence = 0.0;
  bool accepted = false;
  // STATE
  Mode mode = Mode::kSleep;
  int color = 0;
  Flags flags;
  // LED
  LedState led;
  // ERROR
  std::string message;

  /// One JSON object, no trailing newline.
  std::string to_json() const;
};

using EventSink = std::function<void(const ServiceEvent&)>;

/// Streaming pipeline shared by `kwspot run` and the demo service: sliding
/// one-second windows, quantized inference, per-label debounce, and the
/// command interpreter. Output depends only on the PCM sample sequence, not
/// on how it is chunked.
class StreamingSession {
 public:
  StreamingSession(const QuantizedModel& model, const RunConfig& config);

  void feed(std::span<const std::int16_t> samples, const EventSink& sink);
  /// Reinitializes the interpreter and debounce state and emits a STATE event.
  /// The audio history is kept.
  void reset(const EventSink& sink);

  const InterpreterState& state() const noexcept { return state_; }

 private:
  void on_window(const StreamWindow& window, const EventSink& sink);

  const QuantizedModel& model_;
  RunConfig config_;
  InterpreterConfig interp_config_;
  std::vector<Keyword> keywords_;
  InferenceContext context_;
  MfccExtractor extractor_;
  SlidingWindow window_;
  InterpreterState state_;
  std::map<std::size_t, std::int64_t> last_accepted_;
};

}  // namespace kwspot::cli
