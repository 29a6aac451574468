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

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kwspot {

/// The 23-word vocabulary, in the order of the published evaluation table.
enum class Keyword : std::uint8_t {
  kBlue, kCyan, kGreen, kLed, kMagenta, kOff, kOn, kRed, kWakeUp, kWhite, kYellow,
  kAnd, kBlink, kCancel, kFast, kFlash, kNoise, kNoise2, kPlus, kQuick, kSlow, kToggle, kUnknown,
};

inline constexpr std::size_t kKeywordCount = 23;

std::string_view keyword_name(Keyword k) noexcept;
const std::array<Keyword, kKeywordCount>& all_keywords() noexcept;
/// Case-insensitive; '_' and '-' are read as spaces ("wake_up" -> WAKE UP).
/// Throws kUnknownKeyword.
Keyword parse_keyword(std::string_view label);
std::optional<Keyword> try_parse_keyword(std::string_view label) noexcept;

/// Color code carried by a color keyword (BLUE=1 ... WHITE=7), 0 otherwise.
int color_code(Keyword k) noexcept;
/// NOISE, NOISE2 and UNKNOWN carry no command.
bool is_command(Keyword k) noexcept;

enum class Mode { kSleep, kActive };
enum class BlinkMode { kNone, kBlink, kFast, kFlash, kSlow };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(BlinkMode b) noexcept;
/// Toggle period of a blink mode in ms; 0 for kNone.
int blink_period_ms(BlinkMode b) noexcept;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  auto operator<=>(const Rgb&) const = default;
};

/// Saturated RGB for color codes 1..7.
Rgb color_rgb(int code);

struct Flags {
  bool led_on = false;
  bool led_off = false;
  bool and_key = false;
  bool cancel_key = false;
  bool blink_key = false;
  bool fast_key = false;
  bool flash_key = false;
  bool slow_key = false;
  bool plus_key = false;
  bool quick_key = false;
  bool toggle_key = false;
  bool wake_up = false;
  bool operator==(const Flags&) const = default;
};

struct LedState {
  bool on = false;
  std::set<Rgb> rgb_set;
  BlinkMode blink = BlinkMode::kNone;
  bool operator==(const LedState&) const = default;
};

struct InterpreterState {
  Mode mode = Mode::kSleep;
  int color = 0;
  std::set<int> color_set;
  Flags flags;
  std::int64_t last_activity_ms = 0;
  /// What the virtual LED currently shows.
  LedState led;
  bool operator==(const InterpreterState&) const = default;
};

struct CommandEvent {
  Keyword keyword = Keyword::kNoise;
  double confidence = 0.0;
  std::int64_t timestamp_ms = 0;

  /// Throws kUnknownKeyword for labels outside the vocabulary.
  static CommandEvent from_label(std::string_view label, double confidence, std::int64_t ts);
};

struct InterpreterConfig {
  double threshold = 0.60;
  std::int64_t timeout_ms = 10000;
};

/// One transition, as recorded for the UI and tests.
struct ActionTrace {
  std::int64_t ts = 0;
  Keyword event = Keyword::kNoise;
  double confidence = 0.0;
  /// Passed the gate and acted on (false when gated out or ignored while asleep).
  bool accepted = false;
  /// The inactivity timeout put the machine to sleep before this event.
  bool timed_out = false;
  InterpreterState state;

  /// {"ts":..,"event":..,"accepted":..,"mode":..,"color":..,"flags":{..},"led":{..}}
  std::string to_json_line() const;
};

struct StepResult {
  InterpreterState state;
  LedState led;
  ActionTrace trace;
};

/// Pure transition function. Events below the confidence threshold and the
/// non-command labels leave the state untouched; the inactivity timeout is
/// applied when a gated-in event arrives.
StepResult step(const InterpreterState& state, const CommandEvent& event,
                const InterpreterConfig& config = {});

struct SequenceResult {
  InterpreterState state;
  LedState led;
  std::vector<ActionTrace> trace;
};

/// Left fold of step. Throws kInvalidArgument if timestamps decrease.
SequenceResult run_sequence(std::span<const CommandEvent> events, const InterpreterConfig& config = {});

std::string flags_json(const Flags& flags);
std::string led_json(const LedState& led);

}  // namespace kwspot
