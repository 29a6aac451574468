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

#include "kwspot/interpreter.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"
#include "kwspot/error.hpp"

namespace kwspot {
namespace {

constexpr std::array<std::string_view, kKeywordCount> kNames = {
    "BLUE", "CYAN",  "GREEN",  "LED",   "MAGENTA", "OFF",  "ON",     "RED",
    "WAKE UP", "WHITE", "YELLOW", "AND", "BLINK", "CANCEL", "FAST", "FLASH",
    "NOISE", "NOISE2", "PLUS", "QUICK", "SLOW", "TOGGLE", "UNKNOWN",
};

constexpr std::array<Keyword, kKeywordCount> make_all() {
  std::array<Keyword, kKeywordCount> out{};
  for (std::size_t i = 0; i < kKeywordCount; ++i) out[i] = static_cast<Keyword>(i);
  return out;
}

constexpr auto kAll = make_all();

BlinkMode blink_from(const Flags& f) {
  if (f.slow_key) return BlinkMode::kSlow;
  if (f.flash_key) return BlinkMode::kFlash;
  if (f.fast_key) return BlinkMode::kFast;
  if (f.blink_key) return BlinkMode::kBlink;
  return BlinkMode::kNone;
}

nlohmann::ordered_json flags_to_json(const Flags& f) {
  return {{"ledOn", f.led_on},         {"ledOff", f.led_off},       {"andKey", f.and_key},
          {"cancelKey", f.cancel_key}, {"blinkKey", f.blink_key},   {"fastKey", f.fast_key},
          {"flashKey", f.flash_key},   {"slowKey", f.slow_key},     {"plusKey", f.plus_key},
          {"quickKey", f.quick_key},   {"toggleKey", f.toggle_key}, {"wakeUp", f.wake_up}};
}

nlohmann::ordered_json led_to_json(const LedState& led) {
  nlohmann::ordered_json rgb = nlohmann::ordered_json::array();
  for (const auto& c : led.rgb_set) rgb.push_back({c.r, c.g, c.b});
  return {{"on", led.on}, {"rgb", rgb}, {"blink", to_string(led.blink)}};
}

}  // namespace

std::string_view keyword_name(Keyword k) noexcept { return kNames[static_cast<std::size_t>(k)]; }

const std::array<Keyword, kKeywordCount>& all_keywords() noexcept { return kAll; }

std::optional<Keyword> try_parse_keyword(std::string_view label) noexcept {
  std::string norm;
  norm.reserve(label.size());
  for (char ch : label) {
    if (ch == '_' || ch == '-') ch = ' ';
    norm.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  }
  for (std::size_t i = 0; i < kKeywordCount; ++i) {
    if (kNames[i] == norm) return static_cast<Keyword>(i);
  }
  return std::nullopt;
}

Keyword parse_keyword(std::string_view label) {
  if (auto k = try_parse_keyword(label)) return *k;
  throw Error(ErrorCode::kUnknownKeyword, "'" + std::string(label) + "' is not one of the 23 keywords");
}

int color_code(Keyword k) noexcept {
  switch (k) {
    case Keyword::kBlue: return 1;
    case Keyword::kGreen: return 2;
    case Keyword::kCyan: return 3;
    case Keyword::kRed: return 4;
    case Keyword::kMagenta: return 5;
    case Keyword::kYellow: return 6;
    case Keyword::kWhite: return 7;
    default: return 0;
  }
}

bool is_command(Keyword k) noexcept {
  return k != Keyword::kNoise && k != Keyword::kNoise2 && k != Keyword::kUnknown;
}

std::string_view to_string(Mode m) noexcept { return m == Mode::kSleep ? "SLEEP" : "ACTIVE"; }

std::string_view to_string(BlinkMode b) noexcept {
  switch (b) {
    case BlinkMode::kNone: return "NONE";
    case BlinkMode::kBlink: return "BLINK";
    case BlinkMode::kFast: return "FAST";
    case BlinkMode::kFlash: return "FLASH";
    case BlinkMode::kSlow: return "SLOW";
  }
  return "NONE";
}

int blink_period_ms(BlinkMode b) noexcept {
  switch (b) {
    case BlinkMode::kBlink: return 500;
    case BlinkMode::kFast: return 150;
    case BlinkMode::kFlash: return 75;
    case BlinkMode::kSlow: return 1000;
    case BlinkMode::kNone: return 0;
  }
  return 0;
}

Rgb color_rgb(int code) {
  switch (code) {
    case 1: return {0, 0, 255};
    case 2: return {0, 255, 0};
    case 3: return {0, 255, 255};
    case 4: return {255, 0, 0};
    case 5: return {255, 0, 255};
    case 6: return {255, 255, 0};
    case 7: return {255, 255, 255};
    default: throw Error(ErrorCode::kInvalidArgument, "color code " + std::to_string(code));
  }
}

CommandEvent CommandEvent::from_label(std::string_view label, double confidence, std::int64_t ts) {
  return {parse_keyword(label), confidence, ts};
}

std::string flags_json(const Flags& flags) { return flags_to_json(flags).dump(); }
std::string led_json(const LedState& led) { return led_to_json(led).dump(); }

std::string ActionTrace::to_json_line() const {
  nlohmann::ordered_json j{
      {"ts", ts},
      {"event", keyword_name(event)},
      {"accepted", accepted},
      {"mode", to_string(state.mode)},
      {"color", state.color},
      {"flags", flags_to_json(state.flags)},
      {"led", led_to_json(state.led)},
  };
  return j.dump();
}

StepResult step(const InterpreterState& state, const CommandEvent& event,
                const InterpreterConfig& config) {
  if (static_cast<std::size_t>(event.keyword) >= kKeywordCount) {
    throw Error(ErrorCode::kUnknownKeyword, "keyword index out of range");
  }
  StepResult out{state, state.led, {}};
  ActionTrace& tr = out.trace;
  tr.ts = event.timestamp_ms;
  tr.event = event.keyword;
  tr.confidence = event.confidence;

  InterpreterState& s = out.state;
  const bool gated_in = event.confidence >= config.threshold && is_command(event.keyword);
  if (gated_in) {
    if (s.mode == Mode::kActive && event.timestamp_ms - s.last_activity_ms >= config.timeout_ms) {
      s.mode = Mode::kSleep;
      s.flags.wake_up = false;
      tr.timed_out = true;
    }

    if (s.mode == Mode::kSleep) {
      if (event.keyword == Keyword::kWakeUp) {
        s.mode = Mode::kActive;
        s.flags.wake_up = true;
        s.last_activity_ms = event.timestamp_ms;
        tr.accepted = true;
      }
    } else {
      tr.accepted = true;
      s.last_activity_ms = event.timestamp_ms;
      Flags& f = s.flags;
      if (const int code = color_code(event.keyword); code > 0) {
        if (f.and_key) {
          s.color_set.insert(code);
          f.and_key = false;
        } else {
          s.color_set = {code};
        }
        s.color = code;
      } else {
        switch (event.keyword) {
          case Keyword::kOn:
            f.led_on = true;
            f.led_off = false;
            break;
          case Keyword::kOff:
            f.led_off = true;
            f.led_on = false;
            s.color = 0;
            s.color_set.clear();
            break;
          case Keyword::kAnd: f.and_key = true; break;
          case Keyword::kBlink: f.blink_key = true; break;
          case Keyword::kFast: f.fast_key = true; break;
          case Keyword::kFlash: f.flash_key = true; break;
          case Keyword::kSlow: f.slow_key = true; break;
          case Keyword::kPlus: f.plus_key = true; break;
          case Keyword::kQuick: f.quick_key = true; break;
          case Keyword::kToggle: f.toggle_key = true; break;
          case Keyword::kCancel:
            f = Flags{};
            f.wake_up = true;
            s.color = 0;
            s.color_set.clear();
            break;
          case Keyword::kLed:
            if (f.led_on && !s.color_set.empty()) {
              LedState led{true, {}, blink_from(f)};
              for (int c : s.color_set) led.rgb_set.insert(color_rgb(c));
              s.led = std::move(led);
            } else if (f.led_off) {
              s.led = LedState{};
            }
            break;
          default:
            break;  // WAKE UP while active only refreshes the activity timer.
        }
      }
    }
  }
  tr.state = s;
  out.led = s.led;
  return out;
}

SequenceResult run_sequence(std::span<const CommandEvent> events, const InterpreterConfig& config) {
  SequenceResult out;
  out.trace.reserve(events.size());
  std::int64_t prev = events.empty() ? 0 : events.front().timestamp_ms;
  for (const auto& e : events) {
    if (e.timestamp_ms < prev) {
      throw Error(ErrorCode::kInvalidArgument, "event timestamps must be non-decreasing");
    }
    prev = e.timestamp_ms;
    auto r = step(out.state, e, config);
    out.state = std::move(r.state);
    out.trace.push_back(std::move(r.trace));
  }
  out.led = out.state.led;
  return out;
}

}  // namespace kwspot
