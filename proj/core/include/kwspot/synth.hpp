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
#include <utility>
#include <vector>

#include "kwspot/audio.hpp"
#include "kwspot/random.hpp"

namespace kwspot {

/// Seeded synthetic keyword audio for tests, benchmarks and demos. Each
/// pattern is a 500 ms token: two consecutive tones from a fixed frequency
/// grid (patterns 0..20) or a rising/falling chirp (21, 22).
enum class SynthKind { kPattern, kBackground, kHum, kFragment };

struct SynthClass {
  SynthKind kind = SynthKind::kPattern;
  std::size_t pattern = 0;
};

inline constexpr std::size_t kSynthPatternCount = 23;
inline constexpr std::size_t kSynthTokenSamples = 8000;

/// NOISE -> background noise, NOISE2 -> low hum, UNKNOWN -> clipped token
/// fragments; any other label takes the next unused tone pattern in order.
std::vector<SynthClass> synth_classes_for(const std::vector<std::string>& labels);

/// Token for `pattern` at peak `amplitude`, with 10 ms fades.
std::vector<double> synth_token(std::size_t pattern, double amplitude);

/// One-second clip: low background noise plus the class's content at a
/// random offset that keeps a token fully inside the clip.
std::vector<std::int16_t> synth_clip_samples(const SynthClass& cls, Rng& rng);

/// Writes root/<label>/<label>_NNNN.wav. `clip_ms` shorter than 1000 trims
/// the clips (useful for layout-only trees).
void write_synthetic_dataset(const std::filesystem::path& root,
                             const std::vector<std::pair<std::string, std::size_t>>& label_counts,
                             std::uint64_t seed, int clip_ms = 1000);

struct SynthStream {
  std::vector<std::int16_t> samples;
  std::vector<std::int64_t> onsets_ms;
};

/// Background noise with one token per entry of `patterns`, the first at
/// `lead_ms` and then every `spacing_ms`; `tail_ms` of noise at the end.
SynthStream synth_command_stream(std::span<const std::size_t> patterns, Rng& rng,
                                 int lead_ms = 1000, int spacing_ms = 1500, int tail_ms = 1500);

}  // namespace kwspot
