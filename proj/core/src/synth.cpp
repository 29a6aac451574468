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

#include "kwspot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "kwspot/error.hpp"
#include "kwspot/interpreter.hpp"

namespace kwspot {
namespace {

constexpr std::array<double, 7> kGridHz = {300, 500, 800, 1200, 1800, 2600, 3600};
constexpr double kBackgroundStd = 60.0;

std::pair<double, double> tone_pair(std::size_t pattern) {
  std::size_t idx = 0;
  for (std::size_t a = 0; a < kGridHz.size(); ++a) {
    for (std::size_t b = a + 1; b < kGridHz.size(); ++b) {
      if (idx++ == pattern) return {kGridHz[a], kGridHz[b]};
    }
  }
  return {0.0, 0.0};
}

std::int16_t to_pcm(double v) {
  return static_cast<std::int16_t>(std::clamp(std::round(v), -32768.0, 32767.0));
}

void add_background(std::vector<double>& buf, Rng& rng, double stddev) {
  for (double& v : buf) v += stddev * rng.normal();
}

}  // namespace

std::vector<SynthClass> synth_classes_for(const std::vector<std::string>& labels) {
  std::vector<SynthClass> out;
  std::size_t next = 0;
  for (const auto& label : labels) {
    const auto k = try_parse_keyword(label);
    if (k == Keyword::kNoise) {
      out.push_back({SynthKind::kBackground, 0});
    } else if (k == Keyword::kNoise2) {
      out.push_back({SynthKind::kHum, 0});
    } else if (k == Keyword::kUnknown) {
      out.push_back({SynthKind::kFragment, 0});
    } else {
      if (next >= kSynthPatternCount) throw Error(ErrorCode::kInvalidArgument, "too many synthetic classes");
      out.push_back({SynthKind::kPattern, next++});
    }
  }
  return out;
}

std::vector<double> synth_token(std::size_t pattern, double amplitude) {
  if (pattern >= kSynthPatternCount) {
    throw Error(ErrorCode::kInvalidArgument, "pattern " + std::to_string(pattern) + " out of range");
  }
  const double sr = kSampleRateHz;
  std::vector<double> tok(kSynthTokenSamples, 0.0);
  const std::size_t half = kSynthTokenSamples / 2;
  double phase = 0.0;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    double f;
    if (pattern < 21) {
      const auto [fa, fb] = tone_pair(pattern);
      f = i < half ? fa : fb;
    } else {
      const double u = static_cast<double>(i) / static_cast<double>(tok.size());
      f = pattern == 21 ? 400.0 + 2600.0 * u : 3000.0 - 2600.0 * u;
    }
    phase += 2.0 * std::numbers::pi * f / sr;
    tok[i] = amplitude * (0.8 * std::sin(phase) + 0.2 * std::sin(2.0 * phase));
  }
  const std::size_t fade = kSampleRateHz / 100;
  for (std::size_t i = 0; i < fade; ++i) {
    const double g = static_cast<double>(i) / static_cast<double>(fade);
    tok[i] *= g;
    tok[tok.size() - 1 - i] *= g;
  }
  return tok;
}

std::vector<std::int16_t> synth_clip_samples(const SynthClass& cls, Rng& rng) {
  std::vector<double> buf(kClipSamples, 0.0);
  switch (cls.kind) {
    case SynthKind::kPattern: {
      const auto tok = synth_token(cls.pattern, rng.uniform(4000.0, 9000.0));
      const auto offset = static_cast<std::size_t>(rng.below(kClipSamples - kSynthTokenSamples + 1));
      for (std::size_t i = 0; i < tok.size(); ++i) buf[offset + i] += tok[i];
      add_background(buf, rng, kBackgroundStd);
      break;
    }
    case SynthKind::kBackground:
      add_background(buf, rng, rng.uniform(100.0, 600.0));
      break;
    case SynthKind::kHum: {
      const double f = rng.uniform(50.0, 120.0);
      const double amp = rng.uniform(100.0, 800.0);
      for (std::size_t i = 0; i < buf.size(); ++i) {
        buf[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / kSampleRateHz);
      }
      add_background(buf, rng, kBackgroundStd);
      break;
    }
    case SynthKind::kFragment: {
      // A token hanging 30-70% off either edge of the clip.
      const auto tok = synth_token(static_cast<std::size_t>(rng.below(kSynthPatternCount)),
                                   rng.uniform(4000.0, 9000.0));
      const double outside = rng.uniform(0.3, 0.7);
      const auto cut = static_cast<std::size_t>(outside * static_cast<double>(tok.size()));
      if (rng.below(2) == 0) {
        for (std::size_t i = cut; i < tok.size(); ++i) buf[i - cut] += tok[i];
      } else {
        const std::size_t start = kClipSamples - (tok.size() - cut);
        for (std::size_t i = 0; i + cut < tok.size(); ++i) buf[start + i] += tok[i];
      }
      add_background(buf, rng, kBackgroundStd);
      break;
    }
  }
  std::vector<std::int16_t> out(buf.size());
  std::transform(buf.begin(), buf.end(), out.begin(), to_pcm);
  return out;
}

void write_synthetic_dataset(const std::filesystem::path& root,
                             const std::vector<std::pair<std::string, std::size_t>>& label_counts,
                             std::uint64_t seed, int clip_ms) {
  std::vector<std::string> labels;
  for (const auto& [label, n] : label_counts) labels.push_back(label);
  const auto classes = synth_classes_for(labels);
  const auto keep = static_cast<std::size_t>(std::clamp(clip_ms, 1, 1000)) * (kSampleRateHz / 1000);
  for (std::size_t li = 0; li < label_counts.size(); ++li) {
    const auto& [label, count] = label_counts[li];
    const auto dir = root / label;
    std::filesystem::create_directories(dir);
    Rng rng(seed ^ fnv1a(label));
    for (std::size_t i = 0; i < count; ++i) {
      auto samples = synth_clip_samples(classes[li], rng);
      samples.resize(keep);
      char name[64];
      std::snprintf(name, sizeof(name), "_%04zu.wav", i);
      write_wav(dir / (label + name), samples);
    }
  }
}

SynthStream synth_command_stream(std::span<const std::size_t> patterns, Rng& rng, int lead_ms,
                                 int spacing_ms, int tail_ms) {
  const std::size_t per_ms = kSampleRateHz / 1000;
  const std::size_t n_ms = static_cast<std::size_t>(lead_ms) +
                           (patterns.empty() ? 0 : (patterns.size() - 1) * static_cast<std::size_t>(spacing_ms)) +
                           kSynthTokenSamples / per_ms + static_cast<std::size_t>(tail_ms);
  std::vector<double> buf(n_ms * per_ms, 0.0);
  SynthStream out;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const std::int64_t onset = lead_ms + static_cast<std::int64_t>(i) * spacing_ms;
    out.onsets_ms.push_back(onset);
    const auto tok = synth_token(patterns[i], rng.uniform(5000.0, 8000.0));
    const auto start = static_cast<std::size_t>(onset) * per_ms;
    for (std::size_t k = 0; k < tok.size(); ++k) buf[start + k] += tok[k];
  }
  add_background(buf, rng, kBackgroundStd);
  out.samples.resize(buf.size());
  std::transform(buf.begin(), buf.end(), out.samples.begin(), to_pcm);
  return out;
}

}  // namespace kwspot
