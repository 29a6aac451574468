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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kwspot {

inline constexpr int kSampleRateHz = 16000;
inline constexpr std::size_t kClipSamples = 16000;

/// One mono PCM-16 clip. Clips fed to the feature extractor are exactly one
/// second long at kSampleRateHz (see normalize_length).
struct AudioClip {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = kSampleRateHz;
  std::optional<std::string> label;
  std::optional<std::string> source_path;
};

/// Decodes a RIFF/WAVE PCM-16 buffer. Multi-channel frames are downmixed by
/// averaging (truncating toward zero). The sample rate is reported, never
/// converted.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);
AudioClip load_wav(const std::filesystem::path& path);

/// Encodes mono PCM-16 as a canonical 44-byte-header WAV.
std::vector<std::uint8_t> encode_wav(std::span<const std::int16_t> samples,
                                     int sample_rate_hz = kSampleRateHz);
void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples,
               int sample_rate_hz = kSampleRateHz);

/// Pads (symmetrically, odd sample at the back) or center-crops a 16 kHz clip
/// to exactly one second. Throws kWrongSampleRate for other rates.
AudioClip normalize_length(AudioClip clip);

/// Directory-per-label dataset listing. Paths are relative to `root` and
/// use '/' separators.
struct DatasetManifest {
  std::filesystem::path root;
  int sample_rate_hz = kSampleRateHz;
  std::map<std::string, std::vector<std::string>> labels;
  /// Files that failed to parse during ingestion, with the reason.
  std::vector<std::string> unreadable;

  std::map<std::string, std::size_t> counts() const;
  std::size_t total() const;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

/// Scans `root/<label>/*.wav`. Labels and files are sorted lexicographically.
/// Unparseable files are collected in `unreadable` rather than aborting.
DatasetManifest ingest_dataset(const std::filesystem::path& root);

}  // namespace kwspot
