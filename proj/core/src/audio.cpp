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

#include "kwspot/audio.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "kwspot/error.hpp"

namespace kwspot {
namespace {

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kMalformedWav, "missing RIFF/WAVE header");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw Error(ErrorCode::kMalformedWav, "chunk extends past end of file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorCode::kMalformedWav, "fmt chunk too short");
      const std::uint8_t* f = bytes.data() + body;
      std::uint16_t format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      const std::uint16_t bits = read_u16(f + 14);
      if (format == kFormatExtensible && size >= 40) format = read_u16(f + 24);
      if (format != kFormatPcm) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    "format code " + std::to_string(format) + " is not PCM");
      }
      if (bits != 16) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    std::to_string(bits) + "-bit samples; only 16-bit PCM is supported");
      }
      if (channels == 0 || rate == 0) {
        throw Error(ErrorCode::kMalformedWav, "zero channels or sample rate");
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorCode::kMalformedWav, "data chunk before fmt chunk");
      const std::size_t frame_bytes = 2u * channels;
      const std::size_t frames = size / frame_bytes;
      AudioClip clip;
      clip.sample_rate_hz = static_cast<int>(rate);
      clip.samples.resize(frames);
      const std::uint8_t* d = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        std::int32_t sum = 0;
        for (std::size_t c = 0; c < channels; ++c) {
          sum += static_cast<std::int16_t>(read_u16(d + (i * channels + c) * 2));
        }
        clip.samples[i] = static_cast<std::int16_t>(sum / static_cast<std::int32_t>(channels));
      }
      return clip;
    }
    pos = body + size + (size & 1u);
  }
  throw Error(ErrorCode::kMalformedWav, have_fmt ? "no data chunk" : "no fmt chunk");
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  AudioClip clip = decode_wav(bytes);
  clip.source_path = path.string();
  return clip;
}

std::vector<std::uint8_t> encode_wav(std::span<const std::int16_t> samples, int sample_rate_hz) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::int16_t s : samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples,
               int sample_rate_hz) {
  const auto bytes = encode_wav(samples, sample_rate_hz);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

AudioClip normalize_length(AudioClip clip) {
  if (clip.sample_rate_hz != kSampleRateHz) {
    throw Error(ErrorCode::kWrongSampleRate,
                std::to_string(clip.sample_rate_hz) + " Hz; expected 16000 Hz");
  }
  const std::size_t n = clip.samples.size();
  if (n == kClipSamples) return clip;

  std::vector<std::int16_t> out(kClipSamples, 0);
  if (n < kClipSamples) {
    const std::size_t front = (kClipSamples - n) / 2;
    std::copy(clip.samples.begin(), clip.samples.end(), out.begin() + static_cast<std::ptrdiff_t>(front));
  } else {
    const std::size_t start = (n - kClipSamples) / 2;
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), kClipSamples, out.begin());
  }
  clip.samples = std::move(out);
  return clip;
}

std::map<std::string, std::size_t> DatasetManifest::counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& [label, files] : labels) out[label] = files.size();
  return out;
}

std::size_t DatasetManifest::total() const {
  std::size_t n = 0;
  for (const auto& [label, files] : labels) n += files.size();
  return n;
}

std::string DatasetManifest::to_json() const {
  nlohmann::ordered_json j;
  j["labels"] = nlohmann::ordered_json::object();
  for (const auto& [label, files] : labels) j["labels"][label] = files;
  j["sample_rate_hz"] = sample_rate_hz;
  if (!root.empty()) j["root"] = root.generic_string();
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    for (const auto& [label, files] : j.at("labels").items()) {
      m.labels[label] = files.get<std::vector<std::string>>();
    }
    if (j.contains("root")) m.root = j["root"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad dataset manifest: ") + e.what());
  }
  return m;
}

DatasetManifest ingest_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::kEmptyDataset, root.string() + " is not a directory");
  }
  DatasetManifest m;
  m.root = root;

  std::vector<fs::path> label_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) label_dirs.push_back(entry.path());
  }
  std::sort(label_dirs.begin(), label_dirs.end());

  for (const auto& dir : label_dirs) {
    const std::string label = dir.filename().string();
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext != ".wav") continue;
      const std::string rel = fs::relative(entry.path(), root).generic_string();
      try {
        (void)load_wav(entry.path());
        files.push_back(rel);
      } catch (const Error& e) {
        m.unreadable.push_back(rel + ": " + e.what());
      }
    }
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    m.labels[label] = std::move(files);
  }
  std::sort(m.unreadable.begin(), m.unreadable.end());

  if (m.labels.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no readable WAV files under " + root.string());
  }
  return m;
}

}  // namespace kwspot
