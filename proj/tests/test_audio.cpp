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

#include <doctest.h>

#include <fstream>

#include "kwspot/audio.hpp"
#include "kwspot/random.hpp"
#include "support/oracles.hpp"

using namespace kwspot;
using oracle::thrown_code;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::vector<std::int16_t> ramp(std::size_t n) {
  std::vector<std::int16_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::int16_t>(static_cast<int>(i % 2000) - 1000);
  return v;
}

}  // namespace

TEST_CASE("load_wav reads silence") {
  oracle::TempDir dir;
  write_bytes(dir / "z.wav", oracle::wav_bytes(std::vector<std::int16_t>(16000, 0), 1, 16000));
  const AudioClip c = load_wav(dir / "z.wav");
  CHECK(c.samples.size() == 16000);
  CHECK(c.sample_rate_hz == 16000);
  CHECK(std::all_of(c.samples.begin(), c.samples.end(), [](std::int16_t s) { return s == 0; }));
  CHECK(c.source_path.has_value());
}

TEST_CASE("stereo downmix averages channels") {
  std::vector<std::int16_t> frames;
  for (int i = 0; i < 800; ++i) {
    frames.push_back(100);
    frames.push_back(-100);
  }
  const AudioClip c = decode_wav(oracle::wav_bytes(frames, 2, 16000));
  REQUIRE(c.samples.size() == 800);
  CHECK(std::all_of(c.samples.begin(), c.samples.end(), [](std::int16_t s) { return s == 0; }));

  std::vector<std::int16_t> skew = {300, 100, -7, -2};
  const AudioClip d = decode_wav(oracle::wav_bytes(skew, 2, 16000));
  CHECK(d.samples == std::vector<std::int16_t>{200, -4});
}

TEST_CASE("short clip round-trips byte exact and keeps its rate") {
  oracle::TempDir dir;
  const auto samples = ramp(9600);
  const auto bytes = oracle::wav_bytes(samples, 1, 16000);
  write_bytes(dir / "short.wav", bytes);
  const AudioClip c = load_wav(dir / "short.wav");
  CHECK(c.samples == samples);
  CHECK(encode_wav(c.samples) == bytes);

  const AudioClip other = decode_wav(oracle::wav_bytes(samples, 1, 8000));
  CHECK(other.sample_rate_hz == 8000);
  CHECK(other.samples.size() == 9600);
}

TEST_CASE("write then load is sample exact") {
  oracle::TempDir dir;
  kwspot::Rng rng(3);
  std::vector<std::int16_t> v(4321);
  for (auto& s : v) s = static_cast<std::int16_t>(static_cast<int>(rng.below(65536)) - 32768);
  write_wav(dir / "r.wav", v);
  CHECK(load_wav(dir / "r.wav").samples == v);
}

TEST_CASE("malformed and unsupported WAVs") {
  const std::vector<std::uint8_t> junk = {'R', 'I', 'F', 'F', 0, 0};
  CHECK(thrown_code([&] { decode_wav(junk); }) == ErrorCode::kMalformedWav);

  auto truncated = oracle::wav_bytes(ramp(100), 1, 16000);
  truncated.resize(30);
  CHECK(thrown_code([&] { decode_wav(truncated); }) == ErrorCode::kMalformedWav);

  const auto floaty = oracle::wav_bytes(ramp(100), 1, 16000, 3, 16);
  CHECK(thrown_code([&] { decode_wav(floaty); }) == ErrorCode::kUnsupportedEncoding);

  std::vector<std::int16_t> eight(50, 0);
  const auto bits8 = oracle::wav_bytes(eight, 1, 16000, 1, 8);
  CHECK(thrown_code([&] { decode_wav(bits8); }) == ErrorCode::kUnsupportedEncoding);

  CHECK(thrown_code([] { load_wav("/nonexistent/x.wav"); }).has_value());
}

TEST_CASE("normalize_length pads, crops and is idempotent") {
  AudioClip same;
  same.samples = ramp(16000);
  CHECK(normalize_length(same).samples == same.samples);

  AudioClip shorter;
  shorter.samples = ramp(9600);
  const auto padded = normalize_length(shorter).samples;
  REQUIRE(padded.size() == 16000);
  for (std::size_t i = 0; i < 3200; ++i) REQUIRE(padded[i] == 0);
  for (std::size_t i = 0; i < 9600; ++i) REQUIRE(padded[3200 + i] == shorter.samples[i]);
  for (std::size_t i = 12800; i < 16000; ++i) REQUIRE(padded[i] == 0);

  AudioClip odd;
  odd.samples = std::vector<std::int16_t>(15999, 5);
  const auto p = normalize_length(odd).samples;
  CHECK(p.front() == 5);  // 0 samples in front
  CHECK(p.back() == 0);   // the odd sample goes to the back

  AudioClip longer;
  longer.samples = ramp(20000);
  const auto cropped = normalize_length(longer).samples;
  CHECK(cropped == std::vector<std::int16_t>(longer.samples.begin() + 2000, longer.samples.begin() + 18000));

  for (std::size_t n : {1u, 100u, 15999u, 16001u, 40000u}) {
    AudioClip c;
    c.samples = ramp(n);
    const AudioClip once = normalize_length(c);
    CHECK(normalize_length(once).samples == once.samples);
  }

  AudioClip wrong;
  wrong.sample_rate_hz = 8000;
  wrong.samples = ramp(8000);
  CHECK(thrown_code([&] { normalize_length(wrong); }) == ErrorCode::kWrongSampleRate);
}

TEST_CASE("ingest_dataset lists labels and files") {
  oracle::TempDir dir;
  const auto wav = oracle::wav_bytes(ramp(1600), 1, 16000);
  write_bytes(dir / "red/a.wav", wav);
  write_bytes(dir / "blue/b.wav", wav);
  write_bytes(dir / "blue/a.wav", wav);
  write_bytes(dir / "blue/notes.txt", {'x'});
  write_bytes(dir / "red/broken.wav", {'R', 'I', 'F', 'F'});

  const DatasetManifest m = ingest_dataset(dir.path());
  CHECK(m.counts() == std::map<std::string, std::size_t>{{"blue", 2}, {"red", 1}});
  CHECK(m.total() == 3);
  CHECK(m.labels.at("blue") == std::vector<std::string>{"blue/a.wav", "blue/b.wav"});
  CHECK(m.unreadable.size() == 1);

  const DatasetManifest back = DatasetManifest::from_json(m.to_json());
  CHECK(back.labels == m.labels);
  CHECK(back.sample_rate_hz == 16000);

  oracle::TempDir empty;
  CHECK(thrown_code([&] { ingest_dataset(empty.path()); }) == ErrorCode::kEmptyDataset);
}
