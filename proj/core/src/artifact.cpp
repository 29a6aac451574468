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

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <iterator>

#include "kwspot/error.hpp"

namespace kwspot::detail {
namespace {

constexpr std::string_view kChecksumKey = "\"checksum\":\"";
constexpr std::size_t kChecksumDigits = 8;

std::uint32_t crc_of(std::span<const std::uint8_t> header, std::span<const std::uint8_t> payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, header.data(), static_cast<uInt>(header.size()));
  crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> pack_artifact(std::string_view magic, nlohmann::ordered_json header,
                                        std::span<const std::uint8_t> payload) {
  header["payload_bytes"] = payload.size();
  header["checksum"] = std::string(kChecksumDigits, '0');
  std::string text = header.dump();
  const auto at = text.find(kChecksumKey);
  std::vector<std::uint8_t> head(text.begin(), text.end());
  const std::uint32_t crc = crc_of(head, payload);
  char hex[kChecksumDigits + 1];
  std::snprintf(hex, sizeof(hex), "%08x", crc);
  text.replace(at + kChecksumKey.size(), kChecksumDigits, hex);

  std::vector<std::uint8_t> out(magic.begin(), magic.end());
  append_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

UnpackedArtifact unpack_artifact(std::string_view magic, int expected_version,
                                 std::span<const std::uint8_t> bytes) {
  const std::size_t prefix = magic.size() + 4;
  if (bytes.size() < prefix) throw Error(ErrorCode::kCorruptArtifact, "file too short");
  if (!std::equal(magic.begin(), magic.end(), bytes.begin())) {
    throw Error(ErrorCode::kCorruptArtifact, "bad magic");
  }
  const auto header_len = read_le<std::uint32_t>(bytes.data() + magic.size());
  if (header_len > bytes.size() - prefix) throw Error(ErrorCode::kCorruptArtifact, "truncated header");
  std::string text(bytes.begin() + static_cast<std::ptrdiff_t>(prefix),
                   bytes.begin() + static_cast<std::ptrdiff_t>(prefix + header_len));

  UnpackedArtifact out;
  try {
    out.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, std::string("header is not JSON: ") + e.what());
  }
  if (!out.header.contains("version") || !out.header["version"].is_number_integer()) {
    throw Error(ErrorCode::kCorruptArtifact, "header has no version");
  }
  const int version = out.header["version"].get<int>();
  if (version != expected_version) {
    throw Error(ErrorCode::kVersionMismatch, "artifact version " + std::to_string(version) +
                                                 "; this build reads version " +
                                                 std::to_string(expected_version));
  }

  const std::size_t payload_at = prefix + header_len;
  std::uint64_t payload_bytes = 0;
  std::string stored;
  try {
    payload_bytes = out.header.at("payload_bytes").get<std::uint64_t>();
    stored = out.header.at("checksum").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, e.what());
  }
  if (payload_bytes != bytes.size() - payload_at) {
    throw Error(ErrorCode::kCorruptArtifact, "payload is " + std::to_string(bytes.size() - payload_at) +
                                                 " bytes; header says " + std::to_string(payload_bytes));
  }
  out.payload = bytes.subspan(payload_at);

  const auto at = text.find(kChecksumKey);
  if (at == std::string::npos || stored.size() != kChecksumDigits) {
    throw Error(ErrorCode::kCorruptArtifact, "malformed checksum field");
  }
  text.replace(at + kChecksumKey.size(), kChecksumDigits, std::string(kChecksumDigits, '0'));
  std::vector<std::uint8_t> head(text.begin(), text.end());
  char hex[kChecksumDigits + 1];
  std::snprintf(hex, sizeof(hex), "%08x", crc_of(head, out.payload));
  if (stored != hex) throw Error(ErrorCode::kCorruptArtifact, "checksum mismatch");
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

}  // namespace kwspot::detail
