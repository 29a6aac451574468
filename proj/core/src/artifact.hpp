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

// Container shared by float and quantized artifacts:
//   magic[4] | u32 header_len | header JSON | payload
// The header carries "checksum": CRC-32 (8 hex digits) over the header bytes,
// with the checksum digits zeroed, followed by the payload.

#include <cstdint>
#include <cstring>
#include <type_traits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kwspot::detail {

std::vector<std::uint8_t> pack_artifact(std::string_view magic, nlohmann::ordered_json header,
                                        std::span<const std::uint8_t> payload);

struct UnpackedArtifact {
  nlohmann::json header;
  std::span<const std::uint8_t> payload;
};

/// Validates magic, framing, version (kVersionMismatch) and checksum
/// (kCorruptArtifact).
UnpackedArtifact unpack_artifact(std::string_view magic, int expected_version,
                                 std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  U u;
  std::memcpy(&u, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

template <typename T>
T read_le(const std::uint8_t* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  T value;
  std::memcpy(&value, &u, sizeof(T));
  return value;
}

inline void append_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  append_le(out, u);
}

inline float read_f32(const std::uint8_t* p) {
  const auto u = read_le<std::uint32_t>(p);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace kwspot::detail
