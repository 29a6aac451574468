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
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kwspot::cli::ws {

/// base64(SHA-1(key + RFC 6455 GUID)).
std::string accept_key(std::string_view client_key);

enum class Opcode : std::uint8_t {
  kContinuation = 0x0,
  kText = 0x1,
  kBinary = 0x2,
  kClose = 0x8,
  kPing = 0x9,
  kPong = 0xA,
};

struct Frame {
  bool fin = true;
  std::uint8_t rsv = 0;
  std::uint8_t opcode = 0;
  bool masked = false;
  std::vector<std::uint8_t> payload;  // unmasked
};

std::vector<std::uint8_t> encode_frame(Opcode op, std::span<const std::uint8_t> payload,
                                       std::optional<std::uint32_t> mask = std::nullopt,
                                       bool fin = true);

/// Incremental frame decoder over a byte stream.
class FrameParser {
 public:
  void append(std::span<const std::uint8_t> bytes);
  std::optional<Frame> next();

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

/// A completed message, or a protocol problem with the frame that was skipped.
struct Message {
  enum class Kind { kText, kBinary, kClose, kPing, kPong, kProtocolError } kind = Kind::kText;
  std::vector<std::uint8_t> payload;
  std::string error;

  std::string text() const { return {payload.begin(), payload.end()}; }
};

/// One WebSocket endpoint over a connected socket. Owns the descriptor.
/// Sends are serialized internally; receives must come from one thread.
class Connection {
 public:
  Connection(int fd, bool client_side);
  ~Connection();
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  /// Blocks for the next message; nullopt when the peer hangs up.
  std::optional<Message> receive();

  void send_text(std::string_view text);
  void send_binary(std::span<const std::uint8_t> bytes);
  void send_close();
  void send_pong(std::span<const std::uint8_t> payload);
  void shutdown() noexcept;

 private:
  void send_frame(Opcode op, std::span<const std::uint8_t> payload);

  int fd_;
  bool client_side_;
  FrameParser parser_;
  std::vector<std::uint8_t> partial_;
  std::optional<std::uint8_t> partial_op_;
  std::mutex send_mutex_;
};

/// Reads an HTTP upgrade request from `fd` and answers it. Returns false and
/// answers 400 when the request is not a WebSocket upgrade.
bool server_handshake(int fd);

/// Connects to 127.0.0.1:port and performs the client handshake.
/// Throws kIo on failure.
int client_connect(int port, std::string_view path = "/");

}  // namespace kwspot::cli::ws
