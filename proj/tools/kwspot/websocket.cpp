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

#include "kwspot/websocket.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <random>

#include "kwspot/error.hpp"

namespace kwspot::cli::ws {
namespace {

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::uint64_t kMaxPayload = 16u << 20;

std::string base64(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

void send_all(int fd, const void* data, std::size_t size) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  while (size > 0) {
    const ssize_t n = ::send(fd, p, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, std::string("send failed: ") + std::strerror(errno));
    }
    p += n;
    size -= static_cast<std::size_t>(n);
  }
}

// Reads up to the blank line ending an HTTP header block.
std::string read_http_head(int fd) {
  std::string head;
  char c;
  while (head.size() < 16384) {
    const ssize_t n = ::recv(fd, &c, 1, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    head.push_back(c);
    if (head.size() >= 4 && head.compare(head.size() - 4, 4, "\r\n\r\n") == 0) return head;
  }
  return {};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

// Header name (lower case) -> value; the first line is returned in `start`.
std::vector<std::pair<std::string, std::string>> parse_headers(const std::string& head,
                                                               std::string& start) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  bool first = true;
  while (pos < head.size()) {
    std::size_t eol = head.find("\r\n", pos);
    if (eol == std::string::npos) eol = head.size();
    const std::string_view line(head.data() + pos, eol - pos);
    pos = eol + 2;
    if (first) {
      start = std::string(line);
      first = false;
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    out.emplace_back(lower(trim(line.substr(0, colon))), trim(line.substr(colon + 1)));
  }
  return out;
}

std::string header(const std::vector<std::pair<std::string, std::string>>& headers,
                   std::string_view name) {
  for (const auto& [k, v] : headers) {
    if (k == name) return v;
  }
  return {};
}

bool contains_token(const std::string& value, std::string_view token) {
  return lower(value).find(token) != std::string::npos;
}

}  // namespace

std::string accept_key(std::string_view client_key) {
  std::string input(client_key);
  input += kGuid;
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(input.data(), input.size(), md.data(), &len, EVP_sha1(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-1 digest failed");
  }
  return base64({md.data(), len});
}

std::vector<std::uint8_t> encode_frame(Opcode op, std::span<const std::uint8_t> payload,
                                       std::optional<std::uint32_t> mask, bool fin) {
  std::vector<std::uint8_t> out;
  out.reserve(payload.size() + 14);
  out.push_back(static_cast<std::uint8_t>((fin ? 0x80 : 0x00) | static_cast<std::uint8_t>(op)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::uint64_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<std::uint8_t>(mask_bit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(mask_bit | 126);
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
  } else {
    out.push_back(mask_bit | 127);
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  }
  std::array<std::uint8_t, 4> key{};
  if (mask) {
    for (int i = 0; i < 4; ++i) key[i] = static_cast<std::uint8_t>(*mask >> (24 - 8 * i));
    out.insert(out.end(), key.begin(), key.end());
  }
  for (std::size_t i = 0; i < payload.size(); ++i) {
    out.push_back(mask ? static_cast<std::uint8_t>(payload[i] ^ key[i % 4]) : payload[i]);
  }
  return out;
}

void FrameParser::append(std::span<const std::uint8_t> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameParser::next() {
  const std::size_t avail = buf_.size() - pos_;
  if (avail < 2) return std::nullopt;
  const std::uint8_t* p = buf_.data() + pos_;
  Frame f;
  f.fin = (p[0] & 0x80) != 0;
  f.rsv = static_cast<std::uint8_t>((p[0] >> 4) & 0x07);
  f.opcode = p[0] & 0x0F;
  f.masked = (p[1] & 0x80) != 0;
  std::uint64_t len = p[1] & 0x7F;
  std::size_t header = 2;
  if (len == 126) {
    if (avail < 4) return std::nullopt;
    len = (std::uint64_t{p[2]} << 8) | p[3];
    header = 4;
  } else if (len == 127) {
    if (avail < 10) return std::nullopt;
    len = 0;
    for (int i = 0; i < 8; ++i) len = (len << 8) | p[2 + i];
    header = 10;
  }
  if (len > kMaxPayload) {
    throw Error(ErrorCode::kClientProtocolError, "frame payload exceeds 16 MiB");
  }
  std::array<std::uint8_t, 4> key{};
  if (f.masked) {
    if (avail < header + 4) return std::nullopt;
    std::copy_n(p + header, 4, key.begin());
    header += 4;
  }
  if (avail < header + len) return std::nullopt;
  f.payload.assign(p + header, p + header + len);
  if (f.masked) {
    for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] ^= key[i % 4];
  }
  pos_ += header + static_cast<std::size_t>(len);
  if (pos_ > 65536 && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return f;
}

Connection::Connection(int fd, bool client_side) : fd_(fd), client_side_(client_side) {}

Connection::~Connection() {
  if (fd_ >= 0) ::close(fd_);
}

void Connection::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

std::optional<Message> Connection::receive() {
  std::array<std::uint8_t, 8192> chunk{};
  for (;;) {
    while (auto frame = parser_.next()) {
      Frame& f = *frame;
      auto error = [](std::string msg) {
        Message m;
        m.kind = Message::Kind::kProtocolError;
        m.error = std::move(msg);
        return m;
      };
      if (f.rsv != 0) return error("reserved bits set");
      if (!client_side_ && !f.masked) return error("client frame is not masked");
      const bool control = (f.opcode & 0x08) != 0;
      if (control) {
        if (!f.fin || f.payload.size() > 125) return error("malformed control frame");
        Message m;
        m.payload = std::move(f.payload);
        switch (static_cast<Opcode>(f.opcode)) {
          case Opcode::kClose: m.kind = Message::Kind::kClose; return m;
          case Opcode::kPing: m.kind = Message::Kind::kPing; return m;
          case Opcode::kPong: m.kind = Message::Kind::kPong; return m;
          default: return error("unknown opcode " + std::to_string(f.opcode));
        }
      }
      if (f.opcode == static_cast<std::uint8_t>(Opcode::kContinuation)) {
        if (!partial_op_) return error("continuation without a message");
        partial_.insert(partial_.end(), f.payload.begin(), f.payload.end());
      } else if (f.opcode == static_cast<std::uint8_t>(Opcode::kText) ||
                 f.opcode == static_cast<std::uint8_t>(Opcode::kBinary)) {
        if (partial_op_) {
          partial_op_.reset();
          partial_.clear();
          return error("new message before previous one finished");
        }
        partial_op_ = f.opcode;
        partial_ = std::move(f.payload);
      } else {
        return error("unknown opcode " + std::to_string(f.opcode));
      }
      if (f.fin) {
        Message m;
        m.kind = *partial_op_ == static_cast<std::uint8_t>(Opcode::kText) ? Message::Kind::kText
                                                                         : Message::Kind::kBinary;
        m.payload = std::move(partial_);
        partial_.clear();
        partial_op_.reset();
        return m;
      }
    }
    const ssize_t n = ::recv(fd_, chunk.data(), chunk.size(), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return std::nullopt;
    parser_.append({chunk.data(), static_cast<std::size_t>(n)});
  }
}

void Connection::send_frame(Opcode op, std::span<const std::uint8_t> payload) {
  std::optional<std::uint32_t> mask;
  if (client_side_) {
    static thread_local std::mt19937 gen{std::random_device{}()};
    mask = gen();
  }
  const auto bytes = encode_frame(op, payload, mask);
  std::lock_guard lock(send_mutex_);
  send_all(fd_, bytes.data(), bytes.size());
}

void Connection::send_text(std::string_view text) {
  send_frame(Opcode::kText, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void Connection::send_binary(std::span<const std::uint8_t> bytes) { send_frame(Opcode::kBinary, bytes); }

void Connection::send_close() {
  const std::array<std::uint8_t, 2> code{0x03, 0xE8};  // 1000
  send_frame(Opcode::kClose, code);
}

void Connection::send_pong(std::span<const std::uint8_t> payload) { send_frame(Opcode::kPong, payload); }

bool server_handshake(int fd) {
  const std::string head = read_http_head(fd);
  std::string start;
  const auto headers = parse_headers(head, start);
  const std::string key = header(headers, "sec-websocket-key");
  if (start.rfind("GET ", 0) != 0 || key.empty() ||
      !contains_token(header(headers, "upgrade"), "websocket")) {
    const std::string_view reply =
        "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";
    try {
      send_all(fd, reply.data(), reply.size());
    } catch (const Error&) {
    }
    return false;
  }
  const std::string reply = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
                            "Connection: Upgrade\r\nSec-WebSocket-Accept: " +
                            accept_key(key) + "\r\n\r\n";
  send_all(fd, reply.data(), reply.size());
  return true;
}

int client_connect(int port, std::string_view path) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::kIo, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw Error(ErrorCode::kIo, "connect to port " + std::to_string(port) + " failed");
  }
  std::array<std::uint8_t, 16> nonce{};
  std::random_device rd;
  for (auto& b : nonce) b = static_cast<std::uint8_t>(rd());
  const std::string key = base64(nonce);
  const std::string request = "GET " + std::string(path) +
                              " HTTP/1.1\r\nHost: 127.0.0.1:" + std::to_string(port) +
                              "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                              "Sec-WebSocket-Key: " + key + "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  try {
    send_all(fd, request.data(), request.size());
    const std::string head = read_http_head(fd);
    std::string start;
    const auto headers = parse_headers(head, start);
    if (start.find(" 101") == std::string::npos ||
        header(headers, "sec-websocket-accept") != accept_key(key)) {
      throw Error(ErrorCode::kIo, "WebSocket handshake rejected");
    }
  } catch (...) {
    ::close(fd);
    throw;
  }
  return fd;
}

}  // namespace kwspot::cli::ws
