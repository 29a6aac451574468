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

#include "kwspot/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <thread>

#include "kwspot/error.hpp"
#include "kwspot/stream.hpp"
#include "kwspot/websocket.hpp"

namespace kwspot::cli {
namespace {

constexpr std::size_t kRingSamples = 4 * kSampleRateHz;

// Work for the consumer that must happen after `position` samples.
struct Command {
  enum class Kind { kReset, kError } kind;
  std::uint64_t position;
  std::string message;
};

struct Pipeline {
  SpscRingBuffer ring{kRingSamples};
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<Command> commands;
  std::uint64_t pushed = 0;  // producer-owned, published under mutex
  bool done = false;
};

}  // namespace

DemoServer::DemoServer(const QuantizedModel& model, const RunConfig& config)
    : model_(model), config_(config) {
  config_.validate();
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::kIo, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(config_.port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 4) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    if (err == EADDRINUSE) {
      throw Error(ErrorCode::kPortInUse, "port " + std::to_string(config_.port) + " is already in use");
    }
    throw Error(ErrorCode::kIo, std::string("bind failed: ") + std::strerror(err));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

DemoServer::~DemoServer() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void DemoServer::stop() noexcept {
  stopping_ = true;
  ::shutdown(listen_fd_, SHUT_RDWR);
  std::lock_guard lock(client_mutex_);
  if (client_fd_ >= 0) ::shutdown(client_fd_, SHUT_RDWR);
}

void DemoServer::serve() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      if (stopping_) break;
      throw Error(ErrorCode::kIo, std::string("accept failed: ") + std::strerror(errno));
    }
    {
      std::lock_guard lock(client_mutex_);
      client_fd_ = fd;
    }
    try {
      handle_client(fd);
    } catch (const Error&) {
      // Client went away mid-send; wait for the next one.
    }
    std::lock_guard lock(client_mutex_);
    client_fd_ = -1;
  }
}

void DemoServer::handle_client(int fd) {
  if (!ws::server_handshake(fd)) {
    ::close(fd);
    return;
  }
  ws::Connection conn(fd, false);
  Pipeline pipe;

  // Consumer: inference and interpretation, the only sender of events.
  std::thread consumer([&] {
    StreamingSession session(model_, config_);
    const EventSink sink = [&](const ServiceEvent& ev) { conn.send_text(ev.to_json()); };
    std::vector<std::int16_t> buf(kSampleRateHz / 10);
    std::uint64_t consumed = 0;
    try {
      for (;;) {
        std::optional<Command> cmd;
        std::uint64_t limit;
        bool finished;
        {
          std::unique_lock lock(pipe.mutex);
          pipe.cv.wait(lock, [&] {
            return pipe.done || pipe.pushed > consumed ||
                   (!pipe.commands.empty() && pipe.commands.front().position <= consumed);
          });
          limit = pipe.pushed;
          if (!pipe.commands.empty()) {
            limit = std::min(limit, pipe.commands.front().position);
            if (pipe.commands.front().position <= consumed) {
              cmd = std::move(pipe.commands.front());
              pipe.commands.pop_front();
            }
          }
          finished = pipe.done && consumed == pipe.pushed && pipe.commands.empty() && !cmd;
        }
        if (cmd) {
          if (cmd->kind == Command::Kind::kReset) {
            session.reset(sink);
          } else {
            ServiceEvent ev;
            ev.kind = EventKind::kError;
            ev.message = cmd->message;
            sink(ev);
          }
          continue;
        }
        if (finished) break;
        while (consumed < limit) {
          const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), limit - consumed));
          const std::size_t got = pipe.ring.pop({buf.data(), want});
          if (got == 0) break;
          consumed += got;
          pipe.cv.notify_all();
          session.feed({buf.data(), got}, sink);
        }
      }
    } catch (const std::exception& e) {
      try {
        ServiceEvent ev;
        ev.kind = EventKind::kError;
        ev.message = e.what();
        sink(ev);
      } catch (...) {
      }
      {
        std::lock_guard lock(pipe.mutex);
        pipe.done = true;
      }
      pipe.cv.notify_all();
      conn.shutdown();
    }
  });

  auto post = [&](Command::Kind kind, std::string message) {
    {
      std::lock_guard lock(pipe.mutex);
      pipe.commands.push_back({kind, pipe.pushed, std::move(message)});
    }
    pipe.cv.notify_all();
  };

  // Producer: socket reads into the ring buffer.
  std::vector<std::int16_t> samples;
  for (;;) {
    std::optional<ws::Message> msg;
    try {
      msg = conn.receive();
    } catch (const Error& e) {
      post(Command::Kind::kError, e.what());
      break;
    }
    if (!msg || msg->kind == ws::Message::Kind::kClose) break;
    {
      std::lock_guard lock(pipe.mutex);
      if (pipe.done) break;
    }
    switch (msg->kind) {
      case ws::Message::Kind::kBinary: {
        if (msg->payload.size() % 2 != 0) {
          post(Command::Kind::kError, "ClientProtocolError: binary message has an odd byte count");
          break;
        }
        samples.resize(msg->payload.size() / 2);
        for (std::size_t i = 0; i < samples.size(); ++i) {
          samples[i] = static_cast<std::int16_t>(msg->payload[2 * i] | (msg->payload[2 * i + 1] << 8));
        }
        std::span<const std::int16_t> rest(samples);
        while (!rest.empty()) {
          const std::size_t n = pipe.ring.push(rest);
          rest = rest.subspan(n);
          {
            std::unique_lock lock(pipe.mutex);
            pipe.pushed += n;
            pipe.cv.notify_all();
            if (!rest.empty()) {
              pipe.cv.wait(lock, [&] { return pipe.done || pipe.ring.size() < pipe.ring.capacity(); });
              if (pipe.done) break;
            }
          }
        }
        break;
      }
      case ws::Message::Kind::kText: {
        const std::string text = msg->text();
        if (text == "reset") {
          post(Command::Kind::kReset, {});
        } else {
          post(Command::Kind::kError, "ClientProtocolError: unknown command '" + text + "'");
        }
        break;
      }
      case ws::Message::Kind::kPing:
        conn.send_pong(msg->payload);
        break;
      case ws::Message::Kind::kPong:
        break;
      case ws::Message::Kind::kProtocolError:
        post(Command::Kind::kError, "ClientProtocolError: " + msg->error);
        break;
      case ws::Message::Kind::kClose:
        break;
    }
  }
  {
    std::lock_guard lock(pipe.mutex);
    pipe.done = true;
  }
  pipe.cv.notify_all();
  consumer.join();
  try {
    conn.send_close();
  } catch (const Error&) {
  }
}

}  // namespace kwspot::cli
