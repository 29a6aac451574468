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

#include <atomic>
#include <mutex>

#include "kwspot/quant.hpp"
#include "kwspot/session.hpp"

namespace kwspot::cli {

/// Local WebSocket service for the demo UI. One client at a time; each client
/// gets a fresh StreamingSession. Binary messages carry little-endian PCM-16,
/// the text message `reset` reinitializes the interpreter, and every
/// ServiceEvent goes out as one JSON text message.
class DemoServer {
 public:
  /// Binds 127.0.0.1:config.port (0 picks a free port). Throws kPortInUse.
  DemoServer(const QuantizedModel& model, const RunConfig& config);
  ~DemoServer();
  DemoServer(const DemoServer&) = delete;
  DemoServer& operator=(const DemoServer&) = delete;

  int port() const noexcept { return port_; }

  /// Accepts and serves clients until stop().
  void serve();
  /// Safe from any thread.
  void stop() noexcept;

 private:
  void handle_client(int fd);

  const QuantizedModel& model_;
  RunConfig config_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex client_mutex_;
  int client_fd_ = -1;
};

}  // namespace kwspot::cli
