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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kwspot/audio.hpp"

namespace kwspot {

/// Single-producer/single-consumer ring buffer of PCM samples. Storage is
/// allocated once in the constructor; push/pop never allocate.
class SpscRingBuffer {
 public:
  explicit SpscRingBuffer(std::size_t capacity);

  SpscRingBuffer(const SpscRingBuffer&) = delete;
  SpscRingBuffer& operator=(const SpscRingBuffer&) = delete;

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept;

  /// Producer side. Returns the number of samples actually written.
  std::size_t push(std::span<const std::int16_t> samples) noexcept;
  /// Consumer side. Returns the number of samples actually read.
  std::size_t pop(std::span<std::int16_t> out) noexcept;

 private:
  std::size_t capacity_;
  std::unique_ptr<std::int16_t[]> data_;
  std::atomic<std::size_t> head_{0};  // total written
  std::atomic<std::size_t> tail_{0};  // total read
};

struct StreamWindow {
  std::span<const std::int16_t> samples;  // exactly kClipSamples
  std::int64_t start_time_ms = 0;
};

/// Accumulates a PCM stream and emits a one-second window every hop. Keeps the
/// latest second in a fixed 16000-sample circular history; after construction
/// feeding samples performs no heap allocation.
class SlidingWindow {
 public:
  explicit SlidingWindow(int hop_ms);

  int hop_ms() const noexcept { return hop_ms_; }
  std::size_t hop_samples() const noexcept { return hop_samples_; }
  std::size_t history_capacity() const noexcept { return kClipSamples; }

  /// Appends samples; invokes `on_window` for each window completed. The span
  /// handed to the callback is valid only during the call.
  template <typename Callback>
  void feed(std::span<const std::int16_t> samples, Callback&& on_window) {
    for (std::int16_t s : samples) {
      if (push_sample(s)) on_window(current_window());
    }
  }

  void reset() noexcept;
  std::uint64_t samples_seen() const noexcept { return seen_; }

 private:
  bool push_sample(std::int16_t s) noexcept;
  StreamWindow current_window() noexcept;

  int hop_ms_;
  std::size_t hop_samples_;
  std::vector<std::int16_t> history_;
  std::vector<std::int16_t> linear_;
  std::size_t write_pos_ = 0;
  std::uint64_t seen_ = 0;
  std::uint64_t next_emit_at_ = kClipSamples;
};

/// Pull-based sample provider. `read` returns 0 once the source is closed.
class PcmSource {
 public:
  virtual ~PcmSource() = default;
  virtual std::size_t read(std::span<std::int16_t> out) = 0;
};

class MemoryPcmSource final : public PcmSource {
 public:
  explicit MemoryPcmSource(std::span<const std::int16_t> samples, std::size_t chunk = 1024)
      : samples_(samples), chunk_(chunk) {}
  std::size_t read(std::span<std::int16_t> out) override;

 private:
  std::span<const std::int16_t> samples_;
  std::size_t chunk_;
  std::size_t pos_ = 0;
};

/// Owned copy of a window, for collecting the whole stream at once.
struct OwnedWindow {
  std::vector<std::int16_t> samples;
  std::int64_t start_time_ms = 0;
};

/// Pull interface over a PcmSource: `next()` yields windows until the source
/// closes, then returns nullopt.
class WindowStream {
 public:
  WindowStream(PcmSource& source, int hop_ms);
  std::optional<StreamWindow> next();

 private:
  PcmSource& source_;
  SlidingWindow window_;
  std::vector<std::int16_t> chunk_;
  std::size_t chunk_pos_ = 0;
  std::size_t chunk_len_ = 0;
  bool closed_ = false;
};

std::vector<OwnedWindow> stream_windows(PcmSource& source, int hop_ms);

/// max(0, floor((duration_ms - 1000) / hop_ms) + 1), with duration from the
/// sample count at 16 kHz.
std::size_t expected_window_count(std::size_t n_samples, int hop_ms);

}  // namespace kwspot
