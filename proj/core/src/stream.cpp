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

#include "kwspot/stream.hpp"

#include <algorithm>

#include "kwspot/error.hpp"

namespace kwspot {

SpscRingBuffer::SpscRingBuffer(std::size_t capacity)
    : capacity_(capacity), data_(std::make_unique<std::int16_t[]>(capacity)) {
  if (capacity == 0) throw Error(ErrorCode::kInvalidArgument, "ring buffer capacity must be > 0");
}

std::size_t SpscRingBuffer::size() const noexcept {
  return head_.load(std::memory_order_acquire) - tail_.load(std::memory_order_acquire);
}

std::size_t SpscRingBuffer::push(std::span<const std::int16_t> samples) noexcept {
  const std::size_t head = head_.load(std::memory_order_relaxed);
  const std::size_t tail = tail_.load(std::memory_order_acquire);
  const std::size_t n = std::min(samples.size(), capacity_ - (head - tail));
  for (std::size_t i = 0; i < n; ++i) data_[(head + i) % capacity_] = samples[i];
  head_.store(head + n, std::memory_order_release);
  return n;
}

std::size_t SpscRingBuffer::pop(std::span<std::int16_t> out) noexcept {
  const std::size_t tail = tail_.load(std::memory_order_relaxed);
  const std::size_t head = head_.load(std::memory_order_acquire);
  const std::size_t n = std::min(out.size(), head - tail);
  for (std::size_t i = 0; i < n; ++i) out[i] = data_[(tail + i) % capacity_];
  tail_.store(tail + n, std::memory_order_release);
  return n;
}

SlidingWindow::SlidingWindow(int hop_ms)
    : hop_ms_(hop_ms),
      hop_samples_(static_cast<std::size_t>(hop_ms) * (kSampleRateHz / 1000)),
      history_(kClipSamples, 0),
      linear_(kClipSamples, 0) {
  if (hop_ms < 50 || hop_ms > 1000) {
    throw Error(ErrorCode::kInvalidArgument,
                "hop_ms " + std::to_string(hop_ms) + " outside [50, 1000]");
  }
}

void SlidingWindow::reset() noexcept {
  std::fill(history_.begin(), history_.end(), 0);
  write_pos_ = 0;
  seen_ = 0;
  next_emit_at_ = kClipSamples;
}

bool SlidingWindow::push_sample(std::int16_t s) noexcept {
  history_[write_pos_] = s;
  write_pos_ = (write_pos_ + 1) % kClipSamples;
  ++seen_;
  if (seen_ == next_emit_at_) {
    next_emit_at_ += hop_samples_;
    return true;
  }
  return false;
}

StreamWindow SlidingWindow::current_window() noexcept {
  // Oldest sample sits at write_pos_ once the history is full.
  const auto split = static_cast<std::ptrdiff_t>(write_pos_);
  std::copy(history_.begin() + split, history_.end(), linear_.begin());
  std::copy(history_.begin(), history_.begin() + split,
            linear_.begin() + (static_cast<std::ptrdiff_t>(kClipSamples) - split));
  const std::uint64_t start_sample = seen_ - kClipSamples;
  return StreamWindow{linear_, static_cast<std::int64_t>(start_sample * 1000 / kSampleRateHz)};
}

std::size_t MemoryPcmSource::read(std::span<std::int16_t> out) {
  const std::size_t n = std::min({out.size(), chunk_, samples_.size() - pos_});
  std::copy_n(samples_.begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin());
  pos_ += n;
  return n;
}

WindowStream::WindowStream(PcmSource& source, int hop_ms)
    : source_(source), window_(hop_ms), chunk_(4096) {}

std::optional<StreamWindow> WindowStream::next() {
  while (!closed_) {
    if (chunk_pos_ == chunk_len_) {
      chunk_len_ = source_.read(chunk_);
      chunk_pos_ = 0;
      if (chunk_len_ == 0) {
        closed_ = true;
        break;
      }
    }
    std::optional<StreamWindow> out;
    while (chunk_pos_ < chunk_len_ && !out) {
      window_.feed(std::span<const std::int16_t>(&chunk_[chunk_pos_], 1),
                   [&](const StreamWindow& w) { out = w; });
      ++chunk_pos_;
    }
    if (out) return out;
  }
  return std::nullopt;
}

std::vector<OwnedWindow> stream_windows(PcmSource& source, int hop_ms) {
  std::vector<OwnedWindow> out;
  WindowStream stream(source, hop_ms);
  while (auto w = stream.next()) {
    out.push_back({std::vector<std::int16_t>(w->samples.begin(), w->samples.end()),
                   w->start_time_ms});
  }
  return out;
}

std::size_t expected_window_count(std::size_t n_samples, int hop_ms) {
  if (n_samples < kClipSamples) return 0;
  const std::size_t hop = static_cast<std::size_t>(hop_ms) * (kSampleRateHz / 1000);
  return (n_samples - kClipSamples) / hop + 1;
}

}  // namespace kwspot
