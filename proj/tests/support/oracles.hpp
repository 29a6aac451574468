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

// Independent reference computations used by the tests. Nothing here calls
// into the library code being checked.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kwspot/error.hpp"

namespace oracle {

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

/// Canonical RIFF/WAVE writer. `interleaved` holds frames of `channels`
/// samples. `format` 1 = PCM.
inline std::vector<std::uint8_t> wav_bytes(const std::vector<std::int16_t>& interleaved, int channels,
                                           int rate, std::uint16_t format = 1,
                                           std::uint16_t bits = 16) {
  std::vector<std::uint8_t> b;
  const auto data_len = static_cast<std::uint32_t>(interleaved.size() * 2);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put_u32(b, 36 + data_len);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(b, 16);
  put_u16(b, format);
  put_u16(b, static_cast<std::uint16_t>(channels));
  put_u32(b, static_cast<std::uint32_t>(rate));
  put_u32(b, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put_u16(b, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(b, bits);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put_u32(b, data_len);
  for (std::int16_t s : interleaved) put_u16(b, static_cast<std::uint16_t>(s));
  return b;
}

/// |X_k| for k = 0..n/2 by the O(n^2) definition.
inline std::vector<double> dft_magnitude(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    long double re = 0;
    long double im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double a = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * t) % n) /
                            static_cast<long double>(n);
      re += x[t] * std::cos(a);
      im += x[t] * std::sin(a);
    }
    out[k] = static_cast<double>(std::sqrt(re * re + im * im));
  }
  return out;
}

inline double mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

/// Inverts mel() by bisection instead of the closed form.
inline double hz_for_mel(double m) {
  double lo = 0.0;
  double hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mel(mid) < m ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Centers of `n` filters whose n+2 edges are equally spaced in mel.
inline std::vector<double> mel_centers(int n, double low_hz, double high_hz) {
  const double a = mel(low_hz);
  const double b = mel(high_hz);
  std::vector<double> out;
  for (int i = 1; i <= n; ++i) out.push_back(hz_for_mel(a + (b - a) * i / (n + 1)));
  return out;
}

struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Population mean and stddev per column over a stack of row-major grids.
inline ColumnStats two_pass_stats(const std::vector<std::vector<double>>& grids, std::size_t cols) {
  ColumnStats s{std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
  std::vector<std::size_t> count(cols, 0);
  for (const auto& g : grids) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      s.mean[i % cols] += g[i];
      ++count[i % cols];
    }
  }
  for (std::size_t c = 0; c < cols; ++c) s.mean[c] /= static_cast<double>(count[c]);
  for (const auto& g : grids) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double d = g[i] - s.mean[i % cols];
      s.stddev[i % cols] += d * d;
    }
  }
  for (std::size_t c = 0; c < cols; ++c) s.stddev[c] = std::sqrt(s.stddev[c] / static_cast<double>(count[c]));
  return s;
}

template <typename F>
std::optional<kwspot::ErrorCode> thrown_code(F&& f) {
  try {
    f();
  } catch (const kwspot::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "kwspot_test_XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) std::abort();
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
