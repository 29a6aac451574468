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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kwspot/audio.hpp"

namespace kwspot {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct MfccConfig {
  int sample_rate_hz = kSampleRateHz;
  int frame_len_samples = 400;  // 25 ms
  int hop_samples = 160;        // 10 ms
  int fft_size = 512;
  int n_mel_filters = 40;
  int n_coeffs = 13;
  double preemphasis = 0.97;
  double mel_low_hz = 20.0;
  double mel_high_hz = 8000.0;
  double log_floor = 1e-10;

  /// Throws kInvalidConfig when a field is out of range.
  void validate() const;
  /// floor((clip_samples - frame_len) / hop) + 1; 98 with the defaults.
  std::size_t frame_count(std::size_t clip_samples = kClipSamples) const;

  std::string to_json() const;
  static MfccConfig from_json(const std::string& text);

  bool operator==(const MfccConfig&) const = default;
};

/// Feature grid: one row per frame, one column per cepstral coefficient.
struct MfccMatrix {
  Matrix values;
  MfccConfig config;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Center frequencies (Hz) of the triangular filters, equally spaced on the mel scale.
std::vector<double> mel_center_frequencies(const MfccConfig& config);

/// n_mel_filters x (fft_size/2 + 1) triangular weights with unit peaks at the
/// centers. Triangles are evaluated at the exact bin frequencies.
Matrix mel_filterbank(const MfccConfig& config);

/// Orthonormal DCT-II basis, n x n, row k = coefficient k.
Matrix dct_matrix(std::size_t n);

/// Radix-2 FFT of a real frame. Precomputes twiddles and scratch once.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  /// |X[k]| for k in [0, n/2]. `frame.size()` may be shorter than n (zero-padded).
  void magnitude(std::span<const double> frame, std::span<double> out);

 private:
  std::size_t n_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::vector<std::size_t> bitrev_;
  std::vector<double> re_;
  std::vector<double> im_;
};

/// Precomputed MFCC pipeline (window, filterbank, DCT and FFT scratch).
/// Not thread-safe; use one extractor per thread.
class MfccExtractor {
 public:
  explicit MfccExtractor(MfccConfig config = {});

  const MfccConfig& config() const noexcept { return config_; }
  const Matrix& filterbank() const noexcept { return filterbank_; }

  /// Requires exactly kClipSamples samples; throws kWrongLength otherwise.
  MfccMatrix extract(std::span<const std::int16_t> samples);

  /// Log mel energies per frame (before the DCT).
  Matrix log_mel_energies(std::span<const std::int16_t> samples);
  /// Linear mel energies per frame.
  Matrix mel_energies(std::span<const std::int16_t> samples);

 private:
  MfccConfig config_;
  Matrix filterbank_;
  Matrix dct_;
  std::vector<double> window_;
  RealFft fft_;
  std::vector<double> emphasized_;
  std::vector<double> frame_;
  std::vector<double> spectrum_;
};

MfccMatrix extract_mfcc(const AudioClip& clip, const MfccConfig& config = {});

/// Per-coefficient normalization statistics (population std).
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  static FeatureStats identity(std::size_t n_coeffs);
  bool operator==(const FeatureStats&) const = default;
};

/// Single-pass (Welford) column statistics over every frame of every matrix.
FeatureStats compute_feature_stats(std::span<const MfccMatrix> training_set);

/// (value - mean_c) / max(stddev_c, 1e-6), per coefficient column.
MfccMatrix feature_scale(const MfccMatrix& m, const FeatureStats& stats);

inline constexpr double kMinStddev = 1e-6;

}  // namespace kwspot
