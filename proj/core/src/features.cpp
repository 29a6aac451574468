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

#include "kwspot/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "kwspot/error.hpp"

namespace kwspot {

void MfccConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (sample_rate_hz <= 0) fail("sample_rate_hz must be positive");
  if (frame_len_samples <= 0 || hop_samples <= 0) fail("frame and hop must be positive");
  if (frame_len_samples > static_cast<int>(kClipSamples)) fail("frame longer than a clip");
  if (fft_size < frame_len_samples) fail("fft_size < frame_len_samples");
  if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0) fail("fft_size must be a power of two");
  if (n_mel_filters <= 0) fail("n_mel_filters must be positive");
  if (n_coeffs <= 0 || n_coeffs > n_mel_filters) fail("n_coeffs must be in [1, n_mel_filters]");
  if (!(preemphasis >= 0.0 && preemphasis < 1.0)) fail("preemphasis must be in [0, 1)");
  if (!(mel_low_hz >= 0.0 && mel_low_hz < mel_high_hz)) fail("need 0 <= mel_low_hz < mel_high_hz");
  if (mel_high_hz > sample_rate_hz / 2.0) fail("mel_high_hz above Nyquist");
  if (!(log_floor > 0.0)) fail("log_floor must be positive");
}

std::size_t MfccConfig::frame_count(std::size_t clip_samples) const {
  const auto frame = static_cast<std::size_t>(frame_len_samples);
  if (clip_samples < frame) return 0;
  return (clip_samples - frame) / static_cast<std::size_t>(hop_samples) + 1;
}

std::string MfccConfig::to_json() const {
  nlohmann::ordered_json j{
      {"sample_rate_hz", sample_rate_hz}, {"frame_len_samples", frame_len_samples},
      {"hop_samples", hop_samples},       {"fft_size", fft_size},
      {"n_mel_filters", n_mel_filters},   {"n_coeffs", n_coeffs},
      {"preemphasis", preemphasis},       {"mel_low_hz", mel_low_hz},
      {"mel_high_hz", mel_high_hz},       {"log_floor", log_floor},
  };
  return j.dump();
}

MfccConfig MfccConfig::from_json(const std::string& text) {
  MfccConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    c.frame_len_samples = j.at("frame_len_samples").get<int>();
    c.hop_samples = j.at("hop_samples").get<int>();
    c.fft_size = j.at("fft_size").get<int>();
    c.n_mel_filters = j.at("n_mel_filters").get<int>();
    c.n_coeffs = j.at("n_coeffs").get<int>();
    c.preemphasis = j.at("preemphasis").get<double>();
    c.mel_low_hz = j.at("mel_low_hz").get<double>();
    c.mel_high_hz = j.at("mel_high_hz").get<double>();
    c.log_floor = j.at("log_floor").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad MFCC config: ") + e.what());
  }
  c.validate();
  return c;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// n + 2 edge frequencies: low edge, n centers, high edge.
std::vector<double> mel_edges_hz(const MfccConfig& config) {
  const double lo = hz_to_mel(config.mel_low_hz);
  const double hi = hz_to_mel(config.mel_high_hz);
  const int n = config.n_mel_filters;
  std::vector<double> edges(static_cast<std::size_t>(n) + 2);
  for (int i = 0; i < n + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = mel_to_hz(lo + (hi - lo) * i / (n + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(const MfccConfig& config) {
  config.validate();
  auto edges = mel_edges_hz(config);
  return {edges.begin() + 1, edges.end() - 1};
}

Matrix mel_filterbank(const MfccConfig& config) {
  config.validate();
  const auto edges = mel_edges_hz(config);
  const std::size_t n_bins = static_cast<std::size_t>(config.fft_size) / 2 + 1;
  const double bin_hz = static_cast<double>(config.sample_rate_hz) / config.fft_size;
  Matrix fb(static_cast<std::size_t>(config.n_mel_filters), n_bins);
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = bin_hz * static_cast<double>(k);
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb(m, k) = w;
    }
  }
  return fb;
}

Matrix dct_matrix(std::size_t n) {
  Matrix d(n, n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t i = 0; i < n; ++i) {
      d(k, i) = s * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nn));
    }
  }
  return d;
}

RealFft::RealFft(std::size_t n) : n_(n), bitrev_(n), re_(n), im_(n) {
  if (n < 2 || (n & (n - 1)) != 0) {
    throw Error(ErrorCode::kInvalidConfig, "FFT size must be a power of two >= 2");
  }
  cos_.resize(n / 2);
  sin_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    cos_[k] = std::cos(a);
    sin_[k] = std::sin(a);
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bitrev_[i] = r;
  }
}

void RealFft::magnitude(std::span<const double> frame, std::span<double> out) {
  if (frame.size() > n_ || out.size() < n_ / 2 + 1) {
    throw Error(ErrorCode::kShapeMismatch, "FFT buffer sizes do not match");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t src = bitrev_[i];
    re_[i] = src < frame.size() ? frame[src] : 0.0;
    im_[i] = 0.0;
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const double wr = cos_[j * step];
        const double wi = sin_[j * step];
        const std::size_t a = start + j;
        const std::size_t b = a + half;
        const double tr = re_[b] * wr - im_[b] * wi;
        const double ti = re_[b] * wi + im_[b] * wr;
        re_[b] = re_[a] - tr;
        im_[b] = im_[a] - ti;
        re_[a] += tr;
        im_[a] += ti;
      }
    }
  }
  for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = std::hypot(re_[k], im_[k]);
}

MfccExtractor::MfccExtractor(MfccConfig config)
    : config_((config.validate(), config)),
      filterbank_(mel_filterbank(config_)),
      dct_(dct_matrix(static_cast<std::size_t>(config_.n_mel_filters))),
      window_(static_cast<std::size_t>(config_.frame_len_samples)),
      fft_(static_cast<std::size_t>(config_.fft_size)),
      emphasized_(kClipSamples),
      frame_(static_cast<std::size_t>(config_.frame_len_samples)),
      spectrum_(static_cast<std::size_t>(config_.fft_size) / 2 + 1) {
  const double n = static_cast<double>(window_.size());
  for (std::size_t i = 0; i < window_.size(); ++i) {
    window_[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / (n - 1.0));
  }
}

Matrix MfccExtractor::mel_energies(std::span<const std::int16_t> samples) {
  if (samples.size() != kClipSamples) {
    throw Error(ErrorCode::kWrongLength,
                std::to_string(samples.size()) + " samples; expected 16000");
  }
  const double a = config_.preemphasis;
  emphasized_[0] = samples[0];
  for (std::size_t i = 1; i < samples.size(); ++i) {
    emphasized_[i] = static_cast<double>(samples[i]) - a * static_cast<double>(samples[i - 1]);
  }

  const std::size_t n_frames = config_.frame_count(samples.size());
  const auto hop = static_cast<std::size_t>(config_.hop_samples);
  Matrix energies(n_frames, filterbank_.rows());
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* src = emphasized_.data() + f * hop;
    for (std::size_t i = 0; i < frame_.size(); ++i) frame_[i] = src[i] * window_[i];
    fft_.magnitude(frame_, spectrum_);
    for (std::size_t m = 0; m < filterbank_.rows(); ++m) {
      const auto weights = filterbank_.row(m);
      double e = 0.0;
      for (std::size_t k = 0; k < weights.size(); ++k) e += weights[k] * spectrum_[k];
      energies(f, m) = e;
    }
  }
  return energies;
}

Matrix MfccExtractor::log_mel_energies(std::span<const std::int16_t> samples) {
  Matrix e = mel_energies(samples);
  for (double& v : e.data()) v = std::log(std::max(v, config_.log_floor));
  return e;
}

MfccMatrix MfccExtractor::extract(std::span<const std::int16_t> samples) {
  const Matrix logmel = log_mel_energies(samples);
  const auto n_coeffs = static_cast<std::size_t>(config_.n_coeffs);
  MfccMatrix out{Matrix(logmel.rows(), n_coeffs), config_};
  for (std::size_t f = 0; f < logmel.rows(); ++f) {
    const auto in = logmel.row(f);
    for (std::size_t k = 0; k < n_coeffs; ++k) {
      const auto basis = dct_.row(k);
      double c = 0.0;
      for (std::size_t i = 0; i < in.size(); ++i) c += basis[i] * in[i];
      out.values(f, k) = c;
    }
  }
  return out;
}

MfccMatrix extract_mfcc(const AudioClip& clip, const MfccConfig& config) {
  MfccExtractor extractor(config);
  return extractor.extract(clip.samples);
}

FeatureStats FeatureStats::identity(std::size_t n_coeffs) {
  return {std::vector<double>(n_coeffs, 0.0), std::vector<double>(n_coeffs, 1.0)};
}

FeatureStats compute_feature_stats(std::span<const MfccMatrix> training_set) {
  if (training_set.empty()) throw Error(ErrorCode::kEmptyClass, "no training features");
  const std::size_t cols = training_set.front().values.cols();
  std::vector<double> mean(cols, 0.0);
  std::vector<double> m2(cols, 0.0);
  double count = 0.0;
  for (const auto& m : training_set) {
    if (m.values.cols() != cols) throw Error(ErrorCode::kShapeMismatch, "coefficient count differs");
    for (std::size_t r = 0; r < m.values.rows(); ++r) {
      count += 1.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = m.values(r, c);
        const double delta = x - mean[c];
        mean[c] += delta / count;
        m2[c] += delta * (x - mean[c]);
      }
    }
  }
  FeatureStats stats{mean, std::vector<double>(cols, 0.0)};
  for (std::size_t c = 0; c < cols; ++c) stats.stddev[c] = count > 0 ? std::sqrt(m2[c] / count) : 0.0;
  return stats;
}

MfccMatrix feature_scale(const MfccMatrix& m, const FeatureStats& stats) {
  const std::size_t cols = m.values.cols();
  if (stats.mean.size() != cols || stats.stddev.size() != cols) {
    throw Error(ErrorCode::kShapeMismatch, "feature stats have " + std::to_string(stats.mean.size()) +
                                               " columns; matrix has " + std::to_string(cols));
  }
  MfccMatrix out = m;
  for (std::size_t r = 0; r < m.values.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.values(r, c) = (m.values(r, c) - stats.mean[c]) / std::max(stats.stddev[c], kMinStddev);
    }
  }
  return out;
}

}  // namespace kwspot
