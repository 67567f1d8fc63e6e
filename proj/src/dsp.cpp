// src/dsp.cpp
// Copyright 2026 The mcenhance Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mcenhance/dsp.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "mcenhance/error.hpp"
#include "mcenhance/fft.hpp"

namespace mcenhance::dsp {

void FrameConfig::validate() const {
  if (sample_rate_hz <= 0 || frame_len_samples <= 0 || hop_samples <= 0 || fft_size <= 0) {
    fail(ErrorCode::InvalidParams, "frame config values must be positive");
  }
  if (hop_samples > frame_len_samples) fail(ErrorCode::InvalidParams, "hop exceeds frame length");
  if (fft_size < frame_len_samples) fail(ErrorCode::InvalidParams, "fft size below frame length");
}

std::vector<double> hamming_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length), 1.0);
  if (length == 1) return w;
  const double denom = static_cast<double>(length - 1);
  for (int n = 0; n < length; ++n) {
    w[static_cast<std::size_t>(n)] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / denom);
  }
  return w;
}

std::size_t frame_count(std::size_t n_samples, const FrameConfig& cfg) {
  const auto frame_len = static_cast<std::size_t>(cfg.frame_len_samples);
  if (n_samples < frame_len) {
    fail(ErrorCode::SignalTooShort, std::to_string(n_samples) + " samples < frame length " +
                                        std::to_string(frame_len));
  }
  return 1 + (n_samples - frame_len) / static_cast<std::size_t>(cfg.hop_samples);
}

std::size_t ola_length(std::size_t n_frames, const FrameConfig& cfg) {
  if (n_frames == 0) return 0;
  return (n_frames - 1) * static_cast<std::size_t>(cfg.hop_samples) +
         static_cast<std::size_t>(cfg.frame_len_samples);
}

Matrix frame_signal(const Signal& signal, const FrameConfig& cfg) {
  cfg.validate();
  const std::size_t n_frames = frame_count(signal.size(), cfg);
  const int L = cfg.frame_len_samples;
  Matrix frames(static_cast<Eigen::Index>(n_frames), L);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const double* src = signal.samples.data() + i * static_cast<std::size_t>(cfg.hop_samples);
    for (int n = 0; n < L; ++n) frames(static_cast<Eigen::Index>(i), n) = src[n];
  }
  return frames;
}

SpectralFrames stft(const Signal& signal, const FrameConfig& cfg) {
  const Matrix frames = frame_signal(signal, cfg);
  const std::vector<double> window = hamming_window(cfg.frame_len_samples);
  const int bins = cfg.n_bins();
  RealFft fft(cfg.fft_size);

  SpectralFrames out;
  out.config = cfg;
  out.magnitude.resize(frames.rows(), bins);
  out.phase.resize(frames.rows(), bins);

  std::vector<double> buf(static_cast<std::size_t>(cfg.frame_len_samples));
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(bins));
  for (Eigen::Index i = 0; i < frames.rows(); ++i) {
    for (int n = 0; n < cfg.frame_len_samples; ++n) buf[static_cast<std::size_t>(n)] = frames(i, n) * window[static_cast<std::size_t>(n)];
    fft.forward(buf, spec);
    for (int k = 0; k < bins; ++k) {
      const auto& c = spec[static_cast<std::size_t>(k)];
      out.magnitude(i, k) = std::abs(c);
      double ph = std::arg(c);
      // arg() may return -pi for a negative real with -0.0 imaginary part.
      if (ph <= -std::numbers::pi) ph = std::numbers::pi;
      out.phase(i, k) = ph;
    }
  }
  return out;
}

Signal istft_overlap_add(const Matrix& magnitude, const Matrix& phase, const FrameConfig& cfg) {
  cfg.validate();
  if (magnitude.rows() != phase.rows() || magnitude.cols() != phase.cols()) {
    fail(ErrorCode::ShapeMismatch, "magnitude and phase shapes differ");
  }
  if (magnitude.cols() != cfg.n_bins()) {
    fail(ErrorCode::ShapeMismatch, "spectrum has " + std::to_string(magnitude.cols()) +
                                       " bins, expected " + std::to_string(cfg.n_bins()));
  }
  if ((magnitude.array() < 0.0).any()) fail(ErrorCode::NegativeSpectrum, "negative magnitude");

  const auto n_frames = static_cast<std::size_t>(magnitude.rows());
  const std::size_t out_len = ola_length(n_frames, cfg);
  const int L = cfg.frame_len_samples;
  const int N = cfg.fft_size;
  const std::vector<double> window = hamming_window(L);

  Signal out;
  out.sample_rate_hz = cfg.sample_rate_hz;
  out.samples.assign(out_len, 0.0);
  std::vector<double> norm(out_len, 0.0);

  RealFft fft(N);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(cfg.n_bins()));
  std::vector<double> frame(static_cast<std::size_t>(N));
  const double inv_n = 1.0 / static_cast<double>(N);

  for (std::size_t i = 0; i < n_frames; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (int k = 0; k < cfg.n_bins(); ++k) {
      spec[static_cast<std::size_t>(k)] = std::polar(magnitude(row, k), phase(row, k));
    }
    fft.inverse(spec, frame);
    const std::size_t start = i * static_cast<std::size_t>(cfg.hop_samples);
    for (int n = 0; n < L; ++n) {
      const double w = window[static_cast<std::size_t>(n)];
      out.samples[start + static_cast<std::size_t>(n)] += frame[static_cast<std::size_t>(n)] * inv_n * w;
      norm[start + static_cast<std::size_t>(n)] += w * w;
    }
  }
  for (std::size_t n = 0; n < out_len; ++n) {
    out.samples[n] = norm[n] < 1e-8 ? 0.0 : out.samples[n] / norm[n];
  }
  return out;
}

double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

MixResult mix_at_snr(const Signal& clean, const Signal& noise, double snr_db, bool allow_tile) {
  if (clean.empty()) fail(ErrorCode::SilentClean, "clean signal is empty");
  if (noise.empty()) fail(ErrorCode::SilentNoise, "noise signal is empty");
  if (!std::isfinite(snr_db)) fail(ErrorCode::InvalidParams, "snr must be finite");
  if (noise.size() < clean.size() && !allow_tile) {
    fail(ErrorCode::LengthMismatch, "noise shorter than clean and tiling disabled");
  }

  std::vector<double> segment(clean.size());
  for (std::size_t n = 0; n < clean.size(); ++n) segment[n] = noise.samples[n % noise.size()];

  const double p_clean = mean_power(clean.samples);
  const double p_noise = mean_power(segment);
  if (p_noise == 0.0) fail(ErrorCode::SilentNoise, "noise has zero power over the clean support");
  if (p_clean == 0.0) fail(ErrorCode::SilentClean, "clean signal has zero power");

  MixResult r;
  r.noise_scale = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  r.noisy.sample_rate_hz = clean.sample_rate_hz;
  r.noisy.samples.resize(clean.size());
  for (std::size_t n = 0; n < clean.size(); ++n) {
    r.noisy.samples[n] = clean.samples[n] + r.noise_scale * segment[n];
  }
  return r;
}

double measured_snr_db(const Signal& clean, const Signal& noisy) {
  if (clean.size() != noisy.size()) fail(ErrorCode::LengthMismatch, "clean and noisy lengths differ");
  double ps = 0.0;
  double pn = 0.0;
  for (std::size_t n = 0; n < clean.size(); ++n) {
    const double d = noisy.samples[n] - clean.samples[n];
    ps += clean.samples[n] * clean.samples[n];
    pn += d * d;
  }
  return 10.0 * std::log10(ps / pn);
}

}  // namespace mcenhance::dsp
