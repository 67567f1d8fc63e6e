// include/mcenhance/dsp.hpp
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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcenhance/types.hpp"

namespace mcenhance::dsp {

/// Short-time analysis layout. Defaults: 32 ms frames, 10 ms hop at 16 kHz,
/// 512-point FFT keeping the 257 non-redundant bins.
struct FrameConfig {
  int sample_rate_hz = 16000;
  int frame_len_samples = 512;
  int hop_samples = 160;
  int fft_size = 512;

  int n_bins() const noexcept { return fft_size / 2 + 1; }
  /// Throws InvalidParams unless hop <= frame_len <= fft_size, all positive.
  void validate() const;

  bool operator==(const FrameConfig&) const = default;
};

struct Signal {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

/// Magnitude and phase of every analysis frame, [n_frames x n_bins].
struct SpectralFrames {
  Matrix magnitude;
  Matrix phase;
  FrameConfig config;

  Eigen::Index n_frames() const noexcept { return magnitude.rows(); }
};

/// w[n] = 0.54 - 0.46 cos(2 pi n / (L - 1)), symmetric form.
std::vector<double> hamming_window(int length);

/// 1 + floor((len - frame_len) / hop). Requires len >= frame_len.
std::size_t frame_count(std::size_t n_samples, const FrameConfig& cfg);

/// Length produced by overlap-add of `n_frames` frames.
std::size_t ola_length(std::size_t n_frames, const FrameConfig& cfg);

/// Frames are rows; the trailing remainder shorter than one frame is dropped.
Matrix frame_signal(const Signal& signal, const FrameConfig& cfg);

SpectralFrames stft(const Signal& signal, const FrameConfig& cfg);

/// Weighted overlap-add with the analysis window as synthesis window and
/// normalization by the summed squared window.
Signal istft_overlap_add(const Matrix& magnitude, const Matrix& phase, const FrameConfig& cfg);

struct MixResult {
  Signal noisy;
  double noise_scale = 0.0;
};

/// noisy = clean + scale * noise[0 : len(clean)], with the scale chosen so that
/// 10 log10(P_clean / P_scaled_noise) == snr_db. `allow_tile` repeats a short
/// noise instead of failing.
MixResult mix_at_snr(const Signal& clean, const Signal& noise, double snr_db, bool allow_tile = false);

double mean_power(std::span<const double> x);

/// 10 log10(P(clean) / P(noisy - clean)).
double measured_snr_db(const Signal& clean, const Signal& noisy);

}  // namespace mcenhance::dsp
