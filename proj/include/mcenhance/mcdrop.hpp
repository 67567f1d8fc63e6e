// include/mcenhance/mcdrop.hpp
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

#include <cstdint>
#include <optional>

#include "mcenhance/dsp.hpp"
#include "mcenhance/mlp.hpp"

namespace mcenhance::mc {

/// Monte Carlo dropout settings. tau_inv is the observation-noise term
/// added to every diagonal entry of the predictive variance.
struct McConfig {
  int T = 50;
  double tau_inv = 0.0;
  /// Prior length scale l; only consulted when a model carries weight decay.
  std::optional<double> prior_length_scale;
  std::uint64_t rng_seed = 0;
  int threads = 1;

  void validate() const;
};

/// Identifies the dropout stream of one pass: (seed, model, frame, pass).
struct StreamId {
  std::uint64_t model_index = 0;
  std::uint64_t frame_index = 0;
};

struct McOutput {
  Matrix samples;  // [T x D]
  Vector mean;     // [D]
  Vector var;      // [D], includes tau_inv
  double trace_var = 0.0;
};

/// tau^-1 = 2 N lambda / (l^2 p). Zero when the model has no weight decay.
/// Throws InvalidParams when lambda > 0 and no length scale is available.
double model_tau_inv(const nn::MlpModel& model, std::optional<double> prior_length_scale);

/// Checks cfg.tau_inv against model_tau_inv(); InvalidParams on mismatch
/// (relative tolerance 1e-12) or when lambda > 0 and l is missing.
void check_tau_inv(const nn::MlpModel& model, const McConfig& cfg);

/// (1/T) sum_t samples[t]. EmptySamples for T == 0.
Vector predictive_mean(const Matrix& samples);

struct Variance {
  Vector var;
  double trace = 0.0;
};

/// Diagonal of tau_inv I + (1/T) sum_t S_t S_t^T - E E^T, so the biased
/// (divide-by-T) second moment. Computed about the first sample as a shift,
/// which is algebraically identical and exact for constant columns.
Variance predictive_variance(const Matrix& samples, double tau_inv);

/// Bundles the estimators for a finished sample matrix.
McOutput summarize(Matrix samples, double tau_inv);

/// T stochastic passes of `x`; pass t uses the stream keyed by
/// (cfg.rng_seed, id.model_index, id.frame_index, t).
McOutput mc_forward(const nn::MlpModel& model, const Vector& x, const McConfig& cfg, StreamId id = {});
McOutput mc_forward(const nn::MlpModel& model, const nn::PackedModel& packed, const Vector& x, const McConfig& cfg,
                    StreamId id);

/// The masks mc_forward() uses for (cfg.rng_seed, id).
nn::DropoutMasks mc_masks(const nn::MlpModel& model, const McConfig& cfg, StreamId id);

/// Per-frame MC estimate of every row of `frames` (frame index = row).
struct SpectraEstimate {
  Matrix mean;              // [n_frames x D]
  Vector trace_var;         // [n_frames]
};
SpectraEstimate estimate_spectra_mc(const nn::MlpModel& model, const Matrix& frames, const McConfig& cfg,
                                    std::uint64_t model_index = 0);

/// Deterministic pass over every row.
Matrix estimate_spectra_deterministic(const nn::MlpModel& model, const Matrix& frames);

/// MC predictive mean per frame, resynthesized with the noisy phase.
dsp::Signal enhance_single_mc(const nn::MlpModel& model, const dsp::Signal& noisy, const McConfig& cfg,
                              const dsp::FrameConfig& frame_cfg);

/// One deterministic pass per frame (conventional dropout inference).
dsp::Signal enhance_deterministic(const nn::MlpModel& model, const dsp::Signal& noisy,
                                  const dsp::FrameConfig& frame_cfg);

}  // namespace mcenhance::mc
