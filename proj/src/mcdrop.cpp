// src/mcdrop.cpp
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

#include "mcenhance/mcdrop.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcenhance/error.hpp"
#include "mcenhance/parallel.hpp"

namespace mcenhance::mc {

void McConfig::validate() const {
  if (T < 1) fail(ErrorCode::InvalidParams, "T must be at least 1");
  if (!std::isfinite(tau_inv) || tau_inv < 0.0) fail(ErrorCode::InvalidParams, "tau_inv must be finite and >= 0");
  if (prior_length_scale && !(*prior_length_scale > 0.0 && std::isfinite(*prior_length_scale))) {
    fail(ErrorCode::InvalidParams, "prior length scale must be positive");
  }
  if (threads < 1) fail(ErrorCode::InvalidParams, "threads must be at least 1");
}

double model_tau_inv(const nn::MlpModel& model, std::optional<double> prior_length_scale) {
  const double lambda = model.meta.weight_decay;
  if (lambda == 0.0) return 0.0;
  if (!prior_length_scale) {
    fail(ErrorCode::InvalidParams, "model has weight decay > 0 but no prior length scale was given");
  }
  const double l = *prior_length_scale;
  const double n = static_cast<double>(model.meta.n_train_frames);
  return 2.0 * n * lambda / (l * l * model.dropout.keep_prob);
}

void check_tau_inv(const nn::MlpModel& model, const McConfig& cfg) {
  const double expected = model_tau_inv(model, cfg.prior_length_scale);
  const double scale = std::max(std::abs(expected), std::abs(cfg.tau_inv));
  if (std::abs(expected - cfg.tau_inv) > 1e-12 * scale) {
    fail(ErrorCode::InvalidParams, "tau_inv " + std::to_string(cfg.tau_inv) + " does not match the model value " +
                                       std::to_string(expected));
  }
}

namespace {

void require_samples(const Matrix& samples) {
  if (samples.rows() == 0 || samples.cols() == 0) fail(ErrorCode::EmptySamples, "no Monte Carlo samples");
}

}  // namespace

Vector predictive_mean(const Matrix& samples) {
  require_samples(samples);
  const Eigen::Index T = samples.rows();
  const Eigen::Index D = samples.cols();
  Vector mean(D);
  for (Eigen::Index d = 0; d < D; ++d) {
    const double c = samples(0, d);
    double s = 0.0;
    for (Eigen::Index t = 1; t < T; ++t) s += samples(t, d) - c;
    mean[d] = c + s / static_cast<double>(T);
  }
  return mean;
}

Variance predictive_variance(const Matrix& samples, double tau_inv) {
  require_samples(samples);
  if (!(tau_inv >= 0.0)) fail(ErrorCode::InvalidParams, "tau_inv must be >= 0");
  const Eigen::Index T = samples.rows();
  const Eigen::Index D = samples.cols();
  const double inv_t = 1.0 / static_cast<double>(T);
  Variance out;
  out.var.resize(D);
  for (Eigen::Index d = 0; d < D; ++d) {
    const double c = samples(0, d);
    double s1 = 0.0;
    double s2 = 0.0;
    for (Eigen::Index t = 1; t < T; ++t) {
      const double e = samples(t, d) - c;
      s1 += e;
      s2 += e * e;
    }
    const double m1 = s1 * inv_t;
    double v = s2 * inv_t - m1 * m1;
    if (v < 0.0) {
      if (v < -1e-12 * std::max(1.0, s2 * inv_t)) {
        fail(ErrorCode::InvalidParams, "negative sample variance " + std::to_string(v));
      }
      v = 0.0;
    }
    out.var[d] = tau_inv + v;
  }
  out.trace = out.var.sum();
  return out;
}

McOutput summarize(Matrix samples, double tau_inv) {
  McOutput out;
  out.mean = predictive_mean(samples);
  Variance v = predictive_variance(samples, tau_inv);
  out.var = std::move(v.var);
  out.trace_var = v.trace;
  out.samples = std::move(samples);
  return out;
}

nn::DropoutMasks mc_masks(const nn::MlpModel& model, const McConfig& cfg, StreamId id) {
  nn::DropoutMasks masks = nn::allocate_masks(model, cfg.T);
  for (int t = 0; t < cfg.T; ++t) {
    RngStream stream(derive_key(cfg.rng_seed, {id.model_index, id.frame_index, static_cast<std::uint64_t>(t)}));
    nn::draw_mask_row(model, stream, masks, t);
  }
  return masks;
}

McOutput mc_forward(const nn::MlpModel& model, const Vector& x, const McConfig& cfg, StreamId id) {
  return mc_forward(model, nn::pack_model(model), x, cfg, id);
}

McOutput mc_forward(const nn::MlpModel& model, const nn::PackedModel& packed, const Vector& x, const McConfig& cfg,
                    StreamId id) {
  cfg.validate();
  if (x.size() != model.input_dim()) {
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) + " entries, model expects " +
                                           std::to_string(model.input_dim()));
  }
  const nn::DropoutMasks masks = mc_masks(model, cfg, id);
  return summarize(nn::forward_replicated(model, packed, x, masks), cfg.tau_inv);
}

SpectraEstimate estimate_spectra_mc(const nn::MlpModel& model, const Matrix& frames, const McConfig& cfg,
                                    std::uint64_t model_index) {
  cfg.validate();
  if (frames.cols() != model.input_dim()) fail(ErrorCode::DimensionMismatch, "frame width does not match model");
  SpectraEstimate out;
  out.mean.resize(frames.rows(), model.output_dim());
  out.trace_var.resize(frames.rows());
  const nn::PackedModel packed = nn::pack_model(model);
  parallel_for(static_cast<std::size_t>(frames.rows()), cfg.threads, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vector x = frames.row(r).transpose();
    const McOutput o = mc_forward(model, packed, x, cfg, StreamId{model_index, static_cast<std::uint64_t>(i)});
    out.mean.row(r) = o.mean.transpose();
    out.trace_var[r] = o.trace_var;
  });
  return out;
}

Matrix estimate_spectra_deterministic(const nn::MlpModel& model, const Matrix& frames) {
  if (frames.cols() != model.input_dim()) fail(ErrorCode::DimensionMismatch, "frame width does not match model");
  return nn::forward_batch(model, frames, nullptr);
}

dsp::Signal enhance_single_mc(const nn::MlpModel& model, const dsp::Signal& noisy, const McConfig& cfg,
                              const dsp::FrameConfig& frame_cfg) {
  const dsp::SpectralFrames x = dsp::stft(noisy, frame_cfg);
  const SpectraEstimate est = estimate_spectra_mc(model, x.magnitude, cfg);
  dsp::Signal out = dsp::istft_overlap_add(est.mean, x.phase, frame_cfg);
  out.sample_rate_hz = noisy.sample_rate_hz;
  return out;
}

dsp::Signal enhance_deterministic(const nn::MlpModel& model, const dsp::Signal& noisy,
                                  const dsp::FrameConfig& frame_cfg) {
  const dsp::SpectralFrames x = dsp::stft(noisy, frame_cfg);
  dsp::Signal out = dsp::istft_overlap_add(estimate_spectra_deterministic(model, x.magnitude), x.phase, frame_cfg);
  out.sample_rate_hz = noisy.sample_rate_hz;
  return out;
}

}  // namespace mcenhance::mc
