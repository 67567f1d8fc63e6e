// src/optim.cpp
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

#include "mcenhance/optim.hpp"

#include <cmath>

#include "mcenhance/error.hpp"

namespace mcenhance::nn {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidParams, "learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorCode::InvalidParams, "Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) fail(ErrorCode::InvalidParams, "eps must be positive");
  if (!(weight_decay >= 0.0)) fail(ErrorCode::InvalidParams, "weight_decay must be nonnegative");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, long t,
               const OptimizerConfig& cfg) {
  if (grads.size() != params.size()) fail(ErrorCode::ShapeMismatch, "gradient and parameter sizes differ");
  if (t < 1) fail(ErrorCode::InvalidParams, "timestep must be >= 1");
  const std::size_t n = params.size();

  if (cfg.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grads[i] + cfg.weight_decay * params[i];
      params[i] -= cfg.learning_rate * g;
    }
    return;
  }

  if (state.m.empty() && state.v.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) fail(ErrorCode::ShapeMismatch, "moment sizes differ");

  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = cfg.weight_decay > 0.0 ? grads[i] + cfg.weight_decay * params[i] : grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

ModelOptimizer::ModelOptimizer(const MlpModel& model, OptimizerConfig cfg)
    : cfg_(cfg), weight_state_(model.n_layers()), bias_state_(model.n_layers()) {
  cfg_.validate();
}

void ModelOptimizer::step(MlpModel& model, const Gradients& grads) {
  if (grads.d_weights.size() != model.n_layers() || grads.d_biases.size() != model.n_layers()) {
    fail(ErrorCode::ShapeMismatch, "gradient layer count");
  }
  ++t_;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    Matrix& w = model.weights[l];
    Vector& b = model.biases[l];
    if (grads.d_weights[l].rows() != w.rows() || grads.d_weights[l].cols() != w.cols() ||
        grads.d_biases[l].size() != b.size()) {
      fail(ErrorCode::ShapeMismatch, "gradient shape at layer " + std::to_string(l));
    }
    adam_step({w.data(), static_cast<std::size_t>(w.size())},
              {grads.d_weights[l].data(), static_cast<std::size_t>(w.size())}, weight_state_[l], t_, cfg_);
    adam_step({b.data(), static_cast<std::size_t>(b.size())},
              {grads.d_biases[l].data(), static_cast<std::size_t>(b.size())}, bias_state_[l], t_, cfg_);
  }
}

}  // namespace mcenhance::nn
