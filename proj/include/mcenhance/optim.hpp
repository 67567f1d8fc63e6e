// include/mcenhance/optim.hpp
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

#include <span>
#include <vector>

#include "mcenhance/mlp.hpp"

namespace mcenhance::nn {

enum class OptimizerKind { Adam, Sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 coefficient added to the gradient

  void validate() const;
};

/// First and second moment estimates for one parameter tensor.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

/// One bias-corrected Adam update at timestep t >= 1 (or a plain SGD step
/// when cfg.kind == Sgd, which ignores `state`).
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, long t,
               const OptimizerConfig& cfg);

/// Applies adam_step to every weight matrix and bias vector of a model.
class ModelOptimizer {
 public:
  ModelOptimizer(const MlpModel& model, OptimizerConfig cfg);

  void step(MlpModel& model, const Gradients& grads);
  long timestep() const noexcept { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<AdamState> weight_state_;
  std::vector<AdamState> bias_state_;
  long t_ = 0;
};

}  // namespace mcenhance::nn
