// include/mcenhance/loss.hpp
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

#include "mcenhance/types.hpp"

namespace mcenhance::nn {

/// Mean squared logarithmic error, (1/R) sum_k (log(s_k + 1) - log(s_hat_k + 1))^2.
/// Both spectra must be nonnegative (NegativeSpectrum otherwise).
double msle_loss(const Vector& s_hat, const Vector& s);

struct BatchLoss {
  double value = 0.0;  // mean over rows
  Matrix grad;         // d value / d prediction
};

/// Row-mean of msle_loss and its gradient with respect to `predicted`.
BatchLoss msle_batch(const Matrix& predicted, const Matrix& target);

/// Row-mean of -log(probs[r][label_r]); gradient with respect to the probabilities.
BatchLoss cross_entropy_batch(const Matrix& probs, std::span<const int> labels);

/// Gradient of the row-mean cross-entropy with respect to softmax logits,
/// (probs - onehot) / rows. Numerically preferable to chaining through probs.
Matrix softmax_cross_entropy_logit_grad(const Matrix& probs, std::span<const int> labels);

}  // namespace mcenhance::nn
