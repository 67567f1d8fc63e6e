// src/loss.cpp
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

#include "mcenhance/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mcenhance/error.hpp"

namespace mcenhance::nn {

namespace {
void check_nonnegative(const Matrix& m, const char* what) {
  if ((m.array() < 0.0).any()) fail(ErrorCode::NegativeSpectrum, std::string(what) + " has negative entries");
}

void check_labels(std::span<const int> labels, Eigen::Index rows, Eigen::Index classes) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) fail(ErrorCode::DimensionMismatch, "label count");
  for (int c : labels) {
    if (c < 0 || c >= classes) fail(ErrorCode::LabelOutOfRange, "label " + std::to_string(c));
  }
}
}  // namespace

double msle_loss(const Vector& s_hat, const Vector& s) {
  if (s_hat.size() != s.size() || s.size() == 0) fail(ErrorCode::DimensionMismatch, "msle length");
  if ((s_hat.array() < 0.0).any() || (s.array() < 0.0).any()) {
    fail(ErrorCode::NegativeSpectrum, "msle inputs must be nonnegative");
  }
  const double r = static_cast<double>(s.size());
  return (s.array().log1p() - s_hat.array().log1p()).square().sum() / r;
}

BatchLoss msle_batch(const Matrix& predicted, const Matrix& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols() || predicted.size() == 0) {
    fail(ErrorCode::DimensionMismatch, "msle batch shapes");
  }
  check_nonnegative(predicted, "prediction");
  check_nonnegative(target, "target");
  const double rows = static_cast<double>(predicted.rows());
  const double bins = static_cast<double>(predicted.cols());
  const Eigen::ArrayXXd diff = target.array().log1p() - predicted.array().log1p();
  BatchLoss out;
  out.value = diff.square().sum() / (rows * bins);
  out.grad = (-2.0 / (rows * bins)) * (diff / (predicted.array() + 1.0)).matrix();
  return out;
}

BatchLoss cross_entropy_batch(const Matrix& probs, std::span<const int> labels) {
  check_labels(labels, probs.rows(), probs.cols());
  const double rows = static_cast<double>(probs.rows());
  BatchLoss out;
  out.grad = Matrix::Zero(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double p = std::max(probs(r, labels[static_cast<std::size_t>(r)]), std::numeric_limits<double>::min());
    out.value -= std::log(p);
    out.grad(r, labels[static_cast<std::size_t>(r)]) = -1.0 / (rows * p);
  }
  out.value /= rows;
  return out;
}

Matrix softmax_cross_entropy_logit_grad(const Matrix& probs, std::span<const int> labels) {
  check_labels(labels, probs.rows(), probs.cols());
  Matrix g = probs;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) g(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  return g / static_cast<double>(probs.rows());
}

}  // namespace mcenhance::nn
