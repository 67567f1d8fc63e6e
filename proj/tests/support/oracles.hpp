// tests/support/oracles.hpp
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

// Reference implementations written independently of the library code paths.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mcenhance/dsp.hpp"
#include "mcenhance/loss.hpp"
#include "mcenhance/mlp.hpp"

namespace mctest {

using mcenhance::Matrix;
using mcenhance::Vector;

/// Relative L2 error over the samples covered by at least two frames.
inline double interior_rel_error(const mcenhance::dsp::Signal& x, const mcenhance::dsp::Signal& y,
                                 const mcenhance::dsp::FrameConfig& cfg) {
  const std::size_t skip = static_cast<std::size_t>(cfg.frame_len_samples - cfg.hop_samples);
  double num = 0.0, den = 0.0;
  for (std::size_t i = skip; i + skip < y.size(); ++i) {
    num += (x.samples[i] - y.samples[i]) * (x.samples[i] - y.samples[i]);
    den += x.samples[i] * x.samples[i];
  }
  return std::sqrt(num / den);
}

/// Diagonal of (1/T) sum_t s_t s_t^T - m m^T + tau_inv, by explicit outer products.
inline Vector brute_force_variance(const Matrix& samples, double tau_inv) {
  const Eigen::Index T = samples.rows(), D = samples.cols();
  Vector mean = Vector::Zero(D);
  for (Eigen::Index t = 0; t < T; ++t) mean += samples.row(t).transpose();
  mean /= static_cast<double>(T);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(D, D);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vector s = samples.row(t).transpose();
    second += s * s.transpose();
  }
  second /= static_cast<double>(T);
  const Eigen::MatrixXd cov = second - mean * mean.transpose();
  Vector out(D);
  for (Eigen::Index d = 0; d < D; ++d) out[d] = cov(d, d) + tau_inv;
  return out;
}

/// Two-pass covariance diagonal (mean first, then centered squares).
inline Vector two_pass_variance(const Matrix& samples, double tau_inv) {
  const Eigen::Index T = samples.rows(), D = samples.cols();
  Vector out(D);
  for (Eigen::Index d = 0; d < D; ++d) {
    double m = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) m += samples(t, d);
    m /= static_cast<double>(T);
    double v = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) v += (samples(t, d) - m) * (samples(t, d) - m);
    out[d] = v / static_cast<double>(T) + tau_inv;
  }
  return out;
}

inline double two_pass_pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

enum class GradLoss { Msle, CrossEntropy };

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t n_checked = 0;
  std::size_t n_skipped = 0;  // perturbation crossed a ReLU kink
};

/// Central finite differences of the batch loss with respect to every
/// parameter, under fixed dropout masks, compared with backward(). A
/// component is skipped when the +h and -h evaluations see different ReLU
/// activity patterns, since the loss is not differentiable there.
inline GradCheckResult gradient_check(const mcenhance::nn::MlpModel& model, const Matrix& x, const Matrix& target,
                                      std::span<const int> labels, const mcenhance::nn::DropoutMasks* masks,
                                      GradLoss loss_kind, double h = 1e-5) {
  using namespace mcenhance::nn;
  auto loss_of = [&](const MlpModel& m, ForwardCache* cache) {
    const Matrix y = forward_batch(m, x, masks, cache);
    return loss_kind == GradLoss::Msle ? msle_batch(y, target) : cross_entropy_batch(y, labels);
  };
  auto pattern = [&](const ForwardCache& c) {
    std::vector<bool> p;
    for (std::size_t l = 0; l < c.pre.size(); ++l) {
      if (l + 1 == c.pre.size() && model.output_activation != Activation::Relu) break;
      for (Eigen::Index i = 0; i < c.pre[l].size(); ++i) p.push_back(c.pre[l].data()[i] > 0.0);
    }
    return p;
  };

  ForwardCache cache;
  const BatchLoss base = loss_of(model, &cache);
  const Gradients g = backward(model, cache, base.grad);

  GradCheckResult res;
  MlpModel probe = model;
  auto check_param = [&](double& param, double analytic) {
    const double saved = param;
    ForwardCache cp, cm;
    param = saved + h;
    const double lp = loss_of(probe, &cp).value;
    param = saved - h;
    const double lm = loss_of(probe, &cm).value;
    param = saved;
    if (pattern(cp) != pattern(cm)) {
      ++res.n_skipped;
      return;
    }
    const double numeric = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(numeric - analytic) / denom);
    ++res.n_checked;
  };
  for (std::size_t l = 0; l < probe.n_layers(); ++l) {
    for (Eigen::Index i = 0; i < probe.weights[l].size(); ++i) {
      check_param(probe.weights[l].data()[i], g.d_weights[l].data()[i]);
    }
    for (Eigen::Index i = 0; i < probe.biases[l].size(); ++i) {
      check_param(probe.biases[l].data()[i], g.d_biases[l].data()[i]);
    }
  }
  return res;
}

}  // namespace mctest
