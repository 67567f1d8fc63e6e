// src/train.cpp
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

#include "mcenhance/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mcenhance/error.hpp"
#include "mcenhance/loss.hpp"

namespace mcenhance::nn {

OptimizerConfig TrainConfig::optimizer_config() const {
  OptimizerConfig o;
  o.kind = optimizer;
  o.learning_rate = learning_rate;
  o.beta1 = adam_beta1;
  o.beta2 = adam_beta2;
  o.eps = adam_eps;
  o.weight_decay = weight_decay;
  return o;
}

void TrainConfig::validate() const {
  optimizer_config().validate();
  if (batch_size <= 0) fail(ErrorCode::InvalidParams, "batch_size must be positive");
  if (n_epochs < 0) fail(ErrorCode::InvalidParams, "n_epochs must be nonnegative");
  for (int h : hidden_dims) {
    if (h <= 0) fail(ErrorCode::InvalidParams, "hidden dims must be positive");
  }
  DropoutSpec{keep_prob}.validate();
}

int argmax_lowest(const Eigen::Ref<const RowVector>& row) {
  int best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = static_cast<int>(k);
  }
  return best;
}

namespace {

constexpr Eigen::Index kEvalChunk = 1024;

Matrix gather_rows(const Matrix& src, std::span<const Eigen::Index> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(idx[i]);
  return out;
}

void fit_input_features(MlpModel& model, const Matrix& x, const TrainConfig& cfg) {
  model.input.compress = cfg.input_compress;
  model.input.norm = InputNorm::None;
  if (cfg.input_norm != InputNorm::ZScore) return;
  const Matrix f = apply_input_features(model.input, x);
  const Vector mean = f.colwise().mean().transpose();
  Vector inv_std(f.cols());
  for (Eigen::Index k = 0; k < f.cols(); ++k) {
    const double var = (f.col(k).array() - mean[k]).square().mean();
    inv_std[k] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  }
  model.input.norm = InputNorm::ZScore;
  model.input.mean = mean;
  model.input.inv_std = inv_std;
}

template <typename BatchStep>
std::vector<double> run_epochs(MlpModel& model, Eigen::Index n, const TrainConfig& cfg, BatchStep&& step) {
  ModelOptimizer opt(model, cfg.optimizer_config());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::vector<double> epoch_loss;
  for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    RngStream shuffler(derive_key(cfg.rng_seed, {2, static_cast<std::uint64_t>(epoch)}));
    shuffler.shuffle(std::span<Eigen::Index>(order));
    double total = 0.0;
    Eigen::Index seen = 0;
    std::uint64_t batch_index = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
      const std::span<const Eigen::Index> idx(order.data() + start, static_cast<std::size_t>(len));
      RngStream dropout(derive_key(cfg.rng_seed, {3, static_cast<std::uint64_t>(epoch), batch_index}));
      const DropoutMasks masks = sample_masks(model, len, dropout);
      double loss = 0.0;
      const Gradients g = step(idx, masks, loss);
      opt.step(model, g);
      total += loss * static_cast<double>(len);
      seen += len;
    }
    epoch_loss.push_back(total / static_cast<double>(seen));
    if (cfg.on_epoch) cfg.on_epoch(epoch, epoch_loss.back());
  }
  return epoch_loss;
}

std::vector<int> with_hidden(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

}  // namespace

double evaluate_msle(const MlpModel& model, const FramePairs& pairs) {
  if (pairs.size() == 0) fail(ErrorCode::EmptyDataset, "no frame pairs");
  double total = 0.0;
  for (Eigen::Index start = 0; start < pairs.size(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, pairs.size() - start);
    const Matrix y = forward_batch(model, pairs.noisy.middleRows(start, len), nullptr);
    total += msle_batch(y, pairs.clean.middleRows(start, len)).value * static_cast<double>(len);
  }
  return total / static_cast<double>(pairs.size());
}

double evaluate_accuracy(const MlpModel& model, const Matrix& frames, std::span<const int> labels) {
  if (frames.rows() == 0) fail(ErrorCode::EmptyDataset, "no frames");
  if (static_cast<Eigen::Index>(labels.size()) != frames.rows()) fail(ErrorCode::DimensionMismatch, "label count");
  Eigen::Index correct = 0;
  for (Eigen::Index start = 0; start < frames.rows(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, frames.rows() - start);
    const Matrix p = forward_batch(model, frames.middleRows(start, len), nullptr);
    for (Eigen::Index r = 0; r < len; ++r) {
      if (argmax_lowest(p.row(r)) == labels[static_cast<std::size_t>(start + r)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(frames.rows());
}

TrainedModel train_regressor(const FramePairs& pairs, const TrainConfig& cfg) {
  cfg.validate();
  if (pairs.size() == 0) fail(ErrorCode::EmptyDataset, "no frame pairs to train on");
  if (pairs.clean.rows() != pairs.noisy.rows() || pairs.clean.cols() != pairs.noisy.cols()) {
    fail(ErrorCode::DimensionMismatch, "noisy and clean frame shapes differ");
  }
  if ((pairs.noisy.array() < 0.0).any() || (pairs.clean.array() < 0.0).any()) {
    fail(ErrorCode::NegativeSpectrum, "training magnitudes must be nonnegative");
  }
  if (!pairs.noisy.allFinite() || !pairs.clean.allFinite()) fail(ErrorCode::NonFiniteInput, "non-finite frames");

  const int dim = static_cast<int>(pairs.noisy.cols());
  RngStream init(derive_key(cfg.rng_seed, {1}));
  TrainedModel out;
  out.model = MlpModel::create(with_hidden(dim, cfg.hidden_dims, dim), Activation::Relu, Activation::Relu,
                               DropoutSpec{cfg.keep_prob}, init);
  fit_input_features(out.model, pairs.noisy, cfg);
  out.model.meta.kind = "regressor";
  out.model.meta.weight_decay = cfg.weight_decay;
  out.model.meta.n_train_frames = static_cast<std::uint64_t>(pairs.size());
  out.model.meta.seed = cfg.rng_seed;

  out.report.initial_loss = evaluate_msle(out.model, pairs);
  MlpModel& model = out.model;
  out.report.epoch_loss = run_epochs(model, pairs.size(), cfg,
      [&](std::span<const Eigen::Index> idx, const DropoutMasks& masks, double& loss) {
        const Matrix x = gather_rows(pairs.noisy, idx);
        const Matrix s = gather_rows(pairs.clean, idx);
        ForwardCache cache;
        const Matrix y = forward_batch(model, x, &masks, &cache);
        BatchLoss l = msle_batch(y, s);
        loss = l.value;
        return backward(model, cache, l.grad);
      });
  out.report.final_loss = evaluate_msle(out.model, pairs);
  return out;
}

TrainedModel train_classifier(const Matrix& frames, std::span<const int> labels,
                              std::vector<std::string> class_labels, const TrainConfig& cfg) {
  cfg.validate();
  if (frames.rows() == 0) fail(ErrorCode::EmptyDataset, "no frames to train on");
  if (static_cast<Eigen::Index>(labels.size()) != frames.rows()) fail(ErrorCode::DimensionMismatch, "label count");
  const int n_classes = static_cast<int>(class_labels.size());
  if (n_classes < 1) fail(ErrorCode::InvalidParams, "classifier needs at least one class");
  for (int c : labels) {
    if (c < 0 || c >= n_classes) fail(ErrorCode::LabelOutOfRange, "label " + std::to_string(c));
  }
  if (!frames.allFinite()) fail(ErrorCode::NonFiniteInput, "non-finite frames");

  RngStream init(derive_key(cfg.rng_seed, {1}));
  TrainedModel out;
  out.model = MlpModel::create(with_hidden(static_cast<int>(frames.cols()), cfg.hidden_dims, n_classes),
                               Activation::Relu, Activation::Softmax, DropoutSpec{cfg.keep_prob}, init);
  fit_input_features(out.model, frames, cfg);
  out.model.meta.kind = "classifier";
  out.model.meta.class_labels = std::move(class_labels);
  out.model.meta.weight_decay = cfg.weight_decay;
  out.model.meta.n_train_frames = static_cast<std::uint64_t>(frames.rows());
  out.model.meta.seed = cfg.rng_seed;

  auto full_loss = [&](const MlpModel& m) {
    double total = 0.0;
    for (Eigen::Index start = 0; start < frames.rows(); start += kEvalChunk) {
      const Eigen::Index len = std::min(kEvalChunk, frames.rows() - start);
      const Matrix p = forward_batch(m, frames.middleRows(start, len), nullptr);
      total += cross_entropy_batch(p, labels.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len))).value *
               static_cast<double>(len);
    }
    return total / static_cast<double>(frames.rows());
  };

  out.report.initial_loss = full_loss(out.model);
  MlpModel& model = out.model;
  std::vector<int> batch_labels;
  out.report.epoch_loss = run_epochs(model, frames.rows(), cfg,
      [&](std::span<const Eigen::Index> idx, const DropoutMasks& masks, double& loss) {
        const Matrix x = gather_rows(frames, idx);
        batch_labels.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) batch_labels[i] = labels[static_cast<std::size_t>(idx[i])];
        ForwardCache cache;
        const Matrix p = forward_batch(model, x, &masks, &cache);
        loss = cross_entropy_batch(p, batch_labels).value;
        return backward_from_logits(model, cache, softmax_cross_entropy_logit_grad(p, batch_labels));
      });
  out.report.final_loss = full_loss(out.model);
  return out;
}

}  // namespace mcenhance::nn
