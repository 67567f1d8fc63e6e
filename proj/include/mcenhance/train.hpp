// include/mcenhance/train.hpp
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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcenhance/mlp.hpp"
#include "mcenhance/optim.hpp"

namespace mcenhance::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  int batch_size = 128;
  int n_epochs = 20;
  std::uint64_t rng_seed = 1;
  OptimizerKind optimizer = OptimizerKind::Adam;

  std::vector<int> hidden_dims{256, 256, 256};
  double keep_prob = 0.8;
  InputNorm input_norm = InputNorm::None;
  InputCompress input_compress = InputCompress::None;

  /// Called after each epoch with (epoch index, mean training loss).
  std::function<void(int, double)> on_epoch;

  OptimizerConfig optimizer_config() const;
  void validate() const;
};

/// Noisy/clean magnitude frames, one frame per row.
struct FramePairs {
  Matrix noisy;
  Matrix clean;

  Eigen::Index size() const noexcept { return noisy.rows(); }
};

struct TrainReport {
  double initial_loss = 0.0;         // deterministic loss before the first update
  std::vector<double> epoch_loss;    // mean mini-batch loss, dropout active
  double final_loss = 0.0;           // deterministic loss after training
};

struct TrainedModel {
  MlpModel model;
  TrainReport report;
};

/// Minimizes mean MSLE over shuffled mini-batches with dropout active.
/// ReLU hidden and output layers. Records N and lambda in model.meta.
TrainedModel train_regressor(const FramePairs& pairs, const TrainConfig& cfg);

/// Softmax classifier over class_labels.size() classes, cross-entropy loss.
TrainedModel train_classifier(const Matrix& frames, std::span<const int> labels,
                              std::vector<std::string> class_labels, const TrainConfig& cfg);

/// Deterministic-mode mean MSLE over all pairs.
double evaluate_msle(const MlpModel& model, const FramePairs& pairs);

/// Deterministic-mode frame accuracy; ties in argmax go to the lowest index.
double evaluate_accuracy(const MlpModel& model, const Matrix& frames, std::span<const int> labels);

/// Index of the largest entry, lowest index on ties.
int argmax_lowest(const Eigen::Ref<const RowVector>& row);

}  // namespace mcenhance::nn
