// include/mcenhance/mlp.hpp
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
#include <string>
#include <vector>

#include "mcenhance/dense_kernel.hpp"
#include "mcenhance/rng.hpp"
#include "mcenhance/types.hpp"

namespace mcenhance::nn {

enum class Activation { Relu, Identity, Softmax };

/// Fixed (non-learned) input preprocessing applied inside forward().
enum class InputCompress { None, Log1p };
enum class InputNorm { None, ZScore };

struct InputFeatures {
  InputCompress compress = InputCompress::None;
  InputNorm norm = InputNorm::None;
  Vector mean;     // used when norm == ZScore
  Vector inv_std;  // used when norm == ZScore

  bool operator==(const InputFeatures&) const = default;
};

/// Dropout on hidden-layer outputs only; p is the probability of keeping a unit.
struct DropoutSpec {
  double keep_prob = 0.8;

  void validate() const;
  bool operator==(const DropoutSpec&) const = default;
};

struct ModelMeta {
  std::string kind = "regressor";  // "regressor" | "classifier"
  std::string noise_label;
  std::vector<std::string> class_labels;
  double weight_decay = 0.0;
  std::uint64_t n_train_frames = 0;
  std::uint64_t seed = 0;

  bool operator==(const ModelMeta&) const = default;
};

/// Fully connected network. weights[l] is [layer_dims[l+1] x layer_dims[l]].
struct MlpModel {
  std::vector<int> layer_dims;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation hidden_activation = Activation::Relu;
  Activation output_activation = Activation::Relu;
  DropoutSpec dropout;
  InputFeatures input;
  ModelMeta meta;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t n_layers() const { return weights.size(); }
  std::size_t n_hidden() const { return weights.empty() ? 0 : weights.size() - 1; }

  /// Throws DimensionMismatch for inconsistent shapes, InvalidParams for
  /// non-finite parameters or an invalid dropout spec.
  void validate() const;

  /// He-uniform weights, zero biases.
  static MlpModel create(std::vector<int> layer_dims, Activation hidden, Activation output,
                         DropoutSpec dropout, RngStream& init);
  static MlpModel zeros(std::vector<int> layer_dims, Activation hidden, Activation output,
                        DropoutSpec dropout);

  bool operator==(const MlpModel&) const;
};

/// One matrix per hidden layer, [rows x units]. Entries are 0 for dropped
/// units and 1/p for kept ones (inverted dropout).
struct DropoutMasks {
  std::vector<Matrix> hidden;
  Eigen::Index rows() const { return hidden.empty() ? 0 : hidden.front().rows(); }
};

DropoutMasks allocate_masks(const MlpModel& model, Eigen::Index rows);

/// Fills one row of every hidden-layer mask, layer by layer, drawing one
/// uniform per unit from `stream`; a unit is kept when u < p.
void draw_mask_row(const MlpModel& model, RngStream& stream, DropoutMasks& masks, Eigen::Index row);

/// Masks for `rows` samples drawn sequentially from one stream.
DropoutMasks sample_masks(const MlpModel& model, Eigen::Index rows, RngStream& stream);

struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer, after masking
  std::vector<Matrix> pre;     // pre-activation of each layer
  DropoutMasks masks;
  Matrix output;
  bool dropout = false;
};

/// Inference-time copy of the weights in kernel layout.
struct PackedModel {
  std::vector<PackedLayer> layers;
};

PackedModel pack_model(const MlpModel& model);

/// Batched forward pass; rows are samples. `masks == nullptr` is
/// deterministic mode (no mask, no scaling).
Matrix forward_batch(const MlpModel& model, const Matrix& x, const DropoutMasks* masks,
                     ForwardCache* cache = nullptr);
Matrix forward_batch(const MlpModel& model, const PackedModel& packed, const Matrix& x, const DropoutMasks* masks);

/// Single-vector forward. `dropout_stream == nullptr` is deterministic mode.
Vector forward(const MlpModel& model, const Vector& x, RngStream* dropout_stream,
               ForwardCache* cache = nullptr);

/// Evaluates masks.rows() stochastic passes of one input. Row t is bitwise
/// equal to forward_batch() of x under row t of `masks`; the first layer,
/// which precedes any mask, is evaluated once.
Matrix forward_replicated(const MlpModel& model, const Vector& x, const DropoutMasks& masks);
Matrix forward_replicated(const MlpModel& model, const PackedModel& packed, const Vector& x,
                          const DropoutMasks& masks);

struct Gradients {
  std::vector<Matrix> d_weights;
  std::vector<Vector> d_biases;

  static Gradients zeros_like(const MlpModel& model);
};

/// Backpropagates dL/d(output) through the output activation, the layers,
/// the ReLU subgradients (0 at 0) and the cached dropout masks.
Gradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& d_output);

/// Same, starting from dL/d(output pre-activation).
Gradients backward_from_logits(const MlpModel& model, const ForwardCache& cache, const Matrix& d_logits);

Matrix apply_input_features(const InputFeatures& features, const Matrix& x);

}  // namespace mcenhance::nn
