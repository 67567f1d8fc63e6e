// src/mlp.cpp
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

#include "mcenhance/mlp.hpp"

#include <cmath>
#include <string>

#include "mcenhance/dense_kernel.hpp"
#include "mcenhance/error.hpp"

namespace mcenhance::nn {

void DropoutSpec::validate() const {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    fail(ErrorCode::InvalidParams, "keep_prob must lie in (0, 1], got " + std::to_string(keep_prob));
  }
}

void MlpModel::validate() const {
  if (layer_dims.size() < 2) fail(ErrorCode::DimensionMismatch, "need at least input and output dims");
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    fail(ErrorCode::DimensionMismatch, "parameter count does not match layer_dims");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (layer_dims[l] <= 0 || layer_dims[l + 1] <= 0) fail(ErrorCode::DimensionMismatch, "non-positive layer dim");
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1]) {
      fail(ErrorCode::DimensionMismatch, "layer " + std::to_string(l) + " shape does not chain");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      fail(ErrorCode::InvalidParams, "non-finite parameter in layer " + std::to_string(l));
    }
  }
  if (hidden_activation == Activation::Softmax) fail(ErrorCode::InvalidParams, "softmax is output-only");
  if (input.norm == InputNorm::ZScore &&
      (input.mean.size() != input_dim() || input.inv_std.size() != input_dim())) {
    fail(ErrorCode::DimensionMismatch, "z-score statistics do not match input dim");
  }
  dropout.validate();
}

MlpModel MlpModel::zeros(std::vector<int> layer_dims, Activation hidden, Activation output, DropoutSpec dropout) {
  MlpModel m;
  m.layer_dims = std::move(layer_dims);
  m.hidden_activation = hidden;
  m.output_activation = output;
  m.dropout = dropout;
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    m.weights.push_back(Matrix::Zero(m.layer_dims[l + 1], m.layer_dims[l]));
    m.biases.push_back(Vector::Zero(m.layer_dims[l + 1]));
  }
  m.validate();
  return m;
}

MlpModel MlpModel::create(std::vector<int> layer_dims, Activation hidden, Activation output, DropoutSpec dropout,
                          RngStream& init) {
  MlpModel m = zeros(std::move(layer_dims), hidden, output, dropout);
  for (auto& w : m.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = init.uniform(-limit, limit);
  }
  return m;
}

bool MlpModel::operator==(const MlpModel& o) const {
  if (layer_dims != o.layer_dims || hidden_activation != o.hidden_activation ||
      output_activation != o.output_activation || !(dropout == o.dropout) || !(input == o.input) ||
      !(meta == o.meta) || weights.size() != o.weights.size()) {
    return false;
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != o.weights[l] || biases[l] != o.biases[l]) return false;
  }
  return true;
}

DropoutMasks allocate_masks(const MlpModel& model, Eigen::Index rows) {
  DropoutMasks masks;
  for (std::size_t l = 0; l < model.n_hidden(); ++l) {
    masks.hidden.push_back(Matrix::Ones(rows, model.layer_dims[l + 1]));
  }
  return masks;
}

void draw_mask_row(const MlpModel& model, RngStream& stream, DropoutMasks& masks, Eigen::Index row) {
  const double p = model.dropout.keep_prob;
  const double scale = 1.0 / p;
  for (auto& m : masks.hidden) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(row, j) = stream.uniform() < p ? scale : 0.0;
  }
}

DropoutMasks sample_masks(const MlpModel& model, Eigen::Index rows, RngStream& stream) {
  DropoutMasks masks = allocate_masks(model, rows);
  for (Eigen::Index r = 0; r < rows; ++r) draw_mask_row(model, stream, masks, r);
  return masks;
}

Matrix apply_input_features(const InputFeatures& features, const Matrix& x) {
  if (features.compress == InputCompress::None && features.norm == InputNorm::None) return x;
  Matrix out = x;
  if (features.compress == InputCompress::Log1p) out = out.array().log1p().matrix();
  if (features.norm == InputNorm::ZScore) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      out.row(r) = ((out.row(r).transpose() - features.mean).array() * features.inv_std.array()).transpose();
    }
  }
  return out;
}

namespace {

void activate(Activation act, Matrix& z) {
  switch (act) {
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Identity:
      break;
    case Activation::Softmax:
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double mx = z.row(r).maxCoeff();
        z.row(r) = (z.row(r).array() - mx).exp().matrix();
        z.row(r) /= z.row(r).sum();
      }
      break;
  }
}

void check_masks(const MlpModel& model, const DropoutMasks& masks, Eigen::Index rows) {
  if (masks.hidden.size() != model.n_hidden()) fail(ErrorCode::DimensionMismatch, "mask layer count");
  for (std::size_t l = 0; l < masks.hidden.size(); ++l) {
    if (masks.hidden[l].rows() != rows || masks.hidden[l].cols() != model.layer_dims[l + 1]) {
      fail(ErrorCode::DimensionMismatch, "mask shape for hidden layer " + std::to_string(l));
    }
  }
}

// Runs layers [first, L) on `a`, which is the (already masked) input of layer `first`.
Matrix propagate(const MlpModel& model, const PackedModel* packed, std::size_t first, Matrix a,
                 const DropoutMasks* masks, ForwardCache* cache) {
  const std::size_t L = model.n_layers();
  for (std::size_t l = first; l < L; ++l) {
    Matrix z;
    if (packed) {
      dense_forward(a, packed->layers[l], z);
    } else {
      dense_forward(a, model.weights[l], model.biases[l], z);
    }
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(z);
    }
    const bool is_output = l + 1 == L;
    activate(is_output ? model.output_activation : model.hidden_activation, z);
    if (!is_output && masks) z.array() *= masks->hidden[l].array();
    a = std::move(z);
  }
  return a;
}

void check_packed(const MlpModel& model, const PackedModel& packed) {
  if (packed.layers.size() != model.n_layers()) fail(ErrorCode::DimensionMismatch, "packed layer count");
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    if (packed.layers[l].in != model.weights[l].cols() || packed.layers[l].out != model.weights[l].rows()) {
      fail(ErrorCode::DimensionMismatch, "packed layer shape");
    }
  }
}

Matrix forward_batch_impl(const MlpModel& model, const PackedModel* packed, const Matrix& x,
                          const DropoutMasks* masks, ForwardCache* cache) {
  if (x.cols() != model.input_dim()) {
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.cols()) + " columns, model expects " +
                                           std::to_string(model.input_dim()));
  }
  if (!x.allFinite()) fail(ErrorCode::NonFiniteInput, "non-finite network input");
  if (masks) check_masks(model, *masks, x.rows());
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
    cache->dropout = masks != nullptr;
    cache->masks = masks ? *masks : DropoutMasks{};
  }
  Matrix y = propagate(model, packed, 0, apply_input_features(model.input, x), masks, cache);
  if (cache) cache->output = y;
  return y;
}

}  // namespace

PackedModel pack_model(const MlpModel& model) {
  PackedModel p;
  for (std::size_t l = 0; l < model.n_layers(); ++l) p.layers.push_back(pack_layer(model.weights[l], model.biases[l]));
  return p;
}

Matrix forward_batch(const MlpModel& model, const Matrix& x, const DropoutMasks* masks, ForwardCache* cache) {
  return forward_batch_impl(model, nullptr, x, masks, cache);
}

Matrix forward_batch(const MlpModel& model, const PackedModel& packed, const Matrix& x, const DropoutMasks* masks) {
  check_packed(model, packed);
  return forward_batch_impl(model, &packed, x, masks, nullptr);
}

Vector forward(const MlpModel& model, const Vector& x, RngStream* dropout_stream, ForwardCache* cache) {
  const Matrix row = x.transpose();
  if (dropout_stream) {
    DropoutMasks masks = allocate_masks(model, 1);
    draw_mask_row(model, *dropout_stream, masks, 0);
    return forward_batch(model, row, &masks, cache).row(0).transpose();
  }
  return forward_batch(model, row, nullptr, cache).row(0).transpose();
}

Matrix forward_replicated(const MlpModel& model, const Vector& x, const DropoutMasks& masks) {
  return forward_replicated(model, pack_model(model), x, masks);
}

Matrix forward_replicated(const MlpModel& model, const PackedModel& packed, const Vector& x,
                          const DropoutMasks& masks) {
  check_packed(model, packed);
  if (x.size() != model.input_dim()) fail(ErrorCode::DimensionMismatch, "input dim");
  if (!x.allFinite()) fail(ErrorCode::NonFiniteInput, "non-finite network input");
  const Eigen::Index rows = masks.rows();
  if (model.n_hidden() == 0) {
    // Nothing is masked; every pass is the deterministic pass.
    const Matrix y = forward_batch(model, packed, x.transpose(), nullptr);
    return y.replicate(rows, 1);
  }
  check_masks(model, masks, rows);
  const Matrix a0 = apply_input_features(model.input, Matrix(x.transpose()));
  Matrix z1;
  dense_forward(a0, packed.layers[0], z1);
  activate(model.hidden_activation, z1);
  Matrix a1 = z1.replicate(rows, 1);
  a1.array() *= masks.hidden[0].array();
  return propagate(model, &packed, 1, std::move(a1), &masks, nullptr);
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    g.d_weights.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    g.d_biases.push_back(Vector::Zero(model.biases[l].size()));
  }
  return g;
}

Gradients backward_from_logits(const MlpModel& model, const ForwardCache& cache, const Matrix& d_logits) {
  const std::size_t L = model.n_layers();
  if (cache.inputs.size() != L || cache.pre.size() != L) fail(ErrorCode::CacheMismatch, "cache layer count");
  const Eigen::Index rows = cache.output.rows();
  if (d_logits.rows() != rows || d_logits.cols() != model.output_dim()) {
    fail(ErrorCode::CacheMismatch, "upstream gradient shape does not match cached output");
  }
  for (std::size_t l = 0; l < L; ++l) {
    if (cache.inputs[l].cols() != model.layer_dims[l] || cache.pre[l].cols() != model.layer_dims[l + 1]) {
      fail(ErrorCode::CacheMismatch, "cache shape at layer " + std::to_string(l));
    }
  }
  if (cache.dropout && cache.masks.hidden.size() != model.n_hidden()) {
    fail(ErrorCode::CacheMismatch, "cached masks do not match model");
  }

  Gradients g;
  g.d_weights.resize(L);
  g.d_biases.resize(L);
  Matrix delta = d_logits;
  for (std::size_t l = L; l-- > 0;) {
    g.d_weights[l].noalias() = delta.transpose() * cache.inputs[l];
    g.d_biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix upstream = delta * model.weights[l];
    if (cache.dropout) upstream.array() *= cache.masks.hidden[l - 1].array();
    if (model.hidden_activation == Activation::Relu) {
      upstream.array() *= (cache.pre[l - 1].array() > 0.0).cast<double>();
    }
    delta = std::move(upstream);
  }
  return g;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& d_output) {
  if (cache.pre.size() != model.n_layers()) fail(ErrorCode::CacheMismatch, "cache layer count");
  if (d_output.rows() != cache.output.rows() || d_output.cols() != cache.output.cols()) {
    fail(ErrorCode::CacheMismatch, "upstream gradient shape does not match cached output");
  }
  Matrix d_logits = d_output;
  switch (model.output_activation) {
    case Activation::Relu:
      d_logits.array() *= (cache.pre.back().array() > 0.0).cast<double>();
      break;
    case Activation::Identity:
      break;
    case Activation::Softmax: {
      const Matrix& s = cache.output;
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double dot = d_output.row(r).dot(s.row(r));
        d_logits.row(r) = (s.row(r).array() * (d_output.row(r).array() - dot)).matrix();
      }
      break;
    }
  }
  return backward_from_logits(model, cache, d_logits);
}

}  // namespace mcenhance::nn
