// include/mcenhance/dense_kernel.hpp
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

#include <vector>

#include "mcenhance/types.hpp"

namespace mcenhance::nn {

/// W^T laid out in column panels for dense_forward().
struct PackedLayer {
  Eigen::Index in = 0;
  Eigen::Index out = 0;
  std::vector<double> panels;
  Vector bias;
};

PackedLayer pack_layer(const Matrix& W, const Vector& b);

/// Y = X * W^T + b, with every output element accumulated over the input
/// index in ascending order by fused multiply-add. For a given (W, b) an
/// output row depends only on its input row: identical rows give bitwise
/// identical results regardless of batch size or position in the batch.
void dense_forward(const Matrix& X, const PackedLayer& layer, Matrix& Y);
void dense_forward(const Matrix& X, const Matrix& W, const Vector& b, Matrix& Y);

}  // namespace mcenhance::nn
