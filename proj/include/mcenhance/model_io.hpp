// include/mcenhance/model_io.hpp
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
#include <filesystem>
#include <string>
#include <vector>

#include "mcenhance/mlp.hpp"

namespace mcenhance::nn {

/// Model file layout (all integers little-endian):
///
///   bytes 0..3   "MCEN"
///   u32          format version (kModelFormatVersion)
///   u32          header length in bytes
///   header       UTF-8 JSON: layer_dims, hidden_activation, output_activation,
///                keep_prob, weight_decay, n_train_frames, seed, noise_label,
///                kind, class_labels, input (compress, norm, mean, inv_std)
///   payload      float64 parameters, per layer: W row-major [out x in], then b
///
/// The payload length must match the header exactly.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<unsigned char> serialize_model(const MlpModel& model);
MlpModel deserialize_model(const std::vector<unsigned char>& bytes);

/// Writes to a temporary sibling and renames it into place.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace mcenhance::nn
