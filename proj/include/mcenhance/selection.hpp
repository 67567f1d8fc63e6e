// include/mcenhance/selection.hpp
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

#include "mcenhance/dsp.hpp"
#include "mcenhance/mcdrop.hpp"
#include "mcenhance/mlp.hpp"

namespace mcenhance::selection {

/// M noise-specific regressors plus a softmax classifier over the same labels.
/// conv_models optionally holds separately trained weights for the
/// deterministic classifier baseline; when empty, `models` is reused.
struct ModelBank {
  std::vector<nn::MlpModel> models;
  nn::MlpModel classifier;
  std::vector<std::string> labels;
  std::vector<nn::MlpModel> conv_models;

  std::size_t size() const noexcept { return models.size(); }

  /// EmptyBank for M == 0; DimensionMismatch when shapes disagree;
  /// InvalidParams for duplicate labels or, with require_stochastic, any
  /// regressor whose keep_prob is 1.
  void validate(bool require_stochastic = false) const;
};

enum class PolicyKind { ClassifierConv, ClassifierMC, VarMC, MuMC };
enum class Route { VariancePath, ClassifierPath };

std::string to_string(PolicyKind kind);
std::string to_string(Route route);

struct SelectionPolicy {
  PolicyKind kind = PolicyKind::MuMC;
  double mu = 0.16;
  mc::McConfig mc;

  void validate() const;
};

/// trace_vars is empty for the classifier-only policies, posteriors is
/// empty for VarMC.
struct FrameDecision {
  std::size_t frame_index = 0;
  int chosen_model = 0;
  Route route = Route::ClassifierPath;
  Vector trace_vars;
  Vector posteriors;
};

int argmin_lowest(const Vector& v);

/// The threshold rule: VariancePath iff min trace > mu, else the classifier's choice.
int route_rule(const Vector& trace_vars, int classifier_choice, double mu, Route* route = nullptr);

struct Classification {
  int index = 0;
  Vector posteriors;
};

Classification classify_frame(const ModelBank& bank, const Vector& x);

struct FrameSelection {
  int index = 0;
  mc::McOutput output;
  FrameDecision decision;
};

/// MC passes on every model; model i of frame f uses StreamId{i, f}.
FrameSelection select_var_mc(const ModelBank& bank, const Vector& x, const mc::McConfig& mc,
                             std::size_t frame_index = 0);

FrameSelection select_mu_mc(const ModelBank& bank, const Vector& x, const SelectionPolicy& policy,
                            std::size_t frame_index = 0);

/// Every model's MC mean and trace for every frame, plus classifier output.
/// Decisions for any mu are a pure function of this cache.
struct BankPass {
  std::vector<Matrix> means;      // per model, [n_frames x D]
  Matrix trace_vars;              // [n_frames x M]
  Matrix posteriors;              // [n_frames x M]
  std::vector<int> classifier_choice;

  Eigen::Index n_frames() const noexcept { return trace_vars.rows(); }
};

BankPass compute_bank_pass(const ModelBank& bank, const Matrix& magnitude, const mc::McConfig& mc,
                           bool with_classifier = true);

/// Mu-MC decisions and the selected spectra from a cached pass.
struct CachedSelection {
  Matrix spectra;
  std::vector<FrameDecision> decisions;
};
CachedSelection select_from_pass(const BankPass& pass, double mu);

struct MultiResult {
  dsp::Signal signal;
  Matrix spectra;
  std::vector<FrameDecision> decisions;
};

MultiResult enhance_multi(const ModelBank& bank, const dsp::Signal& noisy, const SelectionPolicy& policy,
                          const dsp::FrameConfig& frame_cfg);

/// Columns: frame_index, route, chosen_label, trace_var_0..M-1, posterior_0..M-1.
std::string decisions_csv(const std::vector<FrameDecision>& decisions, const std::vector<std::string>& labels);

/// Bank manifest (JSON):
///   { "version": 1,
///     "labels": ["pink", ...],
///     "models": [{"label": "pink", "path": "pink.mcen", "keep_prob": 0.8}, ...],
///     "classifier": {"path": "classifier.mcen"},
///     "conv_models": [{"label": "pink", "path": "..."}]   (optional) }
/// Relative paths are resolved against the manifest's directory.
struct BankEntry {
  std::string label;
  std::string path;
  double keep_prob = 0.8;
};
struct BankManifest {
  std::vector<std::string> labels;
  std::vector<BankEntry> models;
  std::string classifier_path;
  std::vector<BankEntry> conv_models;
};

std::string bank_manifest_json(const BankManifest& manifest);
BankManifest parse_bank_manifest(const std::string& text);
ModelBank load_bank(const std::filesystem::path& manifest_path, bool require_stochastic = true);

}  // namespace mcenhance::selection
