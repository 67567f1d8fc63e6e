// include/mcenhance/harness.hpp
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
#include <optional>
#include <string>
#include <vector>

#include "mcenhance/corpus.hpp"
#include "mcenhance/mcdrop.hpp"
#include "mcenhance/metrics.hpp"
#include "mcenhance/selection.hpp"
#include "mcenhance/train.hpp"

namespace mcenhance::harness {

enum class Policy { SingleConv, SingleMC, ClassConv, ClassMC, VarMC, MuMC };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);
const std::vector<Policy>& all_policies();
bool uses_bank(Policy p);

struct ClassifierConfig {
  nn::TrainConfig train;
  int frame_stride = 4;

  ClassifierConfig();
};

struct ExperimentConfig {
  std::filesystem::path corpus_dir = "corpus";
  std::filesystem::path models_dir = "models";
  std::filesystem::path reports_dir = "reports";
  std::uint64_t seed = 1;
  int threads = 1;

  nn::TrainConfig train;
  ClassifierConfig classifier;
  mc::McConfig mc;
  double mu = 0.16;
  std::vector<double> mu_grid;
  std::vector<Policy> policies;
  bool separate_baseline = false;
  corpus::DeskOptions desk;

  ExperimentConfig();
  /// Throws InvalidParams for T < 1, threads < 1, an unsorted grid and so on.
  void validate() const;
};

/// Reads a JSON config; missing keys keep their defaults.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_json(const ExperimentConfig& cfg);

/// Seeds of the individual training runs, derived from cfg.seed.
std::uint64_t model_seed(const ExperimentConfig& cfg, const std::string& name);

// -------------------------------------------------------------- commands

/// Builds the corpus described by `manifest` into cfg.corpus_dir. `splits`
/// restricts which splits are written (all when empty).
void cmd_synth(const ExperimentConfig& cfg, const corpus::DatasetManifest& manifest,
               const std::vector<std::string>& splits = {});

enum class TrainScope { Single, PerNoise, Classifier };
TrainScope scope_from_string(const std::string& s);

/// Trains the requested scope from the corpus under cfg.corpus_dir and writes
/// models plus loss curves (reports/train_<name>.csv). Per-noise training also
/// writes models/bank.json. Returns the written model paths.
std::vector<std::filesystem::path> cmd_train(const ExperimentConfig& cfg, TrainScope scope);

/// Models needed by a policy, loaded from cfg.models_dir.
struct LoadedModels {
  std::optional<nn::MlpModel> single;
  std::optional<nn::MlpModel> single_conv;
  std::optional<selection::ModelBank> bank;
};
LoadedModels load_models(const ExperimentConfig& cfg, const std::vector<Policy>& policies);

struct EnhanceResult {
  dsp::Signal signal;
  std::vector<selection::FrameDecision> decisions;
  Matrix spectra;
};
EnhanceResult enhance(const LoadedModels& models, const dsp::Signal& noisy, Policy policy, const ExperimentConfig& cfg,
                      const dsp::FrameConfig& frame_cfg);

/// Reads in.wav, writes out.wav and, for bank policies, out.decisions.csv.
void cmd_enhance(const ExperimentConfig& cfg, Policy policy, const std::filesystem::path& in,
                 const std::filesystem::path& out);

/// Per-policy results of one test file.
struct FileScores {
  std::vector<double> sse;   // by policy, in request order
  std::vector<double> ssnr;
  std::optional<metrics::SelectionErrors> errors;  // present when bank policies ran
};

FileScores score_file(const LoadedModels& models, const metrics::TestFile& file, const std::vector<Policy>& policies,
                      const ExperimentConfig& cfg, const dsp::FrameConfig& frame_cfg);

struct EvalRow {
  std::string noise;
  double snr_db = 0.0;
  Policy policy = Policy::SingleConv;
  double sse = 0.0;   // mean over files of per-file totals
  double ssnr = 0.0;  // mean over files
  std::size_t n_files = 0;
};

/// Test entries of the manifest grouped into (noise, snr) conditions, in
/// manifest order. Empty filters accept everything.
std::vector<metrics::TestCondition> load_conditions(const ExperimentConfig& cfg, const corpus::DatasetManifest& manifest,
                                                    const std::string& split, const std::vector<std::string>& noises = {},
                                                    const std::vector<double>& snrs = {});

std::vector<EvalRow> evaluate_conditions(const LoadedModels& models, const std::vector<metrics::TestCondition>& conditions,
                                         const std::vector<Policy>& policies, const ExperimentConfig& cfg,
                                         const dsp::FrameConfig& frame_cfg,
                                         std::vector<std::vector<metrics::SelectionErrors>>* errors = nullptr);

std::string eval_csv(const std::vector<EvalRow>& rows);

/// Writes reports/eval.csv.
std::vector<EvalRow> cmd_evaluate(const ExperimentConfig& cfg, const std::vector<metrics::TestCondition>& conditions);

struct CorrelationRow {
  std::string model;
  std::string noise;
  double snr_db = 0.0;
  double pearson_r = 0.0;
  std::size_t n_frames = 0;
};

struct ScatterPoint {
  std::string model;
  double snr_db = 0.0;
  std::string file;
  std::size_t frame_index = 0;
  double se = 0.0;
  double trace_var = 0.0;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;
  std::vector<ScatterPoint> scatter;
};

/// Per bank model and condition: Pearson r between per-frame squared error
/// and trace variance, pooled over the condition's files.
CorrelationReport correlate(const selection::ModelBank& bank, const std::vector<metrics::TestCondition>& conditions,
                            const ExperimentConfig& cfg, const dsp::FrameConfig& frame_cfg);

/// Writes reports/correlation.csv and reports/correlation_scatter.csv.
CorrelationReport cmd_correlate(const ExperimentConfig& cfg, const std::vector<metrics::TestCondition>& conditions);

std::string correlation_csv(const std::vector<CorrelationRow>& rows);
std::string scatter_csv(const std::vector<ScatterPoint>& points);

/// Writes reports/sweep.csv, plus reports/mu_selection.json when validation
/// conditions are given.
std::vector<metrics::SweepCell> cmd_sweep(const ExperimentConfig& cfg, const std::vector<metrics::TestCondition>& conditions,
                                          const std::vector<metrics::TestCondition>& validation = {},
                                          double* selected_mu = nullptr);

}  // namespace mcenhance::harness
