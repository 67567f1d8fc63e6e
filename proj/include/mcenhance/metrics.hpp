// include/mcenhance/metrics.hpp
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

#include <string>
#include <vector>

#include "mcenhance/dsp.hpp"
#include "mcenhance/selection.hpp"

namespace mcenhance::metrics {

inline constexpr double kSsnrMinDb = -10.0;
inline constexpr double kSsnrMaxDb = 35.0;
inline constexpr double kSilentFrameEnergy = 1e-10;

struct SseResult {
  double total = 0.0;
  Vector per_frame;
};

/// Sum of squared magnitude differences, per frame and overall.
SseResult sse(const Matrix& ref_mag, const Matrix& est_mag);

/// Mean over non-silent frames of the clamped per-frame SNR. Frames follow
/// cfg (frame_len, hop) without a window; trailing partial frames dropped.
double ssnr(const dsp::Signal& clean, const dsp::Signal& estimate, const dsp::FrameConfig& cfg);

/// Pearson correlation; DegenerateInput for constant or too-short input.
double pearson(const Vector& a, const Vector& b);

inline double variance_error_correlation(const Vector& per_frame_se, const Vector& per_frame_trace_var) {
  return pearson(per_frame_se, per_frame_trace_var);
}

struct EvalReport {
  double sse = 0.0;
  double ssnr_db = 0.0;
  std::size_t n_frames = 0;
  Vector per_frame_se;
  Vector per_frame_trace_var;
};

struct TestFile {
  std::string id;
  dsp::Signal clean;
  dsp::Signal noisy;
};

struct TestCondition {
  std::string noise;
  double snr_db = 0.0;
  std::vector<TestFile> files;

  std::string name() const;
};

/// Per-frame squared error of every bank model next to its trace variance
/// and the classifier's choice. The SSE of any mu-MC decision is a pure
/// function of this table, so one MC pass per file serves a whole sweep.
struct SelectionErrors {
  Matrix trace_vars;  // [n_frames x M]
  Matrix se;          // [n_frames x M]
  std::vector<int> classifier_choice;
};

SelectionErrors selection_errors(const selection::BankPass& pass, const Matrix& clean_mag);

/// Bank pass of one test file reduced to its selection errors.
SelectionErrors cache_file(const selection::ModelBank& bank, const TestFile& file, const mc::McConfig& mc,
                           const dsp::FrameConfig& frame_cfg);

/// Total SSE of the mu-MC selection for one file.
double sse_at_mu(const SelectionErrors& file, double mu);

/// Fraction of frames routed to the variance path.
double variance_fraction(const SelectionErrors& file, double mu);

struct SweepCell {
  double mu = 0.0;
  std::string condition;
  double sse = 0.0;               // mean of per-file totals
  double variance_fraction = 0.0; // share of frames on the variance path
};

/// Cells are ordered condition-major, then by mu. mu_values must ascend.
std::vector<SweepCell> threshold_sweep(const std::vector<std::vector<SelectionErrors>>& cached,
                                       const std::vector<std::string>& condition_names,
                                       const std::vector<double>& mu_values);

std::vector<SweepCell> threshold_sweep(const selection::ModelBank& bank, const std::vector<TestCondition>& conditions,
                                       const std::vector<double>& mu_values, const mc::McConfig& mc,
                                       const dsp::FrameConfig& frame_cfg);

/// The grid value minimizing the mean over conditions of SSE(mu) divided by
/// that condition's smallest SSE over the grid; ties go to the smaller mu.
double select_mu(const std::vector<std::vector<SelectionErrors>>& validation, const std::vector<double>& mu_values);

std::string sweep_csv(const std::vector<SweepCell>& cells);

const std::vector<double>& default_mu_grid();

}  // namespace mcenhance::metrics
