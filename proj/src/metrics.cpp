// src/metrics.cpp
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

#include "mcenhance/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mcenhance/csv.hpp"
#include "mcenhance/error.hpp"

namespace mcenhance::metrics {

SseResult sse(const Matrix& ref_mag, const Matrix& est_mag) {
  if (ref_mag.rows() != est_mag.rows() || ref_mag.cols() != est_mag.cols()) {
    fail(ErrorCode::ShapeMismatch, "sse: spectra shapes differ");
  }
  SseResult out;
  out.per_frame.resize(ref_mag.rows());
  for (Eigen::Index i = 0; i < ref_mag.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < ref_mag.cols(); ++k) {
      const double d = ref_mag(i, k) - est_mag(i, k);
      s += d * d;
    }
    out.per_frame[i] = s;
    out.total += s;
  }
  return out;
}

double ssnr(const dsp::Signal& clean, const dsp::Signal& estimate, const dsp::FrameConfig& cfg) {
  if (clean.size() != estimate.size()) {
    fail(ErrorCode::LengthMismatch, "ssnr: clean has " + std::to_string(clean.size()) + " samples, estimate " +
                                        std::to_string(estimate.size()));
  }
  cfg.validate();
  const auto L = static_cast<std::size_t>(cfg.frame_len_samples);
  const auto hop = static_cast<std::size_t>(cfg.hop_samples);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t start = 0; start + L <= clean.size(); start += hop) {
    double es = 0.0;
    double ee = 0.0;
    for (std::size_t n = start; n < start + L; ++n) {
      const double s = clean.samples[n];
      const double e = s - estimate.samples[n];
      es += s * s;
      ee += e * e;
    }
    if (es < kSilentFrameEnergy) continue;
    const double db = ee > 0.0 ? 10.0 * std::log10(es / ee) : kSsnrMaxDb;
    sum += std::clamp(db, kSsnrMinDb, kSsnrMaxDb);
    ++used;
  }
  if (used == 0) fail(ErrorCode::NoVoicedFrames, "ssnr: no frame has clean energy above the silence threshold");
  return sum / static_cast<double>(used);
}

double pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "pearson: lengths differ");
  if (a.size() < 3) fail(ErrorCode::DegenerateInput, "pearson: need at least 3 points");
  const double ma = a.mean();
  const double mb = b.mean();
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  const bool a_const = (a.array() == a[0]).all();
  const bool b_const = (b.array() == b[0]).all();
  if (a_const || b_const || saa == 0.0 || sbb == 0.0) fail(ErrorCode::DegenerateInput, "pearson: constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::string TestCondition::name() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s@%g", noise.c_str(), snr_db);
  return buf;
}

SelectionErrors selection_errors(const selection::BankPass& pass, const Matrix& clean_mag) {
  if (pass.means.empty()) fail(ErrorCode::EmptyBank, "empty bank pass");
  if (clean_mag.rows() != pass.n_frames()) fail(ErrorCode::LengthMismatch, "clean/noisy frame counts differ");
  if (pass.classifier_choice.size() != static_cast<std::size_t>(pass.n_frames())) {
    fail(ErrorCode::InvalidParams, "bank pass lacks classifier output");
  }
  SelectionErrors out;
  out.trace_vars = pass.trace_vars;
  out.classifier_choice = pass.classifier_choice;
  out.se.resize(pass.n_frames(), static_cast<Eigen::Index>(pass.means.size()));
  for (std::size_t i = 0; i < pass.means.size(); ++i) {
    out.se.col(static_cast<Eigen::Index>(i)) = sse(clean_mag, pass.means[i]).per_frame;
  }
  return out;
}

SelectionErrors cache_file(const selection::ModelBank& bank, const TestFile& file, const mc::McConfig& mc,
                           const dsp::FrameConfig& frame_cfg) {
  const dsp::SpectralFrames x = dsp::stft(file.noisy, frame_cfg);
  const Matrix clean_mag = dsp::stft(file.clean, frame_cfg).magnitude;
  return selection_errors(selection::compute_bank_pass(bank, x.magnitude, mc, true), clean_mag);
}

namespace {

template <typename Fn>
void for_each_choice(const SelectionErrors& file, double mu, Fn&& fn) {
  for (Eigen::Index f = 0; f < file.trace_vars.rows(); ++f) {
    selection::Route route;
    const int idx = selection::route_rule(file.trace_vars.row(f).transpose(),
                                          file.classifier_choice[static_cast<std::size_t>(f)], mu, &route);
    fn(f, idx, route);
  }
}

}  // namespace

double sse_at_mu(const SelectionErrors& file, double mu) {
  double total = 0.0;
  for_each_choice(file, mu, [&](Eigen::Index f, int idx, selection::Route) { total += file.se(f, idx); });
  return total;
}

double variance_fraction(const SelectionErrors& file, double mu) {
  std::size_t n = 0;
  for_each_choice(file, mu, [&](Eigen::Index, int, selection::Route r) { n += r == selection::Route::VariancePath; });
  return file.trace_vars.rows() ? static_cast<double>(n) / static_cast<double>(file.trace_vars.rows()) : 0.0;
}

namespace {

void check_grid(const std::vector<double>& mu_values) {
  if (mu_values.empty()) fail(ErrorCode::InvalidParams, "sweep: empty mu grid");
  if (!std::is_sorted(mu_values.begin(), mu_values.end())) fail(ErrorCode::InvalidParams, "sweep: mu grid must ascend");
  for (double mu : mu_values) {
    if (!std::isfinite(mu) || mu < 0.0) fail(ErrorCode::InvalidParams, "sweep: mu must be finite and >= 0");
  }
}

double mean_sse(const std::vector<SelectionErrors>& files, double mu) {
  if (files.empty()) fail(ErrorCode::EmptyDataset, "sweep: condition without files");
  double total = 0.0;
  for (const auto& f : files) total += sse_at_mu(f, mu);
  return total / static_cast<double>(files.size());
}

}  // namespace

std::vector<SweepCell> threshold_sweep(const std::vector<std::vector<SelectionErrors>>& cached,
                                       const std::vector<std::string>& condition_names,
                                       const std::vector<double>& mu_values) {
  if (cached.size() != condition_names.size()) fail(ErrorCode::InvalidParams, "sweep: condition names do not match");
  check_grid(mu_values);
  std::vector<SweepCell> cells;
  for (std::size_t c = 0; c < cached.size(); ++c) {
    for (double mu : mu_values) {
      double frac = 0.0;
      for (const auto& f : cached[c]) frac += variance_fraction(f, mu);
      const double sse_mean = mean_sse(cached[c], mu);
      cells.push_back(SweepCell{mu, condition_names[c], sse_mean, frac / static_cast<double>(cached[c].size())});
    }
  }
  return cells;
}

std::vector<SweepCell> threshold_sweep(const selection::ModelBank& bank, const std::vector<TestCondition>& conditions,
                                       const std::vector<double>& mu_values, const mc::McConfig& mc,
                                       const dsp::FrameConfig& frame_cfg) {
  std::vector<std::vector<SelectionErrors>> cached;
  std::vector<std::string> names;
  for (const auto& c : conditions) {
    names.push_back(c.name());
    auto& files = cached.emplace_back();
    for (const auto& f : c.files) files.push_back(cache_file(bank, f, mc, frame_cfg));
  }
  return threshold_sweep(cached, names, mu_values);
}

double select_mu(const std::vector<std::vector<SelectionErrors>>& validation, const std::vector<double>& mu_values) {
  check_grid(mu_values);
  if (validation.empty()) fail(ErrorCode::EmptyDataset, "mu selection needs validation conditions");
  std::vector<double> score(mu_values.size(), 0.0);
  for (const auto& cond : validation) {
    std::vector<double> s(mu_values.size());
    for (std::size_t m = 0; m < mu_values.size(); ++m) s[m] = mean_sse(cond, mu_values[m]);
    const double best = *std::min_element(s.begin(), s.end());
    for (std::size_t m = 0; m < mu_values.size(); ++m) score[m] += best > 0.0 ? s[m] / best : 1.0;
  }
  const auto it = std::min_element(score.begin(), score.end());
  return mu_values[static_cast<std::size_t>(it - score.begin())];
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  CsvTable t({"mu", "condition", "sse"});
  t.add_comment("sse is the mean over files of each file's total magnitude-spectrum squared error");
  for (const auto& c : cells) {
    t.add_row({format_double(c.mu), c.condition, format_double(c.sse)});
  }
  return t.text();
}

const std::vector<double>& default_mu_grid() {
  static const std::vector<double> grid{0.0, 0.04, 0.08, 0.16, 0.32, 0.64, 1e9};
  return grid;
}

}  // namespace mcenhance::metrics
