// tests/unit/test_metrics.cpp
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

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mcenhance/corpus.hpp"
#include "mcenhance/csv.hpp"
#include "mcenhance/metrics.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace mcenhance;
using namespace mcenhance::metrics;

namespace {

selection::ModelBank toy_bank(int M, std::uint64_t seed) {
  selection::ModelBank b;
  for (int i = 0; i < M; ++i) {
    b.models.push_back(mctest::random_model({257, 24, 24, 257}, 0.7, seed + static_cast<std::uint64_t>(i)));
    b.labels.push_back("n" + std::to_string(i));
  }
  b.classifier = mctest::random_model({257, 16, M}, 0.8, seed + 100, nn::Activation::Softmax);
  return b;
}

TestFile test_file(std::uint64_t seed, double snr) {
  corpus::NoiseSpec spec;
  spec.family = corpus::NoiseFamily::Pink;
  spec.seed = seed;
  TestFile f;
  f.id = "f" + std::to_string(seed);
  f.clean = corpus::synth_speech(2.0, seed);
  f.noisy = dsp::mix_at_snr(f.clean, corpus::synth_noise(spec, 2.0), snr).noisy;
  return f;
}

}  // namespace

TEST_CASE("sse") {
  const Matrix a = mctest::random_matrix(5, 7, 1);
  CHECK(sse(a, a).total == 0.0);
  Matrix one = Matrix::Zero(1, 4), two = Matrix::Zero(1, 4);
  two(0, 2) = 2.0;
  CHECK(sse(one, two).total == 4.0);
  Matrix r = Matrix::Zero(2, 2), e(2, 2);
  e << 1.0, 0.0, 1.0, std::sqrt(2.0);
  const SseResult s = sse(r, e);
  CHECK(s.per_frame[0] == 1.0);
  CHECK(s.per_frame[1] == doctest::Approx(3.0));
  CHECK(s.total == doctest::Approx(4.0));
  const Matrix b = mctest::random_matrix(5, 7, 2);
  const SseResult sb = sse(a, b);
  CHECK(sb.total > 0.0);
  CHECK(std::abs(sb.total - sb.per_frame.sum()) <= 1e-9 * sb.total);
  CHECK(sb.total == doctest::Approx((a - b).squaredNorm()).epsilon(1e-12));
  CHECK_ERROR_CODE(sse(a, Matrix::Zero(5, 6)), ErrorCode::ShapeMismatch);
}

TEST_CASE("ssnr") {
  const dsp::FrameConfig fc;
  const dsp::Signal clean = corpus::synth_speech(2.0, 3);
  CHECK(ssnr(clean, clean, fc) == 35.0);
  dsp::Signal zero{std::vector<double>(clean.size(), 0.0)};
  CHECK(ssnr(clean, zero, fc) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_ERROR_CODE(ssnr(zero, clean, fc), ErrorCode::NoVoicedFrames);
  CHECK_ERROR_CODE(ssnr(clean, dsp::Signal{std::vector<double>(clean.size() - 1, 0.0)}, fc), ErrorCode::LengthMismatch);

  const dsp::Signal noise = mctest::random_signal(clean.size(), 4, 1.0);
  dsp::Signal est = clean;
  for (double scale : {3.0, 1.0, 0.3, 0.1, 0.03, 0.01, 1e-3}) {
    for (std::size_t i = 0; i < est.size(); ++i) est.samples[i] = clean.samples[i] + scale * noise.samples[i];
    const double v = ssnr(clean, est, fc);
    CHECK(v >= kSsnrMinDb);
    CHECK(v <= kSsnrMaxDb);
  }
  // Halving the error never lowers the score.
  double prev = -100.0;
  for (double scale = 4.0; scale > 1e-4; scale *= 0.5) {
    for (std::size_t i = 0; i < est.size(); ++i) est.samples[i] = clean.samples[i] + scale * noise.samples[i];
    const double v = ssnr(clean, est, fc);
    CHECK(v >= prev);
    prev = v;
  }

  // Hand-computed two-frame case with one silent frame.
  dsp::FrameConfig small;
  small.frame_len_samples = 4;
  small.hop_samples = 4;
  small.fft_size = 4;
  dsp::Signal c{{1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 1.0, -1.0}};
  dsp::Signal h{{1.1, 0.9, 1.0, 1.0, 0.3, 0.0, 0.0, 0.0, 1.0, -1.0, 1.0, -0.5}};
  const double f0 = 10.0 * std::log10(4.0 / 0.02);
  const double f2 = 10.0 * std::log10(4.0 / 0.25);
  CHECK(ssnr(c, h, small) == doctest::Approx((f0 + f2) / 2.0).epsilon(1e-12));
}

TEST_CASE("pearson") {
  const Vector se = mctest::random_matrix(40, 1, 1, 0.0, 5.0);
  CHECK(variance_error_correlation(se, Vector(2.0 * se.array() + 1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pearson(se, -se) == doctest::Approx(-1.0).epsilon(1e-14));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Vector a = mctest::random_matrix(100, 1, 10 + s);
    const Vector b = mctest::random_matrix(100, 1, 20 + s);
    const double r = pearson(a, b);
    CHECK(std::abs(r - mctest::two_pass_pearson({a.data(), 100}, {b.data(), 100})) < 1e-12);
    CHECK(r == pearson(b, a));
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
  CHECK_ERROR_CODE(pearson(Vector::Constant(5, 1.0), se.head(5)), ErrorCode::DegenerateInput);
  CHECK_ERROR_CODE(pearson(se.head(2), se.head(2)), ErrorCode::DegenerateInput);
  CHECK_ERROR_CODE(pearson(se.head(4), se.head(5)), ErrorCode::LengthMismatch);
}

TEST_CASE("threshold sweep") {
  const selection::ModelBank bank = toy_bank(3, 5);
  std::vector<TestCondition> conds(2);
  conds[0].noise = "pink";
  conds[0].snr_db = 0.0;
  conds[1].noise = "pink";
  conds[1].snr_db = -10.0;
  for (std::uint64_t k = 0; k < 2; ++k) {
    conds[0].files.push_back(test_file(10 + k, 0.0));
    conds[1].files.push_back(test_file(20 + k, -10.0));
  }
  CHECK(conds[1].name() == "pink@-10");
  const dsp::FrameConfig fc;
  mc::McConfig mc;
  mc.T = 6;
  const auto& grid = default_mu_grid();
  CHECK(grid == std::vector<double>{0.0, 0.04, 0.08, 0.16, 0.32, 0.64, 1e9});
  const std::vector<SweepCell> cells = threshold_sweep(bank, conds, grid, mc, fc);
  REQUIRE(cells.size() == 2 * grid.size());

  for (std::size_t c = 0; c < 2; ++c) {
    for (double mu : {0.0, 1e9}) {
      selection::SelectionPolicy p;
      p.kind = mu == 0.0 ? selection::PolicyKind::VarMC : selection::PolicyKind::ClassifierMC;
      p.mc = mc;
      double total = 0.0;
      for (const auto& f : conds[c].files) {
        const auto r = selection::enhance_multi(bank, f.noisy, p, fc);
        total += sse(dsp::stft(f.clean, fc).magnitude, r.spectra).total;
      }
      const std::size_t idx = c * grid.size() + (mu == 0.0 ? 0 : grid.size() - 1);
      CHECK(cells[idx].condition == conds[c].name());
      CHECK(cells[idx].mu == mu);
      CHECK(cells[idx].sse == doctest::Approx(total / 2.0).epsilon(1e-12));
    }
    double prev = 2.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
      const double vf = cells[c * grid.size() + m].variance_fraction;
      CHECK(vf <= prev);
      prev = vf;
    }
  }

  // Cached and recomputed sweeps agree exactly.
  std::vector<std::vector<SelectionErrors>> cached(2);
  for (std::size_t c = 0; c < 2; ++c)
    for (const auto& f : conds[c].files) cached[c].push_back(cache_file(bank, f, mc, fc));
  const auto again = threshold_sweep(cached, {conds[0].name(), conds[1].name()}, grid);
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(again[i].sse == cells[i].sse);

  const std::vector<double> mid{0.01};
  const auto one = threshold_sweep(cached, {conds[0].name(), conds[1].name()}, mid);
  for (std::size_t c = 0; c < 2; ++c) {
    selection::SelectionPolicy p;
    p.mu = 0.01;
    p.mc = mc;
    double total = 0.0;
    for (const auto& f : conds[c].files) {
      total += sse(dsp::stft(f.clean, fc).magnitude, selection::enhance_multi(bank, f.noisy, p, fc).spectra).total;
    }
    CHECK(one[c].sse == doctest::Approx(total / 2.0).epsilon(1e-12));
  }

  const double mu_star = select_mu(cached, grid);
  CHECK(std::find(grid.begin(), grid.end(), mu_star) != grid.end());

  CHECK_ERROR_CODE(threshold_sweep(cached, {"a", "b"}, std::vector<double>{0.5, 0.1}), ErrorCode::InvalidParams);
  CHECK_ERROR_CODE(threshold_sweep(cached, {"a", "b"}, std::vector<double>{}), ErrorCode::InvalidParams);

  const std::string csv = sweep_csv(cells);
  std::istringstream in(csv);
  std::string line;
  std::size_t rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    if (!header) {
      CHECK(line == "mu,condition,sse");
      header = true;
      continue;
    }
    ++rows;
  }
  CHECK(rows == cells.size());
}

TEST_CASE("select_mu ties go to the smaller value") {
  SelectionErrors e;
  e.trace_vars = Matrix::Constant(4, 2, 0.5);
  e.se = Matrix::Constant(4, 2, 1.0);
  e.classifier_choice = {0, 0, 1, 1};
  CHECK(select_mu({{e}}, {0.0, 0.1, 1.0}) == 0.0);
  // Classifier picks the worse model: only small mu (variance path) helps.
  e.se.col(1).setConstant(3.0);
  e.trace_vars.col(1).setConstant(0.9);
  e.classifier_choice = {1, 1, 1, 1};
  CHECK(sse_at_mu(e, 0.0) == 4.0);
  CHECK(sse_at_mu(e, 1.0) == 12.0);
  CHECK(variance_fraction(e, 0.0) == 1.0);
  CHECK(variance_fraction(e, 0.5) == 0.0);
  CHECK(select_mu({{e}}, {0.0, 0.1, 1.0}) == 0.0);
}

TEST_CASE("csv formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CsvTable t({"a", "b"});
  t.add_comment("note");
  t.add_row({"1", "2"});
  CHECK(t.text() == "# note\na,b\n1,2\n");
  CHECK_ERROR_CODE(t.add_row({"1"}), ErrorCode::ShapeMismatch);
  CHECK(CsvTable({"x"}).text() == "x\n");
}
