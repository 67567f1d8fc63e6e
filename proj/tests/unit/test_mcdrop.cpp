// tests/unit/test_mcdrop.cpp
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
#include <vector>

#include "doctest.h"
#include "mcenhance/corpus.hpp"
#include "mcenhance/loss.hpp"
#include "mcenhance/mcdrop.hpp"
#include "mcenhance/train.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace mcenhance;
using namespace mcenhance::mc;

namespace {

// 257 -> 257 -> 257 with identity weights; ReLU is the identity on magnitudes.
nn::MlpModel identity_model(double keep_prob) {
  nn::MlpModel m = nn::MlpModel::zeros({257, 257, 257}, nn::Activation::Relu, nn::Activation::Relu,
                                       nn::DropoutSpec{keep_prob});
  m.weights[0].setIdentity();
  m.weights[1].setIdentity();
  return m;
}

}  // namespace

TEST_CASE("config validation") {
  McConfig cfg;
  CHECK(cfg.T == 50);
  CHECK(cfg.tau_inv == 0.0);
  cfg.validate();
  cfg.T = 0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::InvalidParams);
  cfg.T = 1;
  cfg.tau_inv = -1.0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::InvalidParams);
}

TEST_CASE("estimator examples") {
  Matrix s(2, 1);
  s << 1.0, 3.0;
  CHECK(predictive_mean(s)[0] == 2.0);
  const Variance v = predictive_variance(s, 0.0);
  CHECK(v.var[0] == 1.0);
  CHECK(v.trace == 1.0);
  CHECK(predictive_variance(s, 0.5).var[0] == 1.5);

  const Matrix one = mctest::random_matrix(1, 6, 3);
  CHECK(predictive_mean(one) == Vector(one.row(0).transpose()));
  CHECK(predictive_variance(one, 0.25).var == Vector::Constant(6, 0.25));

  const Matrix same = Matrix::Constant(50, 4, 0.123456789);
  CHECK(predictive_variance(same, 0.0).var == Vector::Zero(4));
  CHECK(predictive_variance(same, 0.3).var == Vector::Constant(4, 0.3));
  CHECK(predictive_mean(same) == Vector::Constant(4, 0.123456789));

  CHECK_ERROR_CODE(predictive_mean(Matrix(0, 3)), ErrorCode::EmptySamples);
  CHECK_ERROR_CODE(predictive_variance(Matrix(0, 3), 0.0), ErrorCode::EmptySamples);
}

TEST_CASE("estimators match brute-force oracles") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix s = mctest::random_matrix(50, 8, seed, -2.0, 3.0);
    const Vector mean = predictive_mean(s);
    const Vector col_mean = s.colwise().mean().transpose();
    CHECK((mean - col_mean).cwiseAbs().maxCoeff() < 1e-12);
    for (double tau : {0.0, 0.7}) {
      const Variance v = predictive_variance(s, tau);
      CHECK((v.var - mctest::brute_force_variance(s, tau)).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((v.var - mctest::two_pass_variance(s, tau)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(v.trace - v.var.sum()) <= 1e-9 * std::abs(v.var.sum()));
      CHECK((v.var.array() >= 0.0).all());
    }
    const Variance v0 = predictive_variance(s, 0.0);
    for (double tau : {0.1, 2.5, 1e-7}) {
      const Variance vt = predictive_variance(s, tau);
      for (Eigen::Index d = 0; d < 8; ++d) CHECK(vt.var[d] == v0.var[d] + tau);
    }
  }
  // Large offset: the shifted form stays exact enough for near-constant columns.
  Matrix big = mctest::random_matrix(50, 3, 9, -1e-6, 1e-6).array() + 1e6;
  CHECK((predictive_variance(big, 0.0).var - mctest::two_pass_variance(big, 0.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tau_inv from model metadata") {
  nn::MlpModel m = mctest::random_model({4, 5, 4}, 0.8, 1);
  CHECK(model_tau_inv(m, std::nullopt) == 0.0);
  m.meta.weight_decay = 1e-4;
  m.meta.n_train_frames = 1000;
  CHECK_ERROR_CODE(model_tau_inv(m, std::nullopt), ErrorCode::InvalidParams);
  CHECK(model_tau_inv(m, 2.0) == doctest::Approx(2.0 * 1000 * 1e-4 / (4.0 * 0.8)).epsilon(1e-14));
  McConfig cfg;
  cfg.prior_length_scale = 2.0;
  CHECK_ERROR_CODE(check_tau_inv(m, cfg), ErrorCode::InvalidParams);
  cfg.tau_inv = model_tau_inv(m, 2.0);
  check_tau_inv(m, cfg);
}

TEST_CASE("mc_forward") {
  const nn::MlpModel det = mctest::random_model({10, 16, 16, 10}, 1.0, 5);
  const Vector x = mctest::random_matrix(10, 1, 1, 0.0, 1.0);
  McConfig cfg;
  const McOutput o = mc_forward(det, x, cfg);
  CHECK(o.samples.rows() == 50);
  for (Eigen::Index t = 0; t < 50; ++t) CHECK(o.samples.row(t) == o.samples.row(0));
  CHECK(o.var.isZero(0.0));
  CHECK(o.trace_var == 0.0);
  CHECK(o.mean == nn::forward(det, x, nullptr));

  const nn::MlpModel m = mctest::random_model({10, 16, 16, 10}, 0.6, 5);
  const McOutput a = mc_forward(m, x, cfg, StreamId{0, 3});
  const McOutput b = mc_forward(m, x, cfg, StreamId{0, 3});
  const McOutput c = mc_forward(m, x, cfg, StreamId{0, 4});
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  CHECK(a.trace_var > 0.0);
  const nn::DropoutMasks masks = mc_masks(m, cfg, StreamId{0, 3});
  for (Eigen::Index t = 0; t < 50; ++t) {
    nn::DropoutMasks one = nn::allocate_masks(m, 1);
    for (std::size_t l = 0; l < masks.hidden.size(); ++l) one.hidden[l].row(0) = masks.hidden[l].row(t);
    CHECK(nn::forward_batch(m, Matrix(x.transpose()), &one).row(0) == a.samples.row(t));
  }
  CHECK_ERROR_CODE(mc_forward(m, Vector::Zero(9), cfg), ErrorCode::DimensionMismatch);
}

TEST_CASE("monte carlo stability") {
  const nn::MlpModel m = mctest::random_model({12, 24, 24, 12}, 0.8, 17);
  const Vector x = mctest::random_matrix(12, 1, 2, 0.2, 1.0);
  McConfig cfg;
  cfg.T = 2000;
  cfg.rng_seed = 1;
  const double t1 = mc_forward(m, x, cfg).trace_var;
  cfg.rng_seed = 2;
  const double t2 = mc_forward(m, x, cfg).trace_var;
  CHECK(std::abs(t1 - t2) / std::max(t1, t2) < 0.05);

  auto spread = [&](int T) {
    McConfig c;
    c.T = T;
    Matrix means(20, 12);
    for (int s = 0; s < 20; ++s) {
      c.rng_seed = 1000 + static_cast<std::uint64_t>(s);
      means.row(s) = mc_forward(m, x, c).mean.transpose();
    }
    const RowVector mu = means.colwise().mean();
    return ((means.rowwise() - mu).array().square().colwise().sum() / 19.0).sqrt().transpose().eval();
  };
  const Eigen::ArrayXd sd50 = spread(50), sd200 = spread(200);
  CHECK(sd200.sum() <= 0.55 * sd50.sum());
}

TEST_CASE("spectra estimation is independent of thread count") {
  const nn::MlpModel m = mctest::random_model({20, 16, 16, 20}, 0.7, 3);
  const Matrix frames = mctest::random_matrix(15, 20, 4, 0.0, 1.0);
  McConfig cfg;
  cfg.T = 8;
  const SpectraEstimate a = estimate_spectra_mc(m, frames, cfg, 2);
  cfg.threads = 3;
  const SpectraEstimate b = estimate_spectra_mc(m, frames, cfg, 2);
  CHECK(a.mean == b.mean);
  CHECK(a.trace_var == b.trace_var);
  for (Eigen::Index f = 0; f < 15; ++f) {
    const McOutput o = mc_forward(m, frames.row(f).transpose(), cfg, StreamId{2, static_cast<std::uint64_t>(f)});
    CHECK(Vector(a.mean.row(f).transpose()) == o.mean);
    CHECK(a.trace_var[f] == o.trace_var);
  }
}

TEST_CASE("single-model enhancement") {
  const dsp::FrameConfig fc;
  const dsp::Signal x = mctest::random_signal(8000, 31, 0.3);
  McConfig cfg;
  const dsp::Signal y = enhance_single_mc(identity_model(1.0), x, cfg, fc);
  CHECK(y.size() == dsp::ola_length(dsp::frame_count(x.size(), fc), fc));
  CHECK(mctest::interior_rel_error(x, y, fc) < 1e-6);
  CHECK(mctest::interior_rel_error(x, enhance_deterministic(identity_model(1.0), x, fc), fc) < 1e-6);

  const nn::MlpModel zero = nn::MlpModel::zeros({257, 64, 257}, nn::Activation::Relu, nn::Activation::Relu,
                                                nn::DropoutSpec{0.8});
  for (double v : enhance_single_mc(zero, x, cfg, fc).samples) CHECK(v == 0.0);
  for (double v : enhance_deterministic(zero, x, fc).samples) CHECK(v == 0.0);

  const nn::MlpModel p1 = mctest::random_model({257, 32, 257}, 1.0, 8);
  McConfig t1;
  t1.T = 1;
  CHECK(enhance_single_mc(p1, x, t1, fc).samples == enhance_deterministic(p1, x, fc).samples);
  const nn::MlpModel p8 = mctest::random_model({257, 32, 257}, 0.8, 8);
  CHECK(enhance_single_mc(p8, x, cfg, fc).samples != enhance_deterministic(p8, x, fc).samples);

  CHECK_ERROR_CODE(enhance_single_mc(p1, dsp::Signal{std::vector<double>(100, 0.1)}, cfg, fc),
                   ErrorCode::SignalTooShort);
}

TEST_CASE("averaging more passes lowers the error of a trained model") {
  const dsp::FrameConfig fc;
  corpus::NoiseSpec spec;
  spec.family = corpus::NoiseFamily::Pink;
  nn::FramePairs pairs;
  std::vector<Matrix> noisy, clean;
  for (std::uint64_t k = 0; k < 6; ++k) {
    spec.seed = 10 + k;
    const dsp::Signal s = corpus::synth_speech(2.5, 100 + k);
    const dsp::Signal n = corpus::synth_noise(spec, 2.5);
    const dsp::Signal mix = dsp::mix_at_snr(s, n, static_cast<double>(k % 3) * 5.0).noisy;
    noisy.push_back(dsp::stft(mix, fc).magnitude);
    clean.push_back(dsp::stft(s, fc).magnitude);
  }
  Eigen::Index rows = 0;
  for (const auto& m : noisy) rows += m.rows();
  pairs.noisy.resize(rows, 257);
  pairs.clean.resize(rows, 257);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    pairs.noisy.middleRows(r, noisy[i].rows()) = noisy[i];
    pairs.clean.middleRows(r, clean[i].rows()) = clean[i];
    r += noisy[i].rows();
  }
  nn::TrainConfig tc;
  tc.hidden_dims = {128, 128, 128};
  tc.n_epochs = 8;
  tc.batch_size = 64;
  const nn::MlpModel model = nn::train_regressor(pairs, tc).model;

  spec.seed = 99;
  const dsp::Signal s = corpus::synth_speech(3.0, 555);
  const dsp::Signal mix = dsp::mix_at_snr(s, corpus::synth_noise(spec, 3.0), 0.0).noisy;
  const Matrix frames = dsp::stft(mix, fc).magnitude;
  const Matrix target = dsp::stft(s, fc).magnitude;
  McConfig c1, c50;
  c1.T = 1;
  const double e1 = nn::msle_batch(estimate_spectra_mc(model, frames, c1).mean, target).value;
  const double e50 = nn::msle_batch(estimate_spectra_mc(model, frames, c50).mean, target).value;
  CHECK(e50 < e1);
}
