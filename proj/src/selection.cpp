// src/selection.cpp
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

#include "mcenhance/selection.hpp"

#include <cmath>
#include <set>

#include "json.hpp"

#include "mcenhance/csv.hpp"
#include "mcenhance/error.hpp"
#include "mcenhance/fileutil.hpp"
#include "mcenhance/model_io.hpp"
#include "mcenhance/parallel.hpp"
#include "mcenhance/train.hpp"

namespace mcenhance::selection {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::ClassifierConv: return "class-conv";
    case PolicyKind::ClassifierMC: return "class-mc";
    case PolicyKind::VarMC: return "var-mc";
    case PolicyKind::MuMC: return "mu-mc";
  }
  return "mu-mc";
}

std::string to_string(Route route) { return route == Route::VariancePath ? "variance" : "classifier"; }

void ModelBank::validate(bool require_stochastic) const {
  if (models.empty()) fail(ErrorCode::EmptyBank, "model bank is empty");
  if (labels.size() != models.size()) fail(ErrorCode::DimensionMismatch, "bank label count differs from model count");
  if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
    fail(ErrorCode::InvalidParams, "bank labels must be distinct");
  }
  const int in = models.front().input_dim();
  const int out = models.front().output_dim();
  for (const auto& m : models) {
    m.validate();
    if (m.input_dim() != in || m.output_dim() != out) fail(ErrorCode::DimensionMismatch, "bank regressors differ in shape");
    if (require_stochastic && !(m.dropout.keep_prob < 1.0)) {
      fail(ErrorCode::InvalidParams, "bank regressor '" + m.meta.noise_label + "' has keep_prob 1");
    }
  }
  classifier.validate();
  if (classifier.input_dim() != in) fail(ErrorCode::DimensionMismatch, "classifier input width differs from regressors");
  if (classifier.output_dim() != static_cast<int>(models.size())) {
    fail(ErrorCode::DimensionMismatch, "classifier has " + std::to_string(classifier.output_dim()) +
                                           " outputs for a bank of " + std::to_string(models.size()));
  }
  if (!conv_models.empty()) {
    if (conv_models.size() != models.size()) fail(ErrorCode::DimensionMismatch, "conv model count differs");
    for (const auto& m : conv_models) {
      m.validate();
      if (m.input_dim() != in || m.output_dim() != out) fail(ErrorCode::DimensionMismatch, "conv model shape differs");
    }
  }
}

void SelectionPolicy::validate() const {
  if (!std::isfinite(mu) || mu < 0.0) fail(ErrorCode::InvalidParams, "mu must be finite and >= 0");
  mc.validate();
}

int argmin_lowest(const Vector& v) {
  if (v.size() == 0) fail(ErrorCode::EmptyBank, "argmin of an empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = static_cast<int>(i);
  }
  return best;
}

int route_rule(const Vector& trace_vars, int classifier_choice, double mu, Route* route) {
  const int i_star = argmin_lowest(trace_vars);
  const bool all_above = trace_vars[i_star] > mu;
  if (route) *route = all_above ? Route::VariancePath : Route::ClassifierPath;
  return all_above ? i_star : classifier_choice;
}

namespace {

void require_bank(const ModelBank& bank) {
  if (bank.models.empty()) fail(ErrorCode::EmptyBank, "model bank is empty");
}

Matrix classifier_posteriors(const ModelBank& bank, const Matrix& frames) {
  return nn::forward_batch(bank.classifier, frames, nullptr);
}

std::vector<int> choices_of(const Matrix& posteriors) {
  std::vector<int> out(static_cast<std::size_t>(posteriors.rows()));
  for (Eigen::Index r = 0; r < posteriors.rows(); ++r) out[static_cast<std::size_t>(r)] = nn::argmax_lowest(posteriors.row(r));
  return out;
}

mc::StreamId stream_of(std::size_t model, std::size_t frame) {
  return mc::StreamId{static_cast<std::uint64_t>(model), static_cast<std::uint64_t>(frame)};
}

const nn::MlpModel& conv_model(const ModelBank& bank, int i) {
  const auto k = static_cast<std::size_t>(i);
  return bank.conv_models.empty() ? bank.models[k] : bank.conv_models[k];
}

}  // namespace

Classification classify_frame(const ModelBank& bank, const Vector& x) {
  require_bank(bank);
  if (x.size() != bank.classifier.input_dim()) fail(ErrorCode::DimensionMismatch, "frame width does not match classifier");
  const Matrix p = classifier_posteriors(bank, x.transpose());
  Classification c;
  c.posteriors = p.row(0).transpose();
  c.index = nn::argmax_lowest(p.row(0));
  return c;
}

FrameSelection select_var_mc(const ModelBank& bank, const Vector& x, const mc::McConfig& mc,
                             std::size_t frame_index) {
  require_bank(bank);
  std::vector<mc::McOutput> outs;
  Vector traces(static_cast<Eigen::Index>(bank.size()));
  for (std::size_t i = 0; i < bank.size(); ++i) {
    outs.push_back(mc::mc_forward(bank.models[i], x, mc, stream_of(i, frame_index)));
    traces[static_cast<Eigen::Index>(i)] = outs.back().trace_var;
  }
  FrameSelection s;
  s.index = argmin_lowest(traces);
  s.output = std::move(outs[static_cast<std::size_t>(s.index)]);
  s.decision = FrameDecision{frame_index, s.index, Route::VariancePath, traces, Vector()};
  return s;
}

FrameSelection select_mu_mc(const ModelBank& bank, const Vector& x, const SelectionPolicy& policy,
                            std::size_t frame_index) {
  require_bank(bank);
  if (policy.kind != PolicyKind::MuMC) fail(ErrorCode::InvalidParams, "select_mu_mc needs a MuMC policy");
  policy.validate();
  std::vector<mc::McOutput> outs;
  Vector traces(static_cast<Eigen::Index>(bank.size()));
  for (std::size_t i = 0; i < bank.size(); ++i) {
    outs.push_back(mc::mc_forward(bank.models[i], x, policy.mc, stream_of(i, frame_index)));
    traces[static_cast<Eigen::Index>(i)] = outs.back().trace_var;
  }
  const Classification c = classify_frame(bank, x);
  FrameSelection s;
  Route route;
  s.index = route_rule(traces, c.index, policy.mu, &route);
  s.output = std::move(outs[static_cast<std::size_t>(s.index)]);
  s.decision = FrameDecision{frame_index, s.index, route, traces, c.posteriors};
  return s;
}

BankPass compute_bank_pass(const ModelBank& bank, const Matrix& magnitude, const mc::McConfig& mc,
                           bool with_classifier) {
  require_bank(bank);
  mc.validate();
  const Eigen::Index F = magnitude.rows();
  const auto M = static_cast<Eigen::Index>(bank.size());
  BankPass pass;
  pass.trace_vars.resize(F, M);
  pass.means.assign(bank.size(), Matrix(F, bank.models.front().output_dim()));
  mc::McConfig serial = mc;
  serial.threads = 1;
  std::vector<nn::PackedModel> packed;
  for (const auto& m : bank.models) packed.push_back(nn::pack_model(m));
  parallel_for(static_cast<std::size_t>(F) * bank.size(), mc.threads, [&](std::size_t job) {
    const std::size_t f = job / bank.size();
    const std::size_t i = job % bank.size();
    const auto r = static_cast<Eigen::Index>(f);
    const Vector x = magnitude.row(r).transpose();
    const mc::McOutput o = mc::mc_forward(bank.models[i], packed[i], x, serial, stream_of(i, f));
    pass.means[i].row(r) = o.mean.transpose();
    pass.trace_vars(r, static_cast<Eigen::Index>(i)) = o.trace_var;
  });
  if (with_classifier) {
    pass.posteriors = classifier_posteriors(bank, magnitude);
    pass.classifier_choice = choices_of(pass.posteriors);
  }
  return pass;
}

CachedSelection select_from_pass(const BankPass& pass, double mu) {
  if (pass.means.empty()) fail(ErrorCode::EmptyBank, "empty bank pass");
  if (pass.classifier_choice.size() != static_cast<std::size_t>(pass.n_frames())) {
    fail(ErrorCode::InvalidParams, "bank pass lacks classifier output");
  }
  CachedSelection out;
  out.spectra.resize(pass.n_frames(), pass.means.front().cols());
  for (Eigen::Index f = 0; f < pass.n_frames(); ++f) {
    const Vector traces = pass.trace_vars.row(f).transpose();
    Route route;
    const int idx = route_rule(traces, pass.classifier_choice[static_cast<std::size_t>(f)], mu, &route);
    out.spectra.row(f) = pass.means[static_cast<std::size_t>(idx)].row(f);
    out.decisions.push_back(
        FrameDecision{static_cast<std::size_t>(f), idx, route, traces, pass.posteriors.row(f).transpose()});
  }
  return out;
}

MultiResult enhance_multi(const ModelBank& bank, const dsp::Signal& noisy, const SelectionPolicy& policy,
                          const dsp::FrameConfig& frame_cfg) {
  require_bank(bank);
  policy.validate();
  const dsp::SpectralFrames x = dsp::stft(noisy, frame_cfg);
  if (x.magnitude.cols() != bank.models.front().input_dim()) {
    fail(ErrorCode::DimensionMismatch, "spectral width does not match the bank");
  }
  const Eigen::Index F = x.n_frames();
  MultiResult out;

  switch (policy.kind) {
    case PolicyKind::ClassifierConv:
    case PolicyKind::ClassifierMC: {
      const Matrix post = classifier_posteriors(bank, x.magnitude);
      const std::vector<int> choice = choices_of(post);
      out.spectra.resize(F, bank.models.front().output_dim());
      if (policy.kind == PolicyKind::ClassifierConv) {
        for (std::size_t i = 0; i < bank.size(); ++i) {
          std::vector<Eigen::Index> rows;
          for (Eigen::Index f = 0; f < F; ++f) {
            if (choice[static_cast<std::size_t>(f)] == static_cast<int>(i)) rows.push_back(f);
          }
          if (rows.empty()) continue;
          Matrix in(static_cast<Eigen::Index>(rows.size()), x.magnitude.cols());
          for (std::size_t k = 0; k < rows.size(); ++k) in.row(static_cast<Eigen::Index>(k)) = x.magnitude.row(rows[k]);
          const Matrix y = nn::forward_batch(conv_model(bank, static_cast<int>(i)), in, nullptr);
          for (std::size_t k = 0; k < rows.size(); ++k) out.spectra.row(rows[k]) = y.row(static_cast<Eigen::Index>(k));
        }
      } else {
        mc::McConfig serial = policy.mc;
        serial.threads = 1;
        std::vector<nn::PackedModel> packed;
        for (const auto& m : bank.models) packed.push_back(nn::pack_model(m));
        parallel_for(static_cast<std::size_t>(F), policy.mc.threads, [&](std::size_t f) {
          const auto r = static_cast<Eigen::Index>(f);
          const int c = choice[f];
          const mc::McOutput o = mc::mc_forward(bank.models[static_cast<std::size_t>(c)], packed[static_cast<std::size_t>(c)],
                                                x.magnitude.row(r).transpose(), serial, stream_of(static_cast<std::size_t>(c), f));
          out.spectra.row(r) = o.mean.transpose();
        });
      }
      for (Eigen::Index f = 0; f < F; ++f) {
        out.decisions.push_back(FrameDecision{static_cast<std::size_t>(f), choice[static_cast<std::size_t>(f)],
                                              Route::ClassifierPath, Vector(), post.row(f).transpose()});
      }
      break;
    }
    case PolicyKind::VarMC: {
      const BankPass pass = compute_bank_pass(bank, x.magnitude, policy.mc, false);
      out.spectra.resize(F, bank.models.front().output_dim());
      for (Eigen::Index f = 0; f < F; ++f) {
        const Vector traces = pass.trace_vars.row(f).transpose();
        const int idx = argmin_lowest(traces);
        out.spectra.row(f) = pass.means[static_cast<std::size_t>(idx)].row(f);
        out.decisions.push_back(FrameDecision{static_cast<std::size_t>(f), idx, Route::VariancePath, traces, Vector()});
      }
      break;
    }
    case PolicyKind::MuMC: {
      CachedSelection sel = select_from_pass(compute_bank_pass(bank, x.magnitude, policy.mc, true), policy.mu);
      out.spectra = std::move(sel.spectra);
      out.decisions = std::move(sel.decisions);
      break;
    }
  }
  out.signal = dsp::istft_overlap_add(out.spectra, x.phase, frame_cfg);
  out.signal.sample_rate_hz = noisy.sample_rate_hz;
  return out;
}

std::string decisions_csv(const std::vector<FrameDecision>& decisions, const std::vector<std::string>& labels) {
  const std::size_t M = labels.size();
  std::vector<std::string> header{"frame_index", "route", "chosen_label"};
  for (std::size_t i = 0; i < M; ++i) header.push_back("trace_var_" + std::to_string(i));
  for (std::size_t i = 0; i < M; ++i) header.push_back("posterior_" + std::to_string(i));
  CsvTable t(header);
  for (const auto& d : decisions) {
    std::vector<std::string> row{std::to_string(d.frame_index), to_string(d.route),
                                 labels.at(static_cast<std::size_t>(d.chosen_model))};
    for (std::size_t i = 0; i < M; ++i) {
      row.push_back(d.trace_vars.size() ? format_double(d.trace_vars[static_cast<Eigen::Index>(i)]) : "");
    }
    for (std::size_t i = 0; i < M; ++i) {
      row.push_back(d.posteriors.size() ? format_double(d.posteriors[static_cast<Eigen::Index>(i)]) : "");
    }
    t.add_row(std::move(row));
  }
  return t.text();
}

namespace {

nlohmann::json entry_json(const BankEntry& e) {
  return nlohmann::json{{"label", e.label}, {"path", e.path}, {"keep_prob", e.keep_prob}};
}

BankEntry entry_from(const nlohmann::json& j) {
  BankEntry e;
  e.label = j.at("label").get<std::string>();
  e.path = j.at("path").get<std::string>();
  e.keep_prob = j.value("keep_prob", 0.8);
  return e;
}

}  // namespace

std::string bank_manifest_json(const BankManifest& manifest) {
  nlohmann::json j;
  j["version"] = 1;
  j["labels"] = manifest.labels;
  j["models"] = nlohmann::json::array();
  for (const auto& e : manifest.models) j["models"].push_back(entry_json(e));
  j["classifier"] = nlohmann::json{{"path", manifest.classifier_path}};
  if (!manifest.conv_models.empty()) {
    j["conv_models"] = nlohmann::json::array();
    for (const auto& e : manifest.conv_models) j["conv_models"].push_back(entry_json(e));
  }
  return j.dump(2) + "\n";
}

BankManifest parse_bank_manifest(const std::string& text) {
  BankManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) fail(ErrorCode::InvalidManifest, "unsupported bank manifest version");
    m.labels = j.at("labels").get<std::vector<std::string>>();
    for (const auto& e : j.at("models")) m.models.push_back(entry_from(e));
    m.classifier_path = j.at("classifier").at("path").get<std::string>();
    if (j.contains("conv_models")) {
      for (const auto& e : j.at("conv_models")) m.conv_models.push_back(entry_from(e));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidManifest, std::string("bank manifest: ") + e.what());
  }
  if (m.models.size() != m.labels.size()) fail(ErrorCode::InvalidManifest, "bank manifest model/label count differ");
  for (std::size_t i = 0; i < m.models.size(); ++i) {
    if (m.models[i].label != m.labels[i]) fail(ErrorCode::InvalidManifest, "bank manifest models out of label order");
  }
  return m;
}

ModelBank load_bank(const std::filesystem::path& manifest_path, bool require_stochastic) {
  if (!std::filesystem::exists(manifest_path)) {
    fail(ErrorCode::MissingModels, "bank manifest not found: " + manifest_path.string());
  }
  const BankManifest m = parse_bank_manifest(read_file_text(manifest_path));
  const auto base = manifest_path.parent_path();
  auto load = [&](const std::string& rel) {
    const auto p = std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : base / rel;
    if (!std::filesystem::exists(p)) fail(ErrorCode::MissingModels, "model file not found: " + p.string());
    return nn::load_model(p);
  };
  ModelBank bank;
  bank.labels = m.labels;
  for (const auto& e : m.models) {
    bank.models.push_back(load(e.path));
    if (bank.models.back().dropout.keep_prob != e.keep_prob) {
      fail(ErrorCode::InvalidManifest, "keep_prob of '" + e.label + "' differs from its model file");
    }
  }
  for (const auto& e : m.conv_models) bank.conv_models.push_back(load(e.path));
  bank.classifier = load(m.classifier_path);
  bank.validate(require_stochastic);
  return bank;
}

}  // namespace mcenhance::selection
