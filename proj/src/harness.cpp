// src/harness.cpp
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

#include "mcenhance/harness.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "json.hpp"

#include "mcenhance/csv.hpp"
#include "mcenhance/error.hpp"
#include "mcenhance/fileutil.hpp"
#include "mcenhance/model_io.hpp"
#include "mcenhance/parallel.hpp"
#include "mcenhance/rng.hpp"
#include "mcenhance/wav.hpp"

namespace mcenhance::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Policy p) {
  switch (p) {
    case Policy::SingleConv: return "single-conv";
    case Policy::SingleMC: return "single-mc";
    case Policy::ClassConv: return "class-conv";
    case Policy::ClassMC: return "class-mc";
    case Policy::VarMC: return "var-mc";
    case Policy::MuMC: return "mu-mc";
  }
  return "single-conv";
}

const std::vector<Policy>& all_policies() {
  static const std::vector<Policy> all{Policy::SingleConv, Policy::SingleMC, Policy::ClassConv,
                                       Policy::ClassMC,    Policy::VarMC,    Policy::MuMC};
  return all;
}

Policy policy_from_string(const std::string& s) {
  for (Policy p : all_policies()) {
    if (to_string(p) == s) return p;
  }
  fail(ErrorCode::InvalidParams, "unknown policy '" + s + "'");
}

bool uses_bank(Policy p) { return p != Policy::SingleConv && p != Policy::SingleMC; }

ClassifierConfig::ClassifierConfig() {
  train.hidden_dims = {256};
  train.n_epochs = 10;
  train.input_compress = nn::InputCompress::Log1p;
  train.input_norm = nn::InputNorm::ZScore;
}

ExperimentConfig::ExperimentConfig() : mu_grid(metrics::default_mu_grid()), policies(all_policies()) {}

void ExperimentConfig::validate() const {
  train.validate();
  classifier.train.validate();
  if (classifier.frame_stride < 1) fail(ErrorCode::InvalidParams, "classifier frame_stride must be >= 1");
  mc.validate();
  if (threads < 1) fail(ErrorCode::InvalidParams, "threads must be >= 1");
  if (!std::isfinite(mu) || mu < 0.0) fail(ErrorCode::InvalidParams, "mu must be finite and >= 0");
  if (mu_grid.empty() || !std::is_sorted(mu_grid.begin(), mu_grid.end())) {
    fail(ErrorCode::InvalidParams, "mu_grid must be non-empty and ascending");
  }
}

namespace {

std::string norm_name(nn::InputNorm n) { return n == nn::InputNorm::ZScore ? "zscore" : "none"; }
std::string compress_name(nn::InputCompress c) { return c == nn::InputCompress::Log1p ? "log1p" : "none"; }

nn::InputNorm norm_from(const std::string& s) {
  if (s == "zscore") return nn::InputNorm::ZScore;
  if (s == "none") return nn::InputNorm::None;
  fail(ErrorCode::InvalidParams, "input_norm must be none or zscore");
}

nn::InputCompress compress_from(const std::string& s) {
  if (s == "log1p") return nn::InputCompress::Log1p;
  if (s == "none") return nn::InputCompress::None;
  fail(ErrorCode::InvalidParams, "input_compress must be none or log1p");
}

json train_json(const nn::TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate},
              {"adam_beta1", t.adam_beta1},
              {"adam_beta2", t.adam_beta2},
              {"adam_eps", t.adam_eps},
              {"weight_decay", t.weight_decay},
              {"batch_size", t.batch_size},
              {"n_epochs", t.n_epochs},
              {"optimizer", t.optimizer == nn::OptimizerKind::Adam ? "adam" : "sgd"},
              {"hidden_dims", t.hidden_dims},
              {"keep_prob", t.keep_prob},
              {"input_norm", norm_name(t.input_norm)},
              {"input_compress", compress_name(t.input_compress)}};
}

void train_from(const json& j, nn::TrainConfig& t) {
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.adam_beta1 = j.value("adam_beta1", t.adam_beta1);
  t.adam_beta2 = j.value("adam_beta2", t.adam_beta2);
  t.adam_eps = j.value("adam_eps", t.adam_eps);
  t.weight_decay = j.value("weight_decay", t.weight_decay);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.n_epochs = j.value("n_epochs", t.n_epochs);
  if (j.contains("optimizer")) {
    const auto o = j.at("optimizer").get<std::string>();
    if (o != "adam" && o != "sgd") fail(ErrorCode::InvalidParams, "optimizer must be adam or sgd");
    t.optimizer = o == "adam" ? nn::OptimizerKind::Adam : nn::OptimizerKind::Sgd;
  }
  t.hidden_dims = j.value("hidden_dims", t.hidden_dims);
  t.keep_prob = j.value("keep_prob", t.keep_prob);
  if (j.contains("input_norm")) t.input_norm = norm_from(j.at("input_norm").get<std::string>());
  if (j.contains("input_compress")) t.input_compress = compress_from(j.at("input_compress").get<std::string>());
}

}  // namespace

std::string config_json(const ExperimentConfig& c) {
  json j;
  j["corpus_dir"] = c.corpus_dir.string();
  j["models_dir"] = c.models_dir.string();
  j["reports_dir"] = c.reports_dir.string();
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["train"] = train_json(c.train);
  j["classifier"] = train_json(c.classifier.train);
  j["classifier"]["frame_stride"] = c.classifier.frame_stride;
  j["mc"] = json{{"T", c.mc.T}, {"tau_inv", c.mc.tau_inv}};
  if (c.mc.prior_length_scale) j["mc"]["prior_length_scale"] = *c.mc.prior_length_scale;
  j["mu"] = c.mu;
  j["mu_grid"] = c.mu_grid;
  j["policies"] = json::array();
  for (Policy p : c.policies) j["policies"].push_back(to_string(p));
  j["separate_baseline"] = c.separate_baseline;
  j["desk"] = json{{"seed", c.desk.seed},
                   {"n_train_utterances", c.desk.n_train_utterances},
                   {"n_val_utterances", c.desk.n_val_utterances},
                   {"n_test_utterances", c.desk.n_test_utterances},
                   {"min_duration_s", c.desk.min_duration_s},
                   {"max_duration_s", c.desk.max_duration_s},
                   {"train_snrs", c.desk.train_snrs},
                   {"eval_snrs", c.desk.eval_snrs},
                   {"all_train_snrs", c.desk.all_train_snrs}};
  return j.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (j.contains("corpus_dir")) c.corpus_dir = j.at("corpus_dir").get<std::string>();
    if (j.contains("models_dir")) c.models_dir = j.at("models_dir").get<std::string>();
    if (j.contains("reports_dir")) c.reports_dir = j.at("reports_dir").get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("train")) train_from(j.at("train"), c.train);
    if (j.contains("classifier")) {
      train_from(j.at("classifier"), c.classifier.train);
      c.classifier.frame_stride = j.at("classifier").value("frame_stride", c.classifier.frame_stride);
    }
    if (j.contains("mc")) {
      const auto& m = j.at("mc");
      c.mc.T = m.value("T", c.mc.T);
      c.mc.tau_inv = m.value("tau_inv", c.mc.tau_inv);
      if (m.contains("prior_length_scale") && !m.at("prior_length_scale").is_null()) {
        c.mc.prior_length_scale = m.at("prior_length_scale").get<double>();
      }
    }
    c.mu = j.value("mu", c.mu);
    c.mu_grid = j.value("mu_grid", c.mu_grid);
    if (j.contains("policies")) {
      c.policies.clear();
      for (const auto& p : j.at("policies")) c.policies.push_back(policy_from_string(p.get<std::string>()));
    }
    c.separate_baseline = j.value("separate_baseline", c.separate_baseline);
    if (j.contains("desk")) {
      const auto& d = j.at("desk");
      c.desk.seed = d.value("seed", c.desk.seed);
      c.desk.n_train_utterances = d.value("n_train_utterances", c.desk.n_train_utterances);
      c.desk.n_val_utterances = d.value("n_val_utterances", c.desk.n_val_utterances);
      c.desk.n_test_utterances = d.value("n_test_utterances", c.desk.n_test_utterances);
      c.desk.min_duration_s = d.value("min_duration_s", c.desk.min_duration_s);
      c.desk.max_duration_s = d.value("max_duration_s", c.desk.max_duration_s);
      c.desk.train_snrs = d.value("train_snrs", c.desk.train_snrs);
      c.desk.eval_snrs = d.value("eval_snrs", c.desk.eval_snrs);
      c.desk.all_train_snrs = d.value("all_train_snrs", c.desk.all_train_snrs);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidParams, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::InvalidParams, "config not found: " + path.string());
  return parse_config(read_file_text(path));
}

std::uint64_t model_seed(const ExperimentConfig& cfg, const std::string& name) {
  return derive_key(cfg.seed, {30, hash_name(name)});
}

// ----------------------------------------------------------------- synth

void cmd_synth(const ExperimentConfig& cfg, const corpus::DatasetManifest& manifest,
               const std::vector<std::string>& splits) {
  std::function<bool(const corpus::ManifestEntry&)> filter;
  if (!splits.empty()) {
    filter = [&](const corpus::ManifestEntry& e) {
      return std::find(splits.begin(), splits.end(), e.split) != splits.end();
    };
  }
  corpus::build_dataset(manifest, cfg.corpus_dir, filter, cfg.threads);
}

// ----------------------------------------------------------------- train

TrainScope scope_from_string(const std::string& s) {
  if (s == "single") return TrainScope::Single;
  if (s == "per-noise") return TrainScope::PerNoise;
  if (s == "classifier") return TrainScope::Classifier;
  fail(ErrorCode::InvalidParams, "unknown scope '" + s + "'");
}

namespace {

corpus::DatasetManifest corpus_manifest(const ExperimentConfig& cfg) {
  const fs::path p = cfg.corpus_dir / "manifest.json";
  if (!fs::exists(p)) fail(ErrorCode::MissingCorpus, "no corpus at " + cfg.corpus_dir.string());
  return corpus::load_manifest(p);
}

void write_loss_curve(const ExperimentConfig& cfg, const std::string& name, const nn::TrainReport& r) {
  CsvTable t({"epoch", "loss"});
  t.add_comment("initial_loss " + format_double(r.initial_loss) + " final_loss " + format_double(r.final_loss));
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) t.add_row({std::to_string(e), format_double(r.epoch_loss[e])});
  write_text_atomic(cfg.reports_dir / ("train_" + name + ".csv"), t.text());
}

std::vector<const corpus::ManifestEntry*> train_entries(const corpus::DatasetManifest& m,
                                                        const std::function<bool(const corpus::ManifestEntry&)>& keep) {
  std::vector<const corpus::ManifestEntry*> out;
  for (const auto* e : m.select("train")) {
    if (keep(*e)) out.push_back(e);
  }
  if (out.empty()) fail(ErrorCode::MissingCorpus, "no matching train entries in the corpus manifest");
  return out;
}

fs::path train_one_regressor(const ExperimentConfig& cfg, const std::vector<const corpus::ManifestEntry*>& entries,
                             const std::string& name, const std::string& label) {
  const nn::FramePairs pairs = corpus::load_pairs(cfg.corpus_dir, entries);
  nn::TrainConfig tc = cfg.train;
  tc.rng_seed = model_seed(cfg, name);
  nn::TrainedModel t = nn::train_regressor(pairs, tc);
  t.model.meta.noise_label = label;
  const fs::path path = cfg.models_dir / (name + ".mcen");
  nn::save_model(t.model, path);
  write_loss_curve(cfg, name, t.report);
  return path;
}

}  // namespace

std::vector<fs::path> cmd_train(const ExperimentConfig& cfg, TrainScope scope) {
  cfg.validate();
  const corpus::DatasetManifest m = corpus_manifest(cfg);
  std::vector<fs::path> written;
  switch (scope) {
    case TrainScope::Single: {
      const auto entries = train_entries(m, [](const corpus::ManifestEntry& e) { return e.single; });
      written.push_back(train_one_regressor(cfg, entries, "single", "all"));
      if (cfg.separate_baseline) written.push_back(train_one_regressor(cfg, entries, "single_conv", "all"));
      break;
    }
    case TrainScope::PerNoise: {
      std::vector<std::string> names;
      for (const auto& label : m.seen) names.push_back(label);
      if (cfg.separate_baseline) {
        for (const auto& label : m.seen) names.push_back("conv_" + label);
      }
      std::vector<fs::path> paths(names.size());
      parallel_for(names.size(), cfg.threads, [&](std::size_t i) {
        const std::string label = m.seen[i % m.seen.size()];
        const auto entries = train_entries(m, [&](const corpus::ManifestEntry& e) { return e.noise == label; });
        paths[i] = train_one_regressor(cfg, entries, names[i], label);
      });
      written = paths;
      selection::BankManifest bm;
      bm.labels = m.seen;
      for (std::size_t i = 0; i < m.seen.size(); ++i) {
        bm.models.push_back(selection::BankEntry{m.seen[i], m.seen[i] + ".mcen", cfg.train.keep_prob});
        if (cfg.separate_baseline) {
          bm.conv_models.push_back(selection::BankEntry{m.seen[i], "conv_" + m.seen[i] + ".mcen", cfg.train.keep_prob});
        }
      }
      bm.classifier_path = "classifier.mcen";
      const fs::path bank = cfg.models_dir / "bank.json";
      write_text_atomic(bank, selection::bank_manifest_json(bm));
      written.push_back(bank);
      break;
    }
    case TrainScope::Classifier: {
      std::map<std::string, int> index;
      for (std::size_t i = 0; i < m.seen.size(); ++i) index[m.seen[i]] = static_cast<int>(i);
      const auto entries = train_entries(m, [](const corpus::ManifestEntry&) { return true; });
      std::vector<Matrix> parts;
      std::vector<int> labels;
      Eigen::Index rows = 0;
      for (const auto* e : entries) {
        const nn::FramePairs p = corpus::load_pairs(cfg.corpus_dir, {e});
        const Eigen::Index n = (p.size() + cfg.classifier.frame_stride - 1) / cfg.classifier.frame_stride;
        Matrix sub(n, p.noisy.cols());
        for (Eigen::Index r = 0; r < n; ++r) sub.row(r) = p.noisy.row(r * cfg.classifier.frame_stride);
        labels.insert(labels.end(), static_cast<std::size_t>(n), index.at(e->noise));
        rows += n;
        parts.push_back(std::move(sub));
      }
      Matrix frames(rows, parts.front().cols());
      Eigen::Index r = 0;
      for (const auto& p : parts) {
        frames.middleRows(r, p.rows()) = p;
        r += p.rows();
      }
      nn::TrainConfig tc = cfg.classifier.train;
      tc.rng_seed = model_seed(cfg, "classifier");
      const nn::TrainedModel t = nn::train_classifier(frames, labels, m.seen, tc);
      const fs::path path = cfg.models_dir / "classifier.mcen";
      nn::save_model(t.model, path);
      write_loss_curve(cfg, "classifier", t.report);
      written.push_back(path);
      break;
    }
  }
  return written;
}

// --------------------------------------------------------------- enhance

LoadedModels load_models(const ExperimentConfig& cfg, const std::vector<Policy>& policies) {
  LoadedModels out;
  auto need = [&](auto pred) { return std::any_of(policies.begin(), policies.end(), pred); };
  if (need([](Policy p) { return !uses_bank(p); })) {
    const fs::path single = cfg.models_dir / "single.mcen";
    if (!fs::exists(single)) fail(ErrorCode::MissingModels, "missing model " + single.string());
    out.single = nn::load_model(single);
    const fs::path conv = cfg.models_dir / "single_conv.mcen";
    if (fs::exists(conv)) out.single_conv = nn::load_model(conv);
  }
  if (need(uses_bank)) out.bank = selection::load_bank(cfg.models_dir / "bank.json", true);
  if (out.single) mc::check_tau_inv(*out.single, cfg.mc);
  if (out.bank) {
    for (const auto& m : out.bank->models) mc::check_tau_inv(m, cfg.mc);
  }
  return out;
}

namespace {

const nn::MlpModel& single_model(const LoadedModels& m) {
  if (!m.single) fail(ErrorCode::MissingModels, "single model not loaded");
  return *m.single;
}

const selection::ModelBank& bank_of(const LoadedModels& m) {
  if (!m.bank) fail(ErrorCode::MissingModels, "model bank not loaded");
  return *m.bank;
}

selection::SelectionPolicy bank_policy(Policy p, const ExperimentConfig& cfg) {
  selection::SelectionPolicy sp;
  sp.mu = cfg.mu;
  sp.mc = cfg.mc;
  switch (p) {
    case Policy::ClassConv: sp.kind = selection::PolicyKind::ClassifierConv; break;
    case Policy::ClassMC: sp.kind = selection::PolicyKind::ClassifierMC; break;
    case Policy::VarMC: sp.kind = selection::PolicyKind::VarMC; break;
    default: sp.kind = selection::PolicyKind::MuMC; break;
  }
  return sp;
}

}  // namespace

EnhanceResult enhance(const LoadedModels& models, const dsp::Signal& noisy, Policy policy, const ExperimentConfig& cfg,
                      const dsp::FrameConfig& frame_cfg) {
  EnhanceResult out;
  if (uses_bank(policy)) {
    selection::MultiResult r = selection::enhance_multi(bank_of(models), noisy, bank_policy(policy, cfg), frame_cfg);
    out.signal = std::move(r.signal);
    out.decisions = std::move(r.decisions);
    out.spectra = std::move(r.spectra);
    return out;
  }
  const dsp::SpectralFrames x = dsp::stft(noisy, frame_cfg);
  if (policy == Policy::SingleConv) {
    out.spectra = mc::estimate_spectra_deterministic(models.single_conv ? *models.single_conv : single_model(models),
                                                     x.magnitude);
  } else {
    out.spectra = mc::estimate_spectra_mc(single_model(models), x.magnitude, cfg.mc).mean;
  }
  out.signal = dsp::istft_overlap_add(out.spectra, x.phase, frame_cfg);
  out.signal.sample_rate_hz = noisy.sample_rate_hz;
  return out;
}

void cmd_enhance(const ExperimentConfig& cfg, Policy policy, const fs::path& in, const fs::path& out) {
  const LoadedModels models = load_models(cfg, {policy});
  const dsp::Signal noisy = dsp::read_wav(in);
  const dsp::FrameConfig frame_cfg;
  const EnhanceResult r = enhance(models, noisy, policy, cfg, frame_cfg);
  if (uses_bank(policy)) {
    fs::path csv = out;
    csv.replace_extension(".decisions.csv");
    write_text_atomic(csv, selection::decisions_csv(r.decisions, models.bank->labels));
  }
  dsp::write_wav(out, r.signal);
}

// -------------------------------------------------------------- evaluate

namespace {

dsp::Signal truncated(const dsp::Signal& s, std::size_t n) {
  dsp::Signal out = s;
  out.samples.resize(std::min(n, s.size()));
  return out;
}

Matrix rows_by_choice(const std::vector<Matrix>& per_model, const std::vector<int>& choice) {
  Matrix out(per_model.front().rows(), per_model.front().cols());
  for (Eigen::Index f = 0; f < out.rows(); ++f) out.row(f) = per_model[static_cast<std::size_t>(choice[static_cast<std::size_t>(f)])].row(f);
  return out;
}

}  // namespace

FileScores score_file(const LoadedModels& models, const metrics::TestFile& file, const std::vector<Policy>& policies,
                      const ExperimentConfig& cfg, const dsp::FrameConfig& frame_cfg) {
  const dsp::SpectralFrames x = dsp::stft(file.noisy, frame_cfg);
  const Matrix clean_mag = dsp::stft(file.clean, frame_cfg).magnitude;
  if (clean_mag.rows() != x.n_frames()) fail(ErrorCode::LengthMismatch, "clean and noisy frame counts differ");
  const dsp::Signal clean = truncated(file.clean, dsp::ola_length(static_cast<std::size_t>(x.n_frames()), frame_cfg));

  std::optional<selection::BankPass> pass;
  const bool needs_pass = std::any_of(policies.begin(), policies.end(), [](Policy p) {
    return p == Policy::ClassMC || p == Policy::VarMC || p == Policy::MuMC;
  });
  if (needs_pass) pass = selection::compute_bank_pass(bank_of(models), x.magnitude, cfg.mc, true);

  FileScores out;
  for (Policy p : policies) {
    Matrix spectra;
    switch (p) {
      case Policy::SingleConv:
        spectra = mc::estimate_spectra_deterministic(models.single_conv ? *models.single_conv : single_model(models),
                                                     x.magnitude);
        break;
      case Policy::SingleMC:
        spectra = mc::estimate_spectra_mc(single_model(models), x.magnitude, cfg.mc).mean;
        break;
      case Policy::ClassConv: {
        const auto& bank = bank_of(models);
        std::vector<int> choice;
        if (pass) {
          choice = pass->classifier_choice;
        } else {
          const Matrix post = nn::forward_batch(bank.classifier, x.magnitude, nullptr);
          for (Eigen::Index f = 0; f < post.rows(); ++f) choice.push_back(nn::argmax_lowest(post.row(f)));
        }
        std::vector<Matrix> det;
        for (std::size_t i = 0; i < bank.size(); ++i) {
          det.push_back(nn::forward_batch(bank.conv_models.empty() ? bank.models[i] : bank.conv_models[i], x.magnitude,
                                          nullptr));
        }
        spectra = rows_by_choice(det, choice);
        break;
      }
      case Policy::ClassMC:
        spectra = selection::select_from_pass(*pass, std::numeric_limits<double>::infinity()).spectra;
        break;
      case Policy::VarMC: {
        std::vector<int> choice;
        for (Eigen::Index f = 0; f < pass->n_frames(); ++f) {
          choice.push_back(selection::argmin_lowest(pass->trace_vars.row(f).transpose()));
        }
        spectra = rows_by_choice(pass->means, choice);
        break;
      }
      case Policy::MuMC:
        spectra = selection::select_from_pass(*pass, cfg.mu).spectra;
        break;
    }
    out.sse.push_back(metrics::sse(clean_mag, spectra).total);
    out.ssnr.push_back(metrics::ssnr(clean, dsp::istft_overlap_add(spectra, x.phase, frame_cfg), frame_cfg));
  }
  if (pass) out.errors = metrics::selection_errors(*pass, clean_mag);
  return out;
}

std::vector<metrics::TestCondition> load_conditions(const ExperimentConfig& cfg, const corpus::DatasetManifest& manifest,
                                                    const std::string& split, const std::vector<std::string>& noises,
                                                    const std::vector<double>& snrs) {
  std::vector<metrics::TestCondition> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  for (const auto* e : manifest.select(split)) {
    if (!noises.empty() && std::find(noises.begin(), noises.end(), e->noise) == noises.end()) continue;
    if (!snrs.empty() && std::find(snrs.begin(), snrs.end(), e->snr_db) == snrs.end()) continue;
    const auto key = std::make_pair(e->noise, e->snr_db);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back(metrics::TestCondition{e->noise, e->snr_db, {}});
    }
    corpus::EntrySignals s = corpus::load_entry(cfg.corpus_dir, *e);
    out[it->second].files.push_back(metrics::TestFile{e->id, std::move(s.clean), std::move(s.noisy)});
  }
  return out;
}

std::vector<EvalRow> evaluate_conditions(const LoadedModels& models, const std::vector<metrics::TestCondition>& conditions,
                                         const std::vector<Policy>& policies, const ExperimentConfig& cfg,
                                         const dsp::FrameConfig& frame_cfg,
                                         std::vector<std::vector<metrics::SelectionErrors>>* errors) {
  std::vector<EvalRow> rows;
  if (errors) errors->clear();
  for (const auto& c : conditions) {
    if (c.files.empty()) fail(ErrorCode::EmptyDataset, "condition " + c.name() + " has no files");
    std::vector<FileScores> scores(c.files.size());
    for (std::size_t f = 0; f < c.files.size(); ++f) scores[f] = score_file(models, c.files[f], policies, cfg, frame_cfg);
    for (std::size_t p = 0; p < policies.size(); ++p) {
      EvalRow r{c.noise, c.snr_db, policies[p], 0.0, 0.0, c.files.size()};
      for (const auto& s : scores) {
        r.sse += s.sse[p];
        r.ssnr += s.ssnr[p];
      }
      r.sse /= static_cast<double>(c.files.size());
      r.ssnr /= static_cast<double>(c.files.size());
      rows.push_back(r);
    }
    if (errors) {
      auto& e = errors->emplace_back();
      for (auto& s : scores) {
        if (s.errors) e.push_back(std::move(*s.errors));
      }
    }
  }
  return rows;
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  CsvTable t({"condition", "snr_db", "policy", "sse", "ssnr"});
  t.add_comment("sse: mean over files of each file's total magnitude-spectrum squared error; ssnr: mean over files (dB)");
  for (const auto& r : rows) {
    t.add_row({r.noise, format_double(r.snr_db), to_string(r.policy), format_double(r.sse), format_double(r.ssnr)});
  }
  return t.text();
}

std::vector<EvalRow> cmd_evaluate(const ExperimentConfig& cfg, const std::vector<metrics::TestCondition>& conditions) {
  const LoadedModels models = load_models(cfg, cfg.policies);
  auto rows = evaluate_conditions(models, conditions, cfg.policies, cfg, dsp::FrameConfig{});
  write_text_atomic(cfg.reports_dir / "eval.csv", eval_csv(rows));
  return rows;
}

// ------------------------------------------------------------- correlate

CorrelationReport correlate(const selection::ModelBank& bank, const std::vector<metrics::TestCondition>& conditions,
                            const ExperimentConfig& cfg, const dsp::FrameConfig& frame_cfg) {
  CorrelationReport rep;
  for (const auto& c : conditions) {
    std::vector<metrics::SelectionErrors> files;
    for (const auto& f : c.files) files.push_back(metrics::cache_file(bank, f, cfg.mc, frame_cfg));
    for (std::size_t i = 0; i < bank.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      std::vector<double> se, tv;
      for (std::size_t k = 0; k < files.size(); ++k) {
        for (Eigen::Index f = 0; f < files[k].se.rows(); ++f) {
          se.push_back(files[k].se(f, col));
          tv.push_back(files[k].trace_vars(f, col));
          rep.scatter.push_back(ScatterPoint{bank.labels[i], c.snr_db, c.files[k].id, static_cast<std::size_t>(f),
                                             se.back(), tv.back()});
        }
      }
      const Vector a = Eigen::Map<const Vector>(se.data(), static_cast<Eigen::Index>(se.size()));
      const Vector b = Eigen::Map<const Vector>(tv.data(), static_cast<Eigen::Index>(tv.size()));
      rep.rows.push_back(CorrelationRow{bank.labels[i], c.noise, c.snr_db, metrics::variance_error_correlation(a, b),
                                        se.size()});
    }
  }
  return rep;
}

std::string correlation_csv(const std::vector<CorrelationRow>& rows) {
  CsvTable t({"model", "snr_db", "pearson_r", "n_frames"});
  std::vector<std::string> noises;
  for (const auto& r : rows) {
    if (std::find(noises.begin(), noises.end(), r.noise) == noises.end()) noises.push_back(r.noise);
  }
  std::string joined;
  for (const auto& n : noises) joined += (joined.empty() ? "" : " ") + n;
  t.add_comment("test noise: " + joined);
  for (const auto& r : rows) {
    t.add_row({r.model, format_double(r.snr_db), format_double(r.pearson_r), std::to_string(r.n_frames)});
  }
  return t.text();
}

std::string scatter_csv(const std::vector<ScatterPoint>& points) {
  CsvTable t({"model", "snr_db", "file", "frame_index", "se", "trace_var"});
  for (const auto& p : points) {
    t.add_row({p.model, format_double(p.snr_db), p.file, std::to_string(p.frame_index), format_double(p.se),
               format_double(p.trace_var)});
  }
  return t.text();
}

CorrelationReport cmd_correlate(const ExperimentConfig& cfg, const std::vector<metrics::TestCondition>& conditions) {
  const LoadedModels models = load_models(cfg, {Policy::VarMC});
  CorrelationReport rep = correlate(*models.bank, conditions, cfg, dsp::FrameConfig{});
  write_text_atomic(cfg.reports_dir / "correlation.csv", correlation_csv(rep.rows));
  write_text_atomic(cfg.reports_dir / "correlation_scatter.csv", scatter_csv(rep.scatter));
  return rep;
}

// ----------------------------------------------------------------- sweep

std::vector<metrics::SweepCell> cmd_sweep(const ExperimentConfig& cfg, const std::vector<metrics::TestCondition>& conditions,
                                          const std::vector<metrics::TestCondition>& validation, double* selected_mu) {
  const LoadedModels models = load_models(cfg, {Policy::MuMC});
  const dsp::FrameConfig frame_cfg;
  auto cache = [&](const std::vector<metrics::TestCondition>& conds, std::vector<std::string>& names) {
    std::vector<std::vector<metrics::SelectionErrors>> out;
    for (const auto& c : conds) {
      names.push_back(c.name());
      auto& files = out.emplace_back();
      for (const auto& f : c.files) files.push_back(metrics::cache_file(*models.bank, f, cfg.mc, frame_cfg));
    }
    return out;
  };
  std::vector<std::string> names;
  const auto cached = cache(conditions, names);
  const auto cells = metrics::threshold_sweep(cached, names, cfg.mu_grid);
  std::string json_text;
  if (!validation.empty()) {
    std::vector<std::string> vnames;
    const auto vcached = cache(validation, vnames);
    const double mu = metrics::select_mu(vcached, cfg.mu_grid);
    if (selected_mu) *selected_mu = mu;
    json j{{"selected_mu", mu}, {"mu_grid", cfg.mu_grid}, {"validation_conditions", vnames}};
    json_text = j.dump(2) + "\n";
  }
  write_text_atomic(cfg.reports_dir / "sweep.csv", metrics::sweep_csv(cells));
  if (!json_text.empty()) write_text_atomic(cfg.reports_dir / "mu_selection.json", json_text);
  return cells;
}

}  // namespace mcenhance::harness
