// tools/mcenhance.cpp
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

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mcenhance/corpus.hpp"
#include "mcenhance/error.hpp"
#include "mcenhance/fileutil.hpp"
#include "mcenhance/harness.hpp"
#include "mcenhance/parallel.hpp"

namespace {

using namespace mcenhance;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> reports_dir;
  std::optional<std::string> corpus_dir;
  std::optional<std::string> models_dir;
  std::optional<int> T;
  bool separate_baseline = false;
};

harness::ExperimentConfig make_config(const Globals& g) {
  harness::ExperimentConfig cfg = g.config.empty() ? harness::ExperimentConfig{} : harness::load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) {
    cfg.threads = *g.threads;
    cfg.mc.threads = *g.threads;
  }
  if (g.reports_dir) cfg.reports_dir = *g.reports_dir;
  if (g.corpus_dir) cfg.corpus_dir = *g.corpus_dir;
  if (g.models_dir) cfg.models_dir = *g.models_dir;
  if (g.T) cfg.mc.T = *g.T;
  if (g.separate_baseline) cfg.separate_baseline = true;
  cfg.mc.rng_seed = cfg.seed;
  cfg.validate();
  return cfg;
}

void print_rows(const std::vector<harness::EvalRow>& rows) {
  for (const auto& r : rows) {
    std::printf("%-14s %6.1f dB  %-12s sse %.6g  ssnr %.3f\n", r.noise.c_str(), r.snr_db, harness::to_string(r.policy).c_str(),
                r.sse, r.ssnr);
  }
}

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  CLI::App app{"Monte Carlo dropout speech enhancement"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "top-level seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--reports-dir", g.reports_dir, "report output directory");
  app.add_option("--corpus-dir", g.corpus_dir, "corpus directory");
  app.add_option("--models-dir", g.models_dir, "model directory");
  app.add_option("--T", g.T, "Monte Carlo passes per frame")->check(CLI::PositiveNumber);
  app.add_flag("--separate-baseline", g.separate_baseline, "train distinct conventional-dropout baselines");

  auto* synth = app.add_subcommand("synth", "build the synthetic corpus");
  std::string manifest_path;
  std::string default_out;
  std::vector<std::string> splits;
  synth->add_option("--manifest", manifest_path, "dataset manifest (default: desk corpus)");
  synth->add_option("--write-default-manifest", default_out, "write the desk manifest and exit");
  synth->add_option("--splits", splits, "only build these splits")->delimiter(',');

  auto* train = app.add_subcommand("train", "train models");
  std::string scope;
  train->add_option("--scope", scope, "single | per-noise | classifier")
      ->required()
      ->check(CLI::IsMember({"single", "per-noise", "classifier"}));

  auto* enh = app.add_subcommand("enhance", "enhance one WAV file");
  std::string policy;
  std::optional<double> mu;
  std::string in_wav, out_wav;
  enh->add_option("--policy", policy, "enhancement policy")
      ->required()
      ->check(CLI::IsMember({"single-conv", "single-mc", "class-conv", "class-mc", "var-mc", "mu-mc"}));
  enh->add_option("--mu", mu, "mu-MC threshold")->check(CLI::NonNegativeNumber);
  enh->add_option("input", in_wav, "noisy WAV")->required();
  enh->add_option("output", out_wav, "enhanced WAV")->required();

  std::vector<std::string> noises;
  std::vector<double> snrs;
  std::string split = "test";
  auto add_filters = [&](CLI::App* sub) {
    sub->add_option("--noises", noises, "noise labels")->delimiter(',');
    sub->add_option("--snrs", snrs, "SNRs in dB")->delimiter(',');
    sub->add_option("--split", split, "manifest split");
  };
  auto* eval = app.add_subcommand("evaluate", "SSE / SSNR of every policy per condition");
  add_filters(eval);
  std::vector<std::string> policies;
  eval->add_option("--policies", policies, "policies to evaluate")->delimiter(',');
  auto* corr = app.add_subcommand("correlate", "variance / squared-error correlation");
  add_filters(corr);
  auto* sweep = app.add_subcommand("sweep", "mu threshold sweep");
  add_filters(sweep);
  bool validate_mu = false;
  sweep->add_flag("--select-mu", validate_mu, "pick mu on the validation split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    harness::ExperimentConfig cfg = make_config(g);
    if (mu) cfg.mu = *mu;

    if (*synth) {
      if (!default_out.empty()) {
        write_text_atomic(default_out, corpus::manifest_json(corpus::make_desk_manifest(cfg.desk)));
        return 0;
      }
      const corpus::DatasetManifest m =
          manifest_path.empty() ? corpus::make_desk_manifest(cfg.desk) : corpus::load_manifest(manifest_path);
      harness::cmd_synth(cfg, m, splits);
      std::printf("built %zu entries into %s\n", m.entries.size(), cfg.corpus_dir.string().c_str());
    } else if (*train) {
      for (const auto& p : harness::cmd_train(cfg, harness::scope_from_string(scope))) {
        std::printf("wrote %s\n", p.string().c_str());
      }
    } else if (*enh) {
      harness::cmd_enhance(cfg, harness::policy_from_string(policy), in_wav, out_wav);
    } else {
      const auto manifest = corpus::load_manifest(cfg.corpus_dir / "manifest.json");
      const auto conds = harness::load_conditions(cfg, manifest, split, noises, snrs);
      if (conds.empty()) fail(ErrorCode::MissingCorpus, "no entries match the requested conditions");
      if (*eval) {
        if (!policies.empty()) {
          cfg.policies.clear();
          for (const auto& p : policies) cfg.policies.push_back(harness::policy_from_string(p));
        }
        print_rows(harness::cmd_evaluate(cfg, conds));
      } else if (*corr) {
        for (const auto& r : harness::cmd_correlate(cfg, conds).rows) {
          std::printf("%-14s %-14s %6.1f dB  r %.4f  (%zu frames)\n", r.model.c_str(), r.noise.c_str(), r.snr_db,
                      r.pearson_r, r.n_frames);
        }
      } else if (*sweep) {
        std::vector<metrics::TestCondition> val;
        if (validate_mu) val = harness::load_conditions(cfg, manifest, "val");
        double chosen = cfg.mu;
        for (const auto& c : harness::cmd_sweep(cfg, conds, val, &chosen)) {
          std::printf("mu %-8g %-18s sse %.6g  variance-path %.3f\n", c.mu, c.condition.c_str(), c.sse,
                      c.variance_fraction);
        }
        if (validate_mu) std::printf("selected mu %g\n", chosen);
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return category_of(e.code()) == ErrorCategory::Model ? kExitModel : kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
