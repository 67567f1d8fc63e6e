// tests/unit/test_corpus.cpp
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
#include <complex>
#include <set>
#include <vector>

#include "doctest.h"
#include "mcenhance/corpus.hpp"
#include "mcenhance/fft.hpp"
#include "mcenhance/fileutil.hpp"
#include "mcenhance/wav.hpp"
#include "support/test_util.hpp"

using namespace mcenhance;
using namespace mcenhance::corpus;

namespace {

double rms(const dsp::Signal& s) { return std::sqrt(dsp::mean_power(s.samples)); }

corpus::DeskOptions small_desk() {
  DeskOptions o;
  o.n_train_utterances = 15;
  o.n_val_utterances = 2;
  o.n_test_utterances = 2;
  return o;
}

std::string slurp(const std::filesystem::path& p) { return read_file_text(p); }

}  // namespace

TEST_CASE("pseudo speech") {
  const dsp::Signal a = synth_speech(3.0, 42);
  const dsp::Signal b = synth_speech(3.0, 42);
  CHECK(a.samples == b.samples);
  CHECK(a.size() == 48000);
  CHECK(synth_speech(3.0, 43).samples != a.samples);

  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const double dur = 2.0 + 0.25 * static_cast<double>(seed % 4);
    const dsp::Signal s = synth_speech(dur, seed);
    CHECK(std::abs(rms(s) - 0.1) < 0.001);
    for (double v : s.samples) CHECK(std::abs(v) <= 1.0);

    // 10 ms energy profile; silent = more than 40 dB below the overall level.
    const std::size_t hop = 160;
    const double thresh = 1e-4 * dsp::mean_power(s.samples);
    int gaps = 0, run = 0;
    for (std::size_t i = 0; i + hop <= s.size(); i += hop) {
      const double p = dsp::mean_power(std::span<const double>(s.samples.data() + i, hop));
      if (p < thresh) {
        ++run;
      } else {
        if (run >= 5) ++gaps;
        run = 0;
      }
    }
    if (run >= 5) ++gaps;
    CHECK(gaps >= static_cast<int>(std::floor(dur)));
  }
}

TEST_CASE("noise families") {
  NoiseSpec white;
  white.seed = 5;
  const dsp::Signal w = synth_noise(white, 10.0);
  CHECK(std::abs(rms(w) - 0.1) < 1e-9);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    den += w.samples[i] * w.samples[i];
    if (i > 0) num += w.samples[i] * w.samples[i - 1];
  }
  CHECK(std::abs(num / den) < 0.05);
  CHECK(synth_noise(white, 10.0).samples == w.samples);

  NoiseSpec pink;
  pink.family = NoiseFamily::Pink;
  pink.seed = 6;
  const dsp::Signal p = synth_noise(pink, 10.0);
  CHECK(std::abs(rms(p) - 0.1) < 1e-9);
  // Averaged periodogram, least-squares slope of dB against octaves.
  dsp::RealFft fft(1024);
  std::vector<double> psd(513, 0.0);
  std::vector<std::complex<double>> spec(513);
  const auto win = dsp::hamming_window(1024);
  std::vector<double> frame(1024);
  for (std::size_t start = 0; start + 1024 <= p.size(); start += 512) {
    for (std::size_t n = 0; n < 1024; ++n) frame[n] = win[n] * p.samples[start + n];
    fft.forward(frame, spec);
    for (std::size_t k = 0; k < 513; ++k) psd[k] += std::norm(spec[k]);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t k = 1; k < 513; ++k) {
    const double f = 16000.0 * static_cast<double>(k) / 1024.0;
    if (f < 100.0 || f > 4000.0) continue;
    const double x = std::log2(f), y = 10.0 * std::log10(psd[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope > -3.5);
  CHECK(slope < -2.5);

  const auto desk = make_desk_manifest();
  for (const auto& [label, s] : desk.noises) {
    const dsp::Signal a = synth_noise(s, 1.0);
    CAPTURE(label);
    CHECK(std::abs(rms(a) - 0.1) < 1e-9);
    CHECK(synth_noise(s, 1.0).samples == a.samples);
  }

  NoiseSpec bad;
  bad.family = NoiseFamily::LowpassRumble;
  bad.cutoff_hz = 9000.0;
  CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidParams);
  CHECK_ERROR_CODE(synth_noise(bad, 1.0), ErrorCode::InvalidParams);
  NoiseSpec tones;
  tones.family = NoiseFamily::AmplitudeModulatedTones;
  tones.tones_hz = {300.0, 8500.0};
  CHECK_ERROR_CODE(tones.validate(), ErrorCode::InvalidParams);
  tones.tones_hz = {};
  CHECK_ERROR_CODE(tones.validate(), ErrorCode::InvalidParams);
  NoiseSpec mix;
  mix.family = NoiseFamily::Mixture;
  CHECK_ERROR_CODE(mix.validate(), ErrorCode::InvalidParams);
  CHECK(noise_family_from_string(to_string(NoiseFamily::SpeechShapedBabbleProxy)) ==
        NoiseFamily::SpeechShapedBabbleProxy);
}

TEST_CASE("desk manifest structure and validation") {
  const DatasetManifest m = make_desk_manifest();
  m.validate();
  CHECK(m.seen.size() == 5);
  CHECK(m.unseen.size() == 3);
  std::set<std::string> train_clean, seen(m.seen.begin(), m.seen.end());
  std::size_t single = 0;
  for (const auto* e : m.select("train")) {
    train_clean.insert(e->clean_id);
    CHECK(seen.count(e->noise) == 1);
    CHECK((e->snr_db == 0.0 || e->snr_db == 5.0 || e->snr_db == 10.0));
    single += e->single ? 1 : 0;
  }
  CHECK(m.select("train").size() == 100 * 5 * 3);
  CHECK(single == 100);
  CHECK(m.select("test").size() == 20 * 8 * 5);
  for (const char* split : {"val", "test"}) {
    for (const auto* e : m.select(split)) CHECK(train_clean.count(e->clean_id) == 0);
  }
  for (const auto& [id, u] : m.utterances) {
    CHECK(u.duration_s >= 2.0);
    CHECK(u.duration_s <= 3.0);
  }

  const DatasetManifest round = parse_manifest(manifest_json(m));
  CHECK(manifest_json(round) == manifest_json(m));

  auto rejects = [&](auto mutate) {
    DatasetManifest bad = m;
    mutate(bad);
    CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidManifest);
  };
  rejects([](DatasetManifest& d) { d.entries.front().snr_db = 3.0; });
  rejects([](DatasetManifest& d) {
    for (auto& e : d.entries)
      if (e.split == "train") { e.snr_db = -5.0; break; }
  });
  rejects([](DatasetManifest& d) {
    for (auto& e : d.entries)
      if (e.split == "train") { e.noise = "white"; break; }
  });
  rejects([](DatasetManifest& d) {
    for (auto& e : d.entries)
      if (e.split == "test") { e.clean_id = "tr000"; break; }
  });
  rejects([](DatasetManifest& d) { d.entries.push_back(d.entries.front()); });
  rejects([](DatasetManifest& d) { d.entries.front().noise = "nope"; });
  rejects([](DatasetManifest& d) { d.entries.front().clean_id = "nope"; });
  CHECK_ERROR_CODE(parse_manifest("{\"version\": 1}"), ErrorCode::InvalidManifest);
  CHECK_ERROR_CODE(parse_manifest("not json"), ErrorCode::InvalidManifest);
}

TEST_CASE("pair cache format") {
  nn::FramePairs p{mctest::random_matrix(4, 6, 1, 0.0, 1.0), mctest::random_matrix(4, 6, 2, 0.0, 1.0)};
  const auto bytes = serialize_pairs(p);
  CHECK(bytes.size() == 4 + 4 + 8 + 4 + 2 * 4 * 6 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MCFR");
  const nn::FramePairs back = deserialize_pairs(bytes);
  CHECK(back.noisy == p.noisy.cast<float>().cast<double>());
  CHECK(back.clean == p.clean.cast<float>().cast<double>());
  auto cut = bytes;
  cut.pop_back();
  CHECK_ERROR_CODE(deserialize_pairs(cut), ErrorCode::CorruptFile);
  auto magic = bytes;
  magic[1] = 'X';
  CHECK_ERROR_CODE(deserialize_pairs(magic), ErrorCode::CorruptFile);
  auto ver = bytes;
  ver[4] = 7;
  CHECK_ERROR_CODE(deserialize_pairs(ver), ErrorCode::VersionMismatch);
}

TEST_CASE("build dataset") {
  const DatasetManifest m = make_desk_manifest(small_desk());
  m.validate();
  std::set<std::string> keep;
  for (const auto* e : m.select("train")) {
    if (keep.size() < 4 && e->clean_id <= "tr001") keep.insert(e->id);
  }
  for (const auto* e : m.select("test")) {
    if (e->snr_db == -10.0 && keep.size() < 7) keep.insert(e->id);
  }
  auto filter = [&](const ManifestEntry& e) { return keep.count(e.id) > 0; };
  const auto root_a = mctest::scratch_dir("corpus_a");
  const auto root_b = mctest::scratch_dir("corpus_b");
  build_dataset(m, root_a, filter, 1);
  build_dataset(m, root_b, filter, 3);
  CHECK(slurp(root_a / "manifest.json") == slurp(root_b / "manifest.json"));

  std::size_t expected_frames = 0;
  std::vector<const ManifestEntry*> built;
  for (const auto& e : m.entries) {
    if (!filter(e)) continue;
    built.push_back(&e);
    const auto da = entry_dir(root_a, e), db = entry_dir(root_b, e);
    for (const char* f : {"clean.wav", "noisy.wav", "pairs.mcfr"}) {
      CHECK(read_file_bytes(da / f) == read_file_bytes(db / f));
    }
    const EntrySignals sig = load_entry(root_a, e);
    CHECK(sig.clean.size() == sig.noisy.size());
    CHECK(std::abs(dsp::measured_snr_db(sig.clean, sig.noisy) - e.snr_db) < 1e-3);
    const EntrySignals direct = synthesize_entry(m, e);
    CHECK(direct.noisy.samples == sig.noisy.samples);
    CHECK(direct.clean.samples == sig.clean.samples);
    expected_frames += dsp::frame_count(sig.clean.size(), m.frame_cfg);
  }
  const nn::FramePairs pairs = load_pairs(root_a, built);
  CHECK(static_cast<std::size_t>(pairs.size()) == expected_frames);
  CHECK(pairs.noisy.cols() == 257);

  // Rebuilding over an existing tree leaves it byte-identical.
  build_dataset(m, root_a, filter, 2);
  for (const auto* e : built) {
    CHECK(read_file_bytes(entry_dir(root_a, *e) / "noisy.wav") == read_file_bytes(entry_dir(root_b, *e) / "noisy.wav"));
  }

  const ManifestEntry* missing = nullptr;
  for (const auto& e : m.entries)
    if (!filter(e)) { missing = &e; break; }
  CHECK_ERROR_CODE(load_pairs(root_a, {missing}), ErrorCode::MissingCorpus);
  CHECK_ERROR_CODE(load_entry(root_a, *missing), ErrorCode::MissingCorpus);
}

TEST_CASE("mixing exactness across the snr grid") {
  const DatasetManifest m = make_desk_manifest(small_desk());
  for (const auto* e : m.select("test")) {
    if (e->clean_id != m.select("test").front()->clean_id) continue;
    const EntrySignals s = synthesize_entry(m, *e);
    CHECK(std::abs(dsp::measured_snr_db(s.clean, s.noisy) - e->snr_db) < 1e-3);
    for (double v : s.noisy.samples) CHECK(std::abs(v) <= 1.0);
  }
}
