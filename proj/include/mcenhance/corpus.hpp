// include/mcenhance/corpus.hpp
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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mcenhance/dsp.hpp"
#include "mcenhance/train.hpp"

namespace mcenhance::corpus {

/// Pseudo-speech: voiced syllables from a pitch-modulated harmonic source
/// under moving formant resonances, separated by silent gaps, with occasional
/// fricative onsets. RMS 0.1, a pure function of (duration, seed).
dsp::Signal synth_speech(double duration_s, std::uint64_t seed, int sample_rate_hz = 16000);

enum class NoiseFamily { White, Pink, LowpassRumble, AmplitudeModulatedTones, SpeechShapedBabbleProxy, Mixture };

std::string to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(const std::string& s);

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::White;
  double cutoff_hz = 250.0;          // LowpassRumble
  std::vector<double> tones_hz;      // AmplitudeModulatedTones
  double rate_hz = 2.0;              // modulation rate
  double depth = 0.5;                // modulation depth in [0, 1]
  double bandwidth_hz = 0.0;         // 0 = pure tones, else noise bands of this width
  double floor = 0.05;               // relative level of an added pink floor
  int n_talkers = 6;                 // SpeechShapedBabbleProxy
  std::vector<NoiseSpec> components; // Mixture
  std::vector<double> weights;       // Mixture, one per component
  std::uint64_t seed = 0;

  /// InvalidParams for out-of-range parameters (cutoffs and tones must lie
  /// below Nyquist).
  void validate(int sample_rate_hz = 16000) const;
};

/// Family generator normalized to RMS 0.1; deterministic per spec.seed.
dsp::Signal synth_noise(const NoiseSpec& spec, double duration_s, int sample_rate_hz = 16000);

struct Utterance {
  std::uint64_t seed = 0;
  double duration_s = 2.0;
};

struct ManifestEntry {
  std::string id;
  std::string clean_id;
  std::string noise;
  double snr_db = 0.0;
  std::string split;       // train | val | test
  std::uint64_t seed = 0;  // noise realization
  bool single = false;     // member of the single-model training partition
};

/// Declarative corpus description. `noises` maps labels to specs; `seen`
/// lists the bank labels in order, `unseen` the held-out families.
struct DatasetManifest {
  std::uint64_t seed = 0;
  dsp::FrameConfig frame_cfg;
  std::map<std::string, NoiseSpec> noises;
  std::vector<std::string> seen;
  std::vector<std::string> unseen;
  std::map<std::string, Utterance> utterances;
  std::vector<ManifestEntry> entries;

  /// InvalidManifest unless: ids unique per split; every reference resolves;
  /// SNRs lie on the {-10,-5,0,5,10} grid and train uses {0,5,10}; no
  /// unseen label appears in train; val and test clean ids never occur in train.
  void validate() const;

  std::vector<const ManifestEntry*> select(const std::string& split) const;
};

std::string manifest_json(const DatasetManifest& manifest);
DatasetManifest parse_manifest(const std::string& text);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct DeskOptions {
  std::uint64_t seed = 20190501;
  int n_train_utterances = 100;
  int n_val_utterances = 6;
  int n_test_utterances = 20;
  double min_duration_s = 2.0;
  double max_duration_s = 3.0;
  std::vector<double> train_snrs{0.0, 5.0, 10.0};
  std::vector<double> eval_snrs{-10.0, -5.0, 0.0, 5.0, 10.0};
  /// If true every train utterance is mixed at every train SNR per noise;
  /// otherwise the utterances are split into one group per SNR.
  bool all_train_snrs = true;
};

/// Default stand-in corpus: seen {pink, rumble, tones-low, babble,
/// tones-narrow}, unseen {white, tones-fast, mixed}. The single-model
/// partition assigns train utterance u to noise (u mod 15) / 3 and SNR
/// (u mod 15) mod 3.
DatasetManifest make_desk_manifest(const DeskOptions& opts = {});

/// Synthesized clean and noisy signals of an entry, exactly as written
/// to disk (16-bit quantized, with a common gain if the mixture would clip).
struct EntrySignals {
  dsp::Signal clean;
  dsp::Signal noisy;
};
EntrySignals synthesize_entry(const DatasetManifest& manifest, const ManifestEntry& entry);

/// Frame pair cache layout (little-endian):
///   "MCFR" | u32 version | u64 n_frames | u32 n_bins |
///   float32 noisy [n_frames x n_bins] | float32 clean [n_frames x n_bins]
inline constexpr std::uint32_t kPairCacheVersion = 1;
std::vector<unsigned char> serialize_pairs(const nn::FramePairs& pairs);
nn::FramePairs deserialize_pairs(const std::vector<unsigned char>& bytes);
nn::FramePairs frame_pairs(const EntrySignals& signals, const dsp::FrameConfig& cfg);

std::filesystem::path entry_dir(const std::filesystem::path& root, const ManifestEntry& entry);

/// Writes <root>/<split>/<id>/{clean.wav, noisy.wav, pairs.mcfr} for every
/// entry accepted by `filter` (all when empty) plus <root>/manifest.json.
/// Output is a pure function of the manifest.
void build_dataset(const DatasetManifest& manifest, const std::filesystem::path& root,
                   const std::function<bool(const ManifestEntry&)>& filter = {}, int threads = 1);

/// Concatenated cached pairs of the given entries. MissingCorpus when an
/// entry has not been built.
nn::FramePairs load_pairs(const std::filesystem::path& root, const std::vector<const ManifestEntry*>& entries);

/// Reads an entry's WAV files back.
EntrySignals load_entry(const std::filesystem::path& root, const ManifestEntry& entry);

}  // namespace mcenhance::corpus
