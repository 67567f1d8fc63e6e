// src/corpus.cpp
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

#include "mcenhance/corpus.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>
#include <set>

#include "json.hpp"

#include "mcenhance/error.hpp"
#include "mcenhance/fft.hpp"
#include "mcenhance/fileutil.hpp"
#include "mcenhance/parallel.hpp"
#include "mcenhance/rng.hpp"
#include "mcenhance/wav.hpp"

namespace mcenhance::corpus {

namespace {

constexpr double kTargetRms = 0.1;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t n_samples_for(double duration_s, int fs) {
  return static_cast<std::size_t>(std::llround(duration_s * fs));
}

void normalize_rms(std::vector<double>& x, double target) {
  const double p = dsp::mean_power(x);
  if (!(p > 0.0)) fail(ErrorCode::InvalidParams, "generator produced a silent signal");
  const double g = target / std::sqrt(p);
  for (double& v : x) v *= g;
}

/// Direct-form I biquad.
class Biquad {
 public:
  static Biquad lowpass(double fc, double q, int fs) { return make(fc, q, fs, false); }
  static Biquad highpass(double fc, double q, int fs) { return make(fc, q, fs, true); }

  void process(std::vector<double>& x) {
    for (double& v : x) {
      const double y = b0_ * v + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
      x2_ = x1_;
      x1_ = v;
      y2_ = y1_;
      y1_ = y;
      v = y;
    }
  }

 private:
  static Biquad make(double fc, double q, int fs, bool high) {
    const double w0 = kTwoPi * fc / fs;
    const double c = std::cos(w0);
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f;
    if (high) {
      f.b0_ = (1.0 + c) / 2.0 / a0;
      f.b1_ = -(1.0 + c) / a0;
    } else {
      f.b0_ = (1.0 - c) / 2.0 / a0;
      f.b1_ = (1.0 - c) / a0;
    }
    f.b2_ = f.b0_;
    f.a1_ = -2.0 * c / a0;
    f.a2_ = (1.0 - alpha) / a0;
    return f;
  }

  double b0_ = 1, b1_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

std::vector<double> white(std::size_t n, RngStream& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

std::vector<double> filtered_white(std::size_t n, RngStream& rng, double fc, int fs, bool high, int order2) {
  std::vector<double> x = white(n, rng);
  for (int s = 0; s < order2; ++s) {
    Biquad f = high ? Biquad::highpass(fc, std::numbers::sqrt2 / 2.0, fs) : Biquad::lowpass(fc, std::numbers::sqrt2 / 2.0, fs);
    f.process(x);
  }
  return x;
}

std::vector<double> pink(std::size_t n, RngStream& rng, int fs) {
  std::vector<double> x = white(n, rng);
  if (n < 2) return x;
  dsp::RealFft fft(static_cast<int>(n));
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.n_bins()));
  fft.forward(x, spec);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    spec[k] /= std::sqrt(f);
  }
  fft.inverse(spec, x);
  return x;
}

// ---------------------------------------------------------------- speech

struct Vowel {
  double f1, f2, f3;
};

constexpr std::array<Vowel, 8> kVowels{{{730, 1090, 2440},
                                        {270, 2290, 3010},
                                        {300, 870, 2240},
                                        {530, 1840, 2480},
                                        {570, 840, 2410},
                                        {660, 1720, 2410},
                                        {490, 1350, 1690},
                                        {440, 1020, 2240}}};

double resonance(double f, double fc, double bw) {
  const double d = fc * fc - f * f;
  return fc * fc / std::sqrt(d * d + bw * bw * f * f);
}

struct Syllable {
  std::size_t start = 0;
  std::size_t len = 0;
  Vowel from{}, to{};
  double f0_start = 0, f0_end = 0;
  double peak = 1.0;
  std::size_t fricative_len = 0;
};

}  // namespace

dsp::Signal synth_speech(double duration_s, std::uint64_t seed, int sample_rate_hz) {
  if (!(duration_s > 0.0)) fail(ErrorCode::InvalidParams, "speech duration must be positive");
  const int fs = sample_rate_hz;
  const std::size_t n = n_samples_for(duration_s, fs);
  RngStream rng(derive_key(seed, {1}));
  const double f0_base = rng.uniform(95.0, 230.0);
  const double tract = rng.uniform(0.9, 1.15);

  auto ms = [&](double v) { return static_cast<std::size_t>(v * fs / 1000.0); };
  std::vector<Syllable> syl;
  std::size_t pos = ms(rng.uniform(60.0, 150.0));
  while (pos + ms(120) <= n) {
    Syllable s;
    s.start = pos;
    s.len = std::min(ms(rng.uniform(120.0, 350.0)), n - pos);
    s.from = kVowels[rng.below(kVowels.size())];
    s.to = kVowels[rng.below(kVowels.size())];
    const double level = f0_base * (1.0 + rng.uniform(-0.15, 0.15));
    s.f0_start = level;
    s.f0_end = level * (1.0 + rng.uniform(-0.25, 0.2));
    s.peak = rng.uniform(0.4, 1.0);
    if (rng.uniform() < 0.35) s.fricative_len = ms(rng.uniform(30.0, 80.0));
    syl.push_back(s);
    pos = s.start + s.len + ms(rng.uniform(60.0, 150.0));
  }

  std::vector<double> out(n, 0.0);
  const double nyq_limit = std::min(7600.0, 0.475 * fs);
  constexpr std::size_t kBlock = 32;
  for (const Syllable& s : syl) {
    const double f0_min = std::min(s.f0_start, s.f0_end) * 0.98;
    const int n_h = std::max(1, static_cast<int>(nyq_limit / f0_min));
    std::vector<std::complex<double>> rot(static_cast<std::size_t>(n_h));
    for (auto& r : rot) r = std::polar(1.0, rng.uniform(0.0, kTwoPi));

    auto f0_at = [&](double tau) { return s.f0_start + (s.f0_end - s.f0_start) * tau; };
    auto amps_at = [&](double tau, std::vector<double>& a) {
      const double f0 = f0_at(tau);
      const double F1 = tract * (s.from.f1 + (s.to.f1 - s.from.f1) * tau);
      const double F2 = tract * (s.from.f2 + (s.to.f2 - s.from.f2) * tau);
      const double F3 = tract * (s.from.f3 + (s.to.f3 - s.from.f3) * tau);
      for (int k = 0; k < n_h; ++k) {
        const double f = (k + 1) * f0;
        a[static_cast<std::size_t>(k)] =
            f >= nyq_limit ? 0.0 : resonance(f, F1, 80.0) * resonance(f, F2, 110.0) * resonance(f, F3, 160.0) / (k + 1);
      }
    };

    const std::size_t attack = ms(25);
    const std::size_t release = ms(40);
    auto envelope = [&](std::size_t i) {
      double e = 1.0;
      if (i < attack) e = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / attack);
      if (i + release > s.len) {
        const double r = static_cast<double>(s.len - i) / release;
        e = std::min(e, 0.5 - 0.5 * std::cos(std::numbers::pi * r));
      }
      return e;
    };

    std::vector<double> a0(static_cast<std::size_t>(n_h)), a1(static_cast<std::size_t>(n_h));
    amps_at(0.0, a0);
    double phase = 0.0;
    std::vector<double> seg(s.len, 0.0);
    for (std::size_t b0 = 0; b0 < s.len; b0 += kBlock) {
      const std::size_t b1 = std::min(b0 + kBlock, s.len);
      amps_at(static_cast<double>(b1) / s.len, a1);
      for (std::size_t i = b0; i < b1; ++i) {
        const double tau = static_cast<double>(i) / s.len;
        const double w = static_cast<double>(i - b0) / static_cast<double>(b1 - b0);
        phase += kTwoPi * f0_at(tau) / fs;
        if (phase > kTwoPi) phase -= kTwoPi;
        const std::complex<double> step = std::polar(1.0, phase);
        std::complex<double> z = step;
        double v = 0.0;
        for (int k = 0; k < n_h; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          v += ((1.0 - w) * a0[kk] + w * a1[kk]) * (z * rot[kk]).imag();
          z *= step;
        }
        seg[i] = v * envelope(i);
      }
      a0.swap(a1);
    }
    double seg_peak = 0.0;
    for (double v : seg) seg_peak = std::max(seg_peak, std::abs(v));
    if (seg_peak > 0.0) {
      for (double& v : seg) v *= s.peak / seg_peak;
    }
    if (s.fricative_len > 0) {
      const std::size_t len = std::min(s.fricative_len, s.len);
      std::vector<double> fr = filtered_white(len, rng, 3000.0, fs, true, 2);
      double fp = 0.0;
      for (double v : fr) fp = std::max(fp, std::abs(v));
      for (std::size_t i = 0; i < len; ++i) {
        const double h = 0.5 - 0.5 * std::cos(kTwoPi * (i + 0.5) / len);
        seg[i] += 0.3 * s.peak * h * fr[i] / fp;
      }
    }
    for (std::size_t i = 0; i < s.len; ++i) out[s.start + i] += seg[i];
  }
  normalize_rms(out, kTargetRms);
  dsp::Signal sig;
  sig.samples = std::move(out);
  sig.sample_rate_hz = fs;
  return sig;
}

// ----------------------------------------------------------------- noise

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::White: return "white";
    case NoiseFamily::Pink: return "pink";
    case NoiseFamily::LowpassRumble: return "lowpass_rumble";
    case NoiseFamily::AmplitudeModulatedTones: return "am_tones";
    case NoiseFamily::SpeechShapedBabbleProxy: return "babble_proxy";
    case NoiseFamily::Mixture: return "mixture";
  }
  return "white";
}

NoiseFamily noise_family_from_string(const std::string& s) {
  for (auto f : {NoiseFamily::White, NoiseFamily::Pink, NoiseFamily::LowpassRumble, NoiseFamily::AmplitudeModulatedTones,
                 NoiseFamily::SpeechShapedBabbleProxy, NoiseFamily::Mixture}) {
    if (to_string(f) == s) return f;
  }
  fail(ErrorCode::InvalidParams, "unknown noise family '" + s + "'");
}

void NoiseSpec::validate(int fs) const {
  const double nyq = fs / 2.0;
  auto bad = [](const std::string& why) { fail(ErrorCode::InvalidParams, "noise spec: " + why); };
  switch (family) {
    case NoiseFamily::White:
    case NoiseFamily::Pink:
      break;
    case NoiseFamily::LowpassRumble:
      if (!(cutoff_hz > 0.0 && cutoff_hz < nyq)) bad("cutoff must lie in (0, Nyquist)");
      break;
    case NoiseFamily::AmplitudeModulatedTones:
      if (tones_hz.empty()) bad("tone set is empty");
      for (double f : tones_hz) {
        if (!(f > 0.0 && f + bandwidth_hz / 2.0 < nyq)) bad("tone outside (0, Nyquist)");
      }
      if (!(rate_hz >= 0.0 && rate_hz < nyq)) bad("modulation rate out of range");
      if (!(depth >= 0.0 && depth <= 1.0)) bad("depth must lie in [0, 1]");
      if (!(bandwidth_hz >= 0.0)) bad("bandwidth must be >= 0");
      if (!(floor >= 0.0)) bad("floor must be >= 0");
      break;
    case NoiseFamily::SpeechShapedBabbleProxy:
      if (n_talkers < 1) bad("babble needs at least one talker");
      break;
    case NoiseFamily::Mixture:
      if (components.empty() || components.size() != weights.size()) bad("mixture needs one weight per component");
      for (double w : weights) {
        if (!(w >= 0.0 && std::isfinite(w))) bad("mixture weights must be >= 0");
      }
      if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) bad("all mixture weights zero");
      for (const auto& c : components) c.validate(fs);
      break;
  }
}

dsp::Signal synth_noise(const NoiseSpec& spec, double duration_s, int fs) {
  spec.validate(fs);
  if (!(duration_s > 0.0)) fail(ErrorCode::InvalidParams, "noise duration must be positive");
  const std::size_t n = n_samples_for(duration_s, fs);
  RngStream rng(derive_key(spec.seed, {2}));
  std::vector<double> x;
  switch (spec.family) {
    case NoiseFamily::White:
      x = white(n, rng);
      break;
    case NoiseFamily::Pink:
      x = pink(n, rng, fs);
      break;
    case NoiseFamily::LowpassRumble:
      x = filtered_white(n, rng, spec.cutoff_hz, fs, false, 2);
      break;
    case NoiseFamily::AmplitudeModulatedTones: {
      x.assign(n, 0.0);
      for (double f : spec.tones_hz) {
        const double gain = rng.uniform(0.6, 1.0);
        const double phi = rng.uniform(0.0, kTwoPi);
        if (spec.bandwidth_hz > 0.0) {
          std::vector<double> i_part = filtered_white(n, rng, spec.bandwidth_hz / 2.0, fs, false, 2);
          std::vector<double> q_part = filtered_white(n, rng, spec.bandwidth_hz / 2.0, fs, false, 2);
          for (std::size_t t = 0; t < n; ++t) {
            const double w = kTwoPi * f * t / fs + phi;
            x[t] += gain * (i_part[t] * std::cos(w) - q_part[t] * std::sin(w));
          }
        } else {
          for (std::size_t t = 0; t < n; ++t) x[t] += gain * std::sin(kTwoPi * f * t / fs + phi);
        }
      }
      const double psi = rng.uniform(0.0, kTwoPi);
      for (std::size_t t = 0; t < n; ++t) {
        x[t] *= 1.0 - spec.depth * (0.5 - 0.5 * std::cos(kTwoPi * spec.rate_hz * t / fs + psi));
      }
      if (spec.floor > 0.0) {
        normalize_rms(x, kTargetRms);
        std::vector<double> fl = pink(n, rng, fs);
        normalize_rms(fl, kTargetRms * spec.floor);
        for (std::size_t t = 0; t < n; ++t) x[t] += fl[t];
      }
      break;
    }
    case NoiseFamily::SpeechShapedBabbleProxy: {
      x.assign(n, 0.0);
      for (int k = 0; k < spec.n_talkers; ++k) {
        const dsp::Signal talker = synth_speech(duration_s, derive_key(spec.seed, {3, static_cast<std::uint64_t>(k)}), fs);
        for (std::size_t t = 0; t < n; ++t) x[t] += talker.samples[t];
      }
      break;
    }
    case NoiseFamily::Mixture: {
      x.assign(n, 0.0);
      for (std::size_t c = 0; c < spec.components.size(); ++c) {
        if (spec.weights[c] == 0.0) continue;
        NoiseSpec part = spec.components[c];
        part.seed = derive_key(spec.seed, {4, static_cast<std::uint64_t>(c)});
        const dsp::Signal s = synth_noise(part, duration_s, fs);
        for (std::size_t t = 0; t < n; ++t) x[t] += spec.weights[c] * s.samples[t];
      }
      break;
    }
  }
  normalize_rms(x, kTargetRms);
  dsp::Signal sig;
  sig.samples = std::move(x);
  sig.sample_rate_hz = fs;
  return sig;
}

// -------------------------------------------------------------- manifest

namespace {

const std::set<double> kSnrGrid{-10.0, -5.0, 0.0, 5.0, 10.0};
const std::set<double> kTrainSnrs{0.0, 5.0, 10.0};

[[noreturn]] void bad_manifest(const std::string& why) { fail(ErrorCode::InvalidManifest, "manifest: " + why); }

}  // namespace

void DatasetManifest::validate() const {
  frame_cfg.validate();
  for (const auto& [label, spec] : noises) spec.validate(frame_cfg.sample_rate_hz);
  std::set<std::string> seen_set(seen.begin(), seen.end());
  for (const auto& l : seen) {
    if (!noises.count(l)) bad_manifest("seen label '" + l + "' has no noise spec");
  }
  for (const auto& l : unseen) {
    if (!noises.count(l)) bad_manifest("unseen label '" + l + "' has no noise spec");
    if (seen_set.count(l)) bad_manifest("label '" + l + "' is both seen and unseen");
  }
  if (seen_set.size() != seen.size()) bad_manifest("duplicate seen labels");

  std::map<std::string, std::set<std::string>> ids;
  std::set<std::string> train_clean;
  for (const auto& e : entries) {
    if (e.split != "train" && e.split != "val" && e.split != "test") bad_manifest("unknown split '" + e.split + "'");
    if (!ids[e.split].insert(e.id).second) bad_manifest("duplicate id '" + e.id + "' in split " + e.split);
    if (!utterances.count(e.clean_id)) bad_manifest("entry '" + e.id + "' references unknown clean id");
    if (!noises.count(e.noise)) bad_manifest("entry '" + e.id + "' references unknown noise");
    if (!kSnrGrid.count(e.snr_db)) bad_manifest("entry '" + e.id + "' has an SNR off the grid");
    if (e.split == "train") {
      if (!kTrainSnrs.count(e.snr_db)) bad_manifest("train entry '" + e.id + "' must use 0, 5 or 10 dB");
      if (!seen_set.count(e.noise)) bad_manifest("train entry '" + e.id + "' uses non-seen noise '" + e.noise + "'");
      train_clean.insert(e.clean_id);
    } else if (e.single) {
      bad_manifest("only train entries can belong to the single-model partition");
    }
  }
  for (const auto& e : entries) {
    if (e.split != "train" && train_clean.count(e.clean_id)) {
      bad_manifest(e.split + " entry '" + e.id + "' shares clean id '" + e.clean_id + "' with train");
    }
  }
  for (const auto& [id, u] : utterances) {
    if (!(u.duration_s >= 0.5)) bad_manifest("utterance '" + id + "' shorter than 0.5 s");
  }
}

std::vector<const ManifestEntry*> DatasetManifest::select(const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

namespace {

nlohmann::json spec_json(const NoiseSpec& s) {
  nlohmann::json j;
  j["family"] = to_string(s.family);
  switch (s.family) {
    case NoiseFamily::White:
    case NoiseFamily::Pink:
      break;
    case NoiseFamily::LowpassRumble:
      j["cutoff_hz"] = s.cutoff_hz;
      break;
    case NoiseFamily::AmplitudeModulatedTones:
      j["tones_hz"] = s.tones_hz;
      j["rate_hz"] = s.rate_hz;
      j["depth"] = s.depth;
      j["bandwidth_hz"] = s.bandwidth_hz;
      j["floor"] = s.floor;
      break;
    case NoiseFamily::SpeechShapedBabbleProxy:
      j["n_talkers"] = s.n_talkers;
      break;
    case NoiseFamily::Mixture:
      j["components"] = nlohmann::json::array();
      for (const auto& c : s.components) j["components"].push_back(spec_json(c));
      j["weights"] = s.weights;
      break;
  }
  return j;
}

NoiseSpec spec_from(const nlohmann::json& j) {
  NoiseSpec s;
  s.family = noise_family_from_string(j.at("family").get<std::string>());
  s.cutoff_hz = j.value("cutoff_hz", s.cutoff_hz);
  s.tones_hz = j.value("tones_hz", s.tones_hz);
  s.rate_hz = j.value("rate_hz", s.rate_hz);
  s.depth = j.value("depth", s.depth);
  s.bandwidth_hz = j.value("bandwidth_hz", s.bandwidth_hz);
  s.floor = j.value("floor", s.floor);
  s.n_talkers = j.value("n_talkers", s.n_talkers);
  if (j.contains("components")) {
    for (const auto& c : j.at("components")) s.components.push_back(spec_from(c));
  }
  s.weights = j.value("weights", s.weights);
  return s;
}

}  // namespace

std::string manifest_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["version"] = 1;
  j["seed"] = m.seed;
  j["frame_config"] = {{"sample_rate_hz", m.frame_cfg.sample_rate_hz},
                       {"frame_len_samples", m.frame_cfg.frame_len_samples},
                       {"hop_samples", m.frame_cfg.hop_samples},
                       {"fft_size", m.frame_cfg.fft_size}};
  j["noises"] = nlohmann::json::object();
  for (const auto& [label, spec] : m.noises) j["noises"][label] = spec_json(spec);
  j["seen"] = m.seen;
  j["unseen"] = m.unseen;
  j["utterances"] = nlohmann::json::object();
  for (const auto& [id, u] : m.utterances) j["utterances"][id] = {{"seed", u.seed}, {"duration_s", u.duration_s}};
  j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json o{{"id", e.id},       {"clean_id", e.clean_id}, {"noise", e.noise},
                     {"snr_db", e.snr_db}, {"split", e.split},       {"seed", e.seed}};
    if (e.single) o["single"] = true;
    j["entries"].push_back(std::move(o));
  }
  return j.dump(1) + "\n";
}

DatasetManifest parse_manifest(const std::string& text) {
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) bad_manifest("unsupported version");
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& fc = j.at("frame_config");
    m.frame_cfg.sample_rate_hz = fc.at("sample_rate_hz").get<int>();
    m.frame_cfg.frame_len_samples = fc.at("frame_len_samples").get<int>();
    m.frame_cfg.hop_samples = fc.at("hop_samples").get<int>();
    m.frame_cfg.fft_size = fc.at("fft_size").get<int>();
    for (const auto& [label, spec] : j.at("noises").items()) m.noises[label] = spec_from(spec);
    m.seen = j.at("seen").get<std::vector<std::string>>();
    m.unseen = j.value("unseen", std::vector<std::string>{});
    for (const auto& [id, u] : j.at("utterances").items()) {
      m.utterances[id] = Utterance{u.at("seed").get<std::uint64_t>(), u.at("duration_s").get<double>()};
    }
    for (const auto& o : j.at("entries")) {
      ManifestEntry e;
      e.id = o.at("id").get<std::string>();
      e.clean_id = o.at("clean_id").get<std::string>();
      e.noise = o.at("noise").get<std::string>();
      e.snr_db = o.at("snr_db").get<double>();
      e.split = o.at("split").get<std::string>();
      e.seed = o.at("seed").get<std::uint64_t>();
      e.single = o.value("single", false);
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    bad_manifest(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidManifest) throw;
    bad_manifest(e.what());
  }
  try {
    m.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidManifest) throw;
    bad_manifest(e.what());
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::InvalidManifest, "manifest not found: " + path.string());
  return parse_manifest(read_file_text(path));
}

namespace {

std::string snr_tag(double snr) {
  const long v = std::lround(snr);
  return v < 0 ? "snrm" + std::to_string(-v) : "snr" + std::to_string(v);
}

std::string utt_id(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
  return buf;
}

NoiseSpec tones(std::vector<double> f, double rate, double depth, double bw, double floor) {
  NoiseSpec s;
  s.family = NoiseFamily::AmplitudeModulatedTones;
  s.tones_hz = std::move(f);
  s.rate_hz = rate;
  s.depth = depth;
  s.bandwidth_hz = bw;
  s.floor = floor;
  return s;
}

NoiseSpec family(NoiseFamily f) {
  NoiseSpec s;
  s.family = f;
  return s;
}

}  // namespace

DatasetManifest make_desk_manifest(const DeskOptions& opts) {
  DatasetManifest m;
  m.seed = opts.seed;

  m.noises["pink"] = family(NoiseFamily::Pink);
  NoiseSpec rumble = family(NoiseFamily::LowpassRumble);
  rumble.cutoff_hz = 250.0;
  m.noises["rumble"] = rumble;
  m.noises["tones-low"] = tones({110, 220, 330, 440, 660, 880}, 2.0, 0.6, 0.0, 0.1);
  NoiseSpec babble = family(NoiseFamily::SpeechShapedBabbleProxy);
  babble.n_talkers = 6;
  m.noises["babble"] = babble;
  m.noises["tones-narrow"] = tones({1200, 2100, 3300}, 0.7, 0.3, 60.0, 0.1);

  m.noises["white"] = family(NoiseFamily::White);
  m.noises["tones-fast"] = tones({500, 1500, 2600, 4200}, 9.0, 0.9, 0.0, 0.05);
  NoiseSpec mixed = family(NoiseFamily::Mixture);
  NoiseSpec mid_rumble = family(NoiseFamily::LowpassRumble);
  mid_rumble.cutoff_hz = 1500.0;
  mixed.components = {mid_rumble, tones({2500, 4500}, 6.0, 0.5, 200.0, 0.0)};
  mixed.weights = {0.6, 0.5};
  m.noises["mixed"] = mixed;

  m.seen = {"pink", "rumble", "tones-low", "babble", "tones-narrow"};
  m.unseen = {"white", "tones-fast", "mixed"};

  auto add_utts = [&](const char* prefix, int count, std::uint64_t code) {
    std::vector<std::string> ids;
    for (int i = 0; i < count; ++i) {
      RngStream r(derive_key(opts.seed, {10, code, static_cast<std::uint64_t>(i)}));
      const double dur = std::round(r.uniform(opts.min_duration_s, opts.max_duration_s) * 1000.0) / 1000.0;
      const std::string id = utt_id(prefix, i);
      m.utterances[id] = Utterance{r.next_u64(), dur};
      ids.push_back(id);
    }
    return ids;
  };
  const auto train_ids = add_utts("tr", opts.n_train_utterances, 1);
  const auto val_ids = add_utts("va", opts.n_val_utterances, 2);
  const auto test_ids = add_utts("te", opts.n_test_utterances, 3);

  auto add_entry = [&](const std::string& split, const std::string& noise, const std::string& clean, double snr,
                       bool single) {
    ManifestEntry e;
    e.id = noise + "_" + clean + "_" + snr_tag(snr);
    e.clean_id = clean;
    e.noise = noise;
    e.snr_db = snr;
    e.split = split;
    e.seed = derive_key(opts.seed, {20, hash_name(split + "/" + e.id)});
    e.single = single;
    m.entries.push_back(std::move(e));
  };

  const std::size_t n_snr = opts.train_snrs.size();
  for (std::size_t k = 0; k < m.seen.size(); ++k) {
    for (std::size_t u = 0; u < train_ids.size(); ++u) {
      const std::size_t part = u % (m.seen.size() * n_snr);
      for (std::size_t j = 0; j < n_snr; ++j) {
        if (!opts.all_train_snrs && u % n_snr != j) continue;
        add_entry("train", m.seen[k], train_ids[u], opts.train_snrs[j], part == k * n_snr + j);
      }
    }
  }
  std::vector<std::string> val_noises = m.seen;
  val_noises.push_back(m.unseen.front());
  for (const auto& noise : val_noises) {
    for (double snr : opts.eval_snrs) {
      for (const auto& u : val_ids) add_entry("val", noise, u, snr, false);
    }
  }
  std::vector<std::string> all = m.seen;
  all.insert(all.end(), m.unseen.begin(), m.unseen.end());
  for (const auto& noise : all) {
    for (double snr : opts.eval_snrs) {
      for (const auto& u : test_ids) add_entry("test", noise, u, snr, false);
    }
  }
  m.validate();
  return m;
}

// --------------------------------------------------------------- dataset

namespace {

EntrySignals mix_entry(const DatasetManifest& m, const ManifestEntry& e, const dsp::Signal& clean_raw) {
  const Utterance& u = m.utterances.at(e.clean_id);
  NoiseSpec spec = m.noises.at(e.noise);
  spec.seed = e.seed;
  const dsp::Signal noise = synth_noise(spec, u.duration_s, m.frame_cfg.sample_rate_hz);
  dsp::MixResult mix = dsp::mix_at_snr(clean_raw, noise, e.snr_db);
  double peak = 0.0;
  for (double v : mix.noisy.samples) peak = std::max(peak, std::abs(v));
  for (double v : clean_raw.samples) peak = std::max(peak, std::abs(v));
  dsp::Signal clean = clean_raw;
  if (peak > 0.99) {
    const double g = 0.99 / peak;
    for (double& v : clean.samples) v *= g;
    for (double& v : mix.noisy.samples) v *= g;
  }
  return EntrySignals{dsp::quantize_pcm16(clean), dsp::quantize_pcm16(mix.noisy)};
}

dsp::Signal clean_of(const DatasetManifest& m, const ManifestEntry& e) {
  const Utterance& u = m.utterances.at(e.clean_id);
  return synth_speech(u.duration_s, u.seed, m.frame_cfg.sample_rate_hz);
}

}  // namespace

EntrySignals synthesize_entry(const DatasetManifest& manifest, const ManifestEntry& entry) {
  return mix_entry(manifest, entry, clean_of(manifest, entry));
}

nn::FramePairs frame_pairs(const EntrySignals& s, const dsp::FrameConfig& cfg) {
  nn::FramePairs p;
  p.noisy = dsp::stft(s.noisy, cfg).magnitude;
  p.clean = dsp::stft(s.clean, cfg).magnitude;
  return p;
}

static_assert(std::endian::native == std::endian::little, "pair cache assumes a little-endian host");

std::vector<unsigned char> serialize_pairs(const nn::FramePairs& pairs) {
  const auto n = static_cast<std::uint64_t>(pairs.noisy.rows());
  const auto bins = static_cast<std::uint32_t>(pairs.noisy.cols());
  if (pairs.clean.rows() != pairs.noisy.rows() || pairs.clean.cols() != pairs.noisy.cols()) {
    fail(ErrorCode::ShapeMismatch, "pair cache: noisy and clean shapes differ");
  }
  std::vector<unsigned char> out{'M', 'C', 'F', 'R'};
  auto put = [&](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    out.insert(out.end(), b, b + len);
  };
  put(&kPairCacheVersion, 4);
  put(&n, 8);
  put(&bins, 4);
  for (const Matrix* m : {&pairs.noisy, &pairs.clean}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      const auto f = static_cast<float>(m->data()[i]);
      put(&f, 4);
    }
  }
  return out;
}

nn::FramePairs deserialize_pairs(const std::vector<unsigned char>& bytes) {
  auto corrupt = [](const std::string& why) { fail(ErrorCode::CorruptFile, "pair cache: " + why); };
  if (bytes.size() < 20 || std::memcmp(bytes.data(), "MCFR", 4) != 0) corrupt("bad magic or truncated");
  std::uint32_t version = 0;
  std::uint64_t n = 0;
  std::uint32_t bins = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&n, bytes.data() + 8, 8);
  std::memcpy(&bins, bytes.data() + 16, 4);
  if (version != kPairCacheVersion) fail(ErrorCode::VersionMismatch, "pair cache version " + std::to_string(version));
  if (bytes.size() != 20 + 2 * n * bins * 4) corrupt("size does not match header");
  nn::FramePairs p;
  p.noisy.resize(static_cast<Eigen::Index>(n), bins);
  p.clean.resize(static_cast<Eigen::Index>(n), bins);
  const unsigned char* src = bytes.data() + 20;
  for (Matrix* m : {&p.noisy, &p.clean}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      float f = 0.0f;
      std::memcpy(&f, src, 4);
      src += 4;
      m->data()[i] = f;
    }
  }
  return p;
}

std::filesystem::path entry_dir(const std::filesystem::path& root, const ManifestEntry& entry) {
  return root / entry.split / entry.id;
}

void build_dataset(const DatasetManifest& manifest, const std::filesystem::path& root,
                   const std::function<bool(const ManifestEntry&)>& filter, int threads) {
  manifest.validate();
  std::map<std::string, std::vector<const ManifestEntry*>> by_clean;
  for (const auto& e : manifest.entries) {
    if (!filter || filter(e)) by_clean[e.clean_id].push_back(&e);
  }
  std::vector<const std::vector<const ManifestEntry*>*> groups;
  for (const auto& [id, g] : by_clean) groups.push_back(&g);
  parallel_for(groups.size(), threads, [&](std::size_t gi) {
    const auto& group = *groups[gi];
    const dsp::Signal clean = clean_of(manifest, *group.front());
    for (const ManifestEntry* e : group) {
      const EntrySignals s = mix_entry(manifest, *e, clean);
      const auto dir = entry_dir(root, *e);
      dsp::write_wav(dir / "clean.wav", s.clean);
      dsp::write_wav(dir / "noisy.wav", s.noisy);
      write_file_atomic(dir / "pairs.mcfr", serialize_pairs(frame_pairs(s, manifest.frame_cfg)));
    }
  });
  write_text_atomic(root / "manifest.json", manifest_json(manifest));
}

nn::FramePairs load_pairs(const std::filesystem::path& root, const std::vector<const ManifestEntry*>& entries) {
  std::vector<nn::FramePairs> parts;
  Eigen::Index rows = 0;
  Eigen::Index cols = -1;
  for (const ManifestEntry* e : entries) {
    const auto path = entry_dir(root, *e) / "pairs.mcfr";
    if (!std::filesystem::exists(path)) fail(ErrorCode::MissingCorpus, "missing frame cache " + path.string());
    parts.push_back(deserialize_pairs(read_file_bytes(path)));
    if (cols >= 0 && parts.back().noisy.cols() != cols) fail(ErrorCode::DimensionMismatch, "pair caches differ in width");
    cols = parts.back().noisy.cols();
    rows += parts.back().size();
  }
  nn::FramePairs out;
  if (parts.empty()) return out;
  out.noisy.resize(rows, cols);
  out.clean.resize(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.noisy.middleRows(r, p.size()) = p.noisy;
    out.clean.middleRows(r, p.size()) = p.clean;
    r += p.size();
  }
  return out;
}

EntrySignals load_entry(const std::filesystem::path& root, const ManifestEntry& entry) {
  const auto dir = entry_dir(root, entry);
  if (!std::filesystem::exists(dir / "noisy.wav")) fail(ErrorCode::MissingCorpus, "entry not built: " + dir.string());
  return EntrySignals{dsp::read_wav(dir / "clean.wav"), dsp::read_wav(dir / "noisy.wav")};
}

}  // namespace mcenhance::corpus
