// tests/unit/test_dsp.cpp
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
#include <fstream>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mcenhance/dsp.hpp"
#include "mcenhance/fft.hpp"
#include "mcenhance/wav.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace mcenhance;
using namespace mcenhance::dsp;

namespace {

// Direct O(N^2) DFT of the windowed frame, bins 0..n/2.
std::vector<std::complex<double>> direct_dft(const std::vector<double>& x, int n) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int m = 0; m < static_cast<int>(x.size()); ++m) {
      const double ang = -2.0 * std::numbers::pi * k * m / n;
      acc += x[static_cast<std::size_t>(m)] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

void put_u16(std::ofstream& f, std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); }
void put_u32(std::ofstream& f, std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }

void write_raw_wav(const std::filesystem::path& p, int channels, int bits, int rate, int n_frames) {
  std::ofstream f(p, std::ios::binary);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(n_frames * channels * bits / 8);
  f.write("RIFF", 4);
  put_u32(f, 36 + data_bytes);
  f.write("WAVEfmt ", 8);
  put_u32(f, 16);
  put_u16(f, 1);
  put_u16(f, static_cast<std::uint16_t>(channels));
  put_u32(f, static_cast<std::uint32_t>(rate));
  put_u32(f, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put_u16(f, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(f, static_cast<std::uint16_t>(bits));
  f.write("data", 4);
  put_u32(f, data_bytes);
  for (std::uint32_t i = 0; i < data_bytes; ++i) f.put(static_cast<char>(i & 0x3f));
}

}  // namespace

TEST_CASE("frame config validation") {
  FrameConfig cfg;
  CHECK(cfg.n_bins() == 257);
  cfg.validate();
  FrameConfig bad = cfg;
  bad.hop_samples = 600;
  CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidParams);
  bad = cfg;
  bad.fft_size = 256;
  CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidParams);
}

TEST_CASE("frame count") {
  FrameConfig cfg;
  CHECK(frame_signal(Signal{std::vector<double>(512, 0.1)}, cfg).rows() == 1);
  CHECK(frame_signal(Signal{std::vector<double>(672, 0.1)}, cfg).rows() == 2);
  CHECK_ERROR_CODE(frame_signal(Signal{std::vector<double>(511, 0.1)}, cfg), ErrorCode::SignalTooShort);

  for (int frame : {64, 100, 512}) {
    for (int hop : {1, 17, 64}) {
      if (hop > frame) continue;
      FrameConfig c;
      c.frame_len_samples = frame;
      c.hop_samples = hop;
      c.fft_size = 512;
      for (std::size_t len = static_cast<std::size_t>(frame); len < static_cast<std::size_t>(frame) + 300; len += 7) {
        const std::size_t expect = 1 + (len - static_cast<std::size_t>(frame)) / static_cast<std::size_t>(hop);
        CHECK(frame_count(len, c) == expect);
        CHECK(static_cast<std::size_t>(frame_signal(Signal{std::vector<double>(len, 0.0)}, c).rows()) == expect);
      }
    }
  }
}

TEST_CASE("frame i starts at sample i*hop") {
  FrameConfig cfg;
  Signal s;
  for (int i = 0; i < 2000; ++i) s.samples.push_back(i * 1e-4);
  const Matrix f = frame_signal(s, cfg);
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    CHECK(f(i, 0) == s.samples[static_cast<std::size_t>(i * 160)]);
    CHECK(f(i, 511) == s.samples[static_cast<std::size_t>(i * 160 + 511)]);
  }
}

TEST_CASE("hamming window") {
  const auto w = hamming_window(512);
  CHECK(w[0] == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(w[511] == doctest::Approx(0.08).epsilon(1e-15));
  for (int n : {1, 100, 255, 400}) {
    CHECK(w[static_cast<std::size_t>(n)] ==
          doctest::Approx(0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / 511.0)).epsilon(1e-14));
  }
}

TEST_CASE("stft of zeros, impulse and cosine") {
  FrameConfig cfg;
  const SpectralFrames z = stft(Signal{std::vector<double>(512, 0.0)}, cfg);
  CHECK(z.magnitude.rows() == 1);
  CHECK(z.magnitude.cols() == 257);
  CHECK(z.magnitude.isZero(0.0));
  CHECK(z.phase.isZero(0.0));

  std::vector<double> imp(512, 0.0);
  imp[0] = 1.0;
  const SpectralFrames d = stft(Signal{imp}, cfg);
  for (Eigen::Index k = 0; k < 257; ++k) CHECK(d.magnitude(0, k) == doctest::Approx(0.08).epsilon(1e-12));

  std::vector<double> c(512);
  for (int n = 0; n < 512; ++n) c[static_cast<std::size_t>(n)] = std::cos(2.0 * std::numbers::pi * 16.0 * n / 512.0);
  const SpectralFrames cs = stft(Signal{c}, cfg);
  Eigen::Index arg = 0;
  cs.magnitude.row(0).maxCoeff(&arg);
  CHECK(arg == 16);
}

TEST_CASE("stft matches a direct DFT oracle") {
  FrameConfig cfg;
  const Signal s = mctest::random_signal(1200, 11);
  const SpectralFrames sf = stft(s, cfg);
  const auto w = hamming_window(512);
  for (Eigen::Index i = 0; i < sf.n_frames(); ++i) {
    std::vector<double> frame(512);
    for (int n = 0; n < 512; ++n) {
      frame[static_cast<std::size_t>(n)] =
          w[static_cast<std::size_t>(n)] * s.samples[static_cast<std::size_t>(i * 160 + n)];
    }
    const auto ref = direct_dft(frame, 512);
    for (Eigen::Index k = 0; k < 257; ++k) {
      CHECK(std::abs(sf.magnitude(i, k) - std::abs(ref[static_cast<std::size_t>(k)])) < 1e-10);
      if (std::abs(ref[static_cast<std::size_t>(k)]) > 1e-6) {
        const std::complex<double> a = std::polar(1.0, sf.phase(i, k));
        const std::complex<double> b = ref[static_cast<std::size_t>(k)] / std::abs(ref[static_cast<std::size_t>(k)]);
        CHECK(std::abs(a - b) < 1e-8);
      }
    }
  }
  CHECK((sf.magnitude.array() >= 0.0).all());
  CHECK((sf.phase.array() <= std::numbers::pi).all());
  CHECK((sf.phase.array() > -std::numbers::pi).all());
}

TEST_CASE("parseval over the reconstructed full spectrum") {
  FrameConfig cfg;
  const Signal s = mctest::random_signal(512, 21);
  const SpectralFrames sf = stft(s, cfg);
  const auto w = hamming_window(512);
  double time_energy = 0.0;
  for (int n = 0; n < 512; ++n) {
    const double v = w[static_cast<std::size_t>(n)] * s.samples[static_cast<std::size_t>(n)];
    time_energy += v * v;
  }
  double freq_energy = sf.magnitude(0, 0) * sf.magnitude(0, 0) + sf.magnitude(0, 256) * sf.magnitude(0, 256);
  for (int k = 1; k < 256; ++k) freq_energy += 2.0 * sf.magnitude(0, k) * sf.magnitude(0, k);
  freq_energy /= 512.0;
  CHECK(std::abs(freq_energy - time_energy) / time_energy < 1e-9);
}

TEST_CASE("stft / istft round trip") {
  FrameConfig cfg;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Signal x = mctest::random_signal(16000, 100 + seed);
    const SpectralFrames sf = stft(x, cfg);
    const Signal y = istft_overlap_add(sf.magnitude, sf.phase, cfg);
    CHECK(y.size() == ola_length(static_cast<std::size_t>(sf.n_frames()), cfg));
    CHECK(mctest::interior_rel_error(x, y, cfg) < 1e-6);
  }
  // Minimum length for the interior property is 2 frames' worth.
  const Signal x = mctest::random_signal(1024, 5);
  const SpectralFrames sf = stft(x, cfg);
  CHECK(mctest::interior_rel_error(x, istft_overlap_add(sf.magnitude, sf.phase, cfg), cfg) < 1e-6);
}

TEST_CASE("istft edge cases") {
  FrameConfig cfg;
  const Signal y = istft_overlap_add(Matrix::Zero(4, 257), Matrix::Zero(4, 257), cfg);
  CHECK(y.size() == 3 * 160 + 512);
  for (double v : y.samples) CHECK(v == 0.0);
  CHECK(istft_overlap_add(Matrix::Ones(1, 257), Matrix::Zero(1, 257), cfg).size() == 512);
  CHECK_ERROR_CODE(istft_overlap_add(Matrix::Zero(2, 257), Matrix::Zero(3, 257), cfg), ErrorCode::ShapeMismatch);
  CHECK_ERROR_CODE(istft_overlap_add(Matrix::Zero(2, 256), Matrix::Zero(2, 256), cfg), ErrorCode::ShapeMismatch);
}

TEST_CASE("mix at snr") {
  Signal clean = mctest::random_signal(8000, 1);
  Signal noise = mctest::random_signal(9000, 2);
  for (double snr = -20.0; snr <= 20.0; snr += 2.5) {
    const MixResult m = mix_at_snr(clean, noise, snr);
    CHECK(m.noisy.size() == clean.size());
    CHECK(std::abs(measured_snr_db(clean, m.noisy) - snr) < 1e-6);
  }

  Signal c2{std::vector<double>(100, 0.2)};
  Signal n2{std::vector<double>(100, 0.1)};
  CHECK(mix_at_snr(c2, n2, 0.0).noise_scale == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(mix_at_snr(c2, c2, 0.0).noise_scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_ERROR_CODE(mix_at_snr(c2, Signal{std::vector<double>(100, 0.0)}, 0.0), ErrorCode::SilentNoise);
  CHECK_ERROR_CODE(mix_at_snr(Signal{std::vector<double>(100, 0.0)}, n2, 0.0), ErrorCode::SilentClean);
  CHECK_ERROR_CODE(mix_at_snr(c2, Signal{std::vector<double>(50, 0.1)}, 0.0), ErrorCode::LengthMismatch);
  const MixResult tiled = mix_at_snr(clean, mctest::random_signal(300, 3), 5.0, true);
  CHECK(std::abs(measured_snr_db(clean, tiled.noisy) - 5.0) < 1e-6);
}

TEST_CASE("real fft inverse") {
  RealFft fft(512);
  const Signal x = mctest::random_signal(512, 9);
  std::vector<std::complex<double>> spec(257);
  std::vector<double> back(512);
  fft.forward(x.samples, spec);
  fft.inverse(spec, back);
  for (int i = 0; i < 512; ++i) CHECK(back[static_cast<std::size_t>(i)] / 512.0 == doctest::Approx(x.samples[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("wav round trip and format errors") {
  const auto dir = mctest::scratch_dir("dsp_wav");
  Signal ramp;
  for (int i = 0; i < 16000; ++i) ramp.samples.push_back(-1.0 + 2.0 * i / 16000.0);
  write_wav(dir / "ramp.wav", ramp);
  const Signal r = read_wav(dir / "ramp.wav");
  REQUIRE(r.size() == ramp.size());
  CHECK(r.sample_rate_hz == 16000);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(r.samples[i] - ramp.samples[i]) <= 1.0 / 32768.0);

  write_wav(dir / "again.wav", r);
  std::ifstream a(dir / "ramp.wav", std::ios::binary), b(dir / "again.wav", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(quantize_pcm16(ramp).samples == r.samples);

  write_raw_wav(dir / "stereo.wav", 2, 16, 16000, 100);
  CHECK_ERROR_CODE(read_wav(dir / "stereo.wav"), ErrorCode::UnsupportedFormat);
  write_raw_wav(dir / "8bit.wav", 1, 8, 16000, 100);
  CHECK_ERROR_CODE(read_wav(dir / "8bit.wav"), ErrorCode::UnsupportedFormat);
  write_raw_wav(dir / "44k.wav", 1, 16, 44100, 100);
  CHECK_ERROR_CODE(read_wav(dir / "44k.wav"), ErrorCode::UnsupportedFormat);
  { std::ofstream(dir / "empty.wav", std::ios::binary); }
  CHECK_ERROR_CODE(read_wav(dir / "empty.wav"), ErrorCode::UnsupportedFormat);
  write_raw_wav(dir / "ok.wav", 1, 16, 16000, 100);
  CHECK(read_wav(dir / "ok.wav").size() == 100);
}
