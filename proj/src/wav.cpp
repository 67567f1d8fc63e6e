// src/wav.cpp
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

#include "mcenhance/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mcenhance/error.hpp"
#include "mcenhance/fileutil.hpp"

namespace mcenhance::dsp {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

std::int16_t to_pcm16(double x) {
  const double scaled = std::nearbyint(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

[[noreturn]] void unsupported(const std::filesystem::path& path, const std::string& why) {
  fail(ErrorCode::UnsupportedFormat, path.string() + ": " + why);
}

}  // namespace

Signal read_wav(const std::filesystem::path& path, int expected_rate_hz) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12) unsupported(path, "too short for a RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    unsupported(path, "not RIFF/WAVE");
  }

  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t chunk_size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size() && std::memcmp(hdr, "data", 4) != 0) {
      unsupported(path, "truncated chunk");
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) unsupported(path, "fmt chunk too small");
      const unsigned char* f = bytes.data() + body;
      const std::uint16_t tag = le16(f);
      const std::uint16_t channels = le16(f + 2);
      const std::uint32_t rate = le32(f + 4);
      const std::uint16_t bits = le16(f + 14);
      if (tag != 1) unsupported(path, "format tag " + std::to_string(tag) + " is not PCM");
      if (channels != 1) unsupported(path, std::to_string(channels) + " channels, expected mono");
      if (bits != 16) unsupported(path, std::to_string(bits) + " bits per sample, expected 16");
      if (static_cast<int>(rate) != expected_rate_hz) {
        unsupported(path, "sample rate " + std::to_string(rate) + ", expected " + std::to_string(expected_rate_hz));
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) unsupported(path, "data chunk before fmt chunk");
      // Tolerate writers that leave a too-large size in the data header.
      const std::size_t avail = std::min<std::size_t>(chunk_size, bytes.size() - body);
      Signal s;
      s.sample_rate_hz = expected_rate_hz;
      s.samples.resize(avail / 2);
      for (std::size_t n = 0; n < s.samples.size(); ++n) {
        const auto v = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * n));
        s.samples[n] = static_cast<double>(v) / 32768.0;
      }
      return s;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  unsupported(path, "no data chunk");
}

Signal quantize_pcm16(const Signal& signal) {
  Signal q = signal;
  for (double& x : q.samples) x = static_cast<double>(to_pcm16(x)) / 32768.0;
  return q;
}

void write_wav(const std::filesystem::path& path, const Signal& signal) {
  const auto n = static_cast<std::uint32_t>(signal.samples.size());
  const std::uint32_t data_bytes = n * 2;
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  const char* riff = "RIFF";
  out.insert(out.end(), riff, riff + 4);
  put32(out, 36 + data_bytes);
  const char* wave_fmt = "WAVEfmt ";
  out.insert(out.end(), wave_fmt, wave_fmt + 8);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(signal.sample_rate_hz));
  put32(out, static_cast<std::uint32_t>(signal.sample_rate_hz) * 2);
  put16(out, 2);
  put16(out, 16);
  const char* data = "data";
  out.insert(out.end(), data, data + 4);
  put32(out, data_bytes);
  for (double x : signal.samples) put16(out, static_cast<std::uint16_t>(to_pcm16(x)));

  write_file_atomic(path, out);
}

}  // namespace mcenhance::dsp
