// include/mcenhance/wav.hpp
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

#include <filesystem>

#include "mcenhance/dsp.hpp"

namespace mcenhance::dsp {

/// Reads RIFF/WAVE, PCM tag 1, mono, 16-bit little-endian at `expected_rate_hz`.
/// Samples are int16 / 32768. Anything else throws UnsupportedFormat.
Signal read_wav(const std::filesystem::path& path, int expected_rate_hz = 16000);

/// Writes 16-bit PCM mono. Samples are rounded from x * 32768 and clipped to
/// the int16 range, so write(read(f)) reproduces f's samples exactly.
void write_wav(const std::filesystem::path& path, const Signal& signal);

/// Round-trips through the 16-bit representation without touching disk.
Signal quantize_pcm16(const Signal& signal);

}  // namespace mcenhance::dsp
