// include/mcenhance/error.hpp
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcenhance {

enum class ErrorCode {
  // signal / dsp
  SignalTooShort,
  ShapeMismatch,
  SilentNoise,
  SilentClean,
  UnsupportedFormat,
  LengthMismatch,
  // network
  DimensionMismatch,
  NonFiniteInput,
  NegativeSpectrum,
  CacheMismatch,
  EmptyDataset,
  LabelOutOfRange,
  CorruptFile,
  VersionMismatch,
  // inference / selection / metrics
  EmptySamples,
  EmptyBank,
  NoVoicedFrames,
  DegenerateInput,
  InvalidParams,
  // harness
  InvalidManifest,
  MissingCorpus,
  MissingModels,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Data errors map to CLI exit code 3, model errors to 4.
enum class ErrorCategory { Data, Model };
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace mcenhance
