// src/error.cpp
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

#include "mcenhance/error.hpp"

namespace mcenhance {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SilentNoise: return "SilentNoise";
    case ErrorCode::SilentClean: return "SilentClean";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NegativeSpectrum: return "NegativeSpectrum";
    case ErrorCode::CacheMismatch: return "CacheMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::NoVoicedFrames: return "NoVoicedFrames";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::MissingCorpus: return "MissingCorpus";
    case ErrorCode::MissingModels: return "MissingModels";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch:
    case ErrorCode::CacheMismatch:
    case ErrorCode::CorruptFile:
    case ErrorCode::VersionMismatch:
    case ErrorCode::EmptyBank:
    case ErrorCode::MissingModels:
      return ErrorCategory::Model;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace mcenhance
