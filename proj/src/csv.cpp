// src/csv.cpp
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

#include "mcenhance/csv.hpp"

#include <cstdio>

#include "mcenhance/error.hpp"

namespace mcenhance {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

namespace {

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header) : width_(header.size()), header_(join(header)) {}

void CsvTable::add_comment(std::string_view text) {
  comments_ += "# ";
  comments_ += text;
  comments_ += '\n';
}

void CsvTable::add_row(std::vector<std::string> fields) {
  if (fields.size() != width_) fail(ErrorCode::ShapeMismatch, "csv row width does not match header");
  body_ += join(fields);
  body_ += '\n';
  ++rows_;
}

std::string CsvTable::text() const { return comments_ + header_ + '\n' + body_; }

}  // namespace mcenhance
