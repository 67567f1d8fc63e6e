// include/mcenhance/csv.hpp
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

#include <string>
#include <string_view>
#include <vector>

namespace mcenhance {

/// Shortest round-trip decimal for a double ("%.17g").
std::string format_double(double v);

/// Accumulates comma-separated rows; fields are written verbatim.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_comment(std::string_view text);
  void add_row(std::vector<std::string> fields);
  std::size_t n_rows() const noexcept { return rows_; }
  /// Comment lines, then the header, then the rows.
  std::string text() const;

 private:
  std::size_t width_;
  std::size_t rows_ = 0;
  std::string comments_;
  std::string header_;
  std::string body_;
};

}  // namespace mcenhance
