/* Copyright 2026 The dallv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Minimal unquoted CSV used by the sidecar and metrics files. Fields never
// contain commas or newlines; writers reject values that would.

#ifndef DALLV_SRC_CSV_HPP_
#define DALLV_SRC_CSV_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dallv::detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Shortest round-tripping representation ("%.17g").
std::string format_double(double v);

// Throws kInvalidConfig if `field` contains a comma, quote or newline.
std::string_view csv_field(std::string_view field);

// Throws kIo if unreadable, kConfigParse on ragged rows or a header
// different from `expected_header`.
CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expected_header);

double parse_double(std::string_view s, std::string_view context);
long long parse_int(std::string_view s, std::string_view context);

}  // namespace dallv::detail

#endif  // DALLV_SRC_CSV_HPP_
