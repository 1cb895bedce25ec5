// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace natres::csv {

// Plain comma-separated text: no embedded commas or newlines inside cells.
// Surrounding whitespace and double quotes are stripped from each cell.
struct Table {
  std::vector<std::string> header;
  // rows[i] keeps the 1-based line number it came from.
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

std::vector<std::string> split_line(std::string_view line);

// Throws DataError on an unreadable file or a missing header.
Table read(const std::filesystem::path& path);

// Strict full-string number parse.
bool parse_double(std::string_view text, double& out);

std::string format_double(double v);

}  // namespace natres::csv
