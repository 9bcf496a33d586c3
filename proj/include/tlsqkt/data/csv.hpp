// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tlsqkt::data {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes;
/// records spanning lines are not supported. Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string quote_csv_field(std::string_view field);

/// Splits text into lines on LF, dropping a trailing CR and a final empty line.
std::vector<std::string_view> split_lines(std::string_view text);

std::optional<std::int64_t> parse_int(std::string_view field);

}  // namespace tlsqkt::data
