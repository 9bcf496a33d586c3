// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

#include "tlsqkt/data/dataset.hpp"

namespace tlsqkt::data {

struct Assist09Report {
  std::size_t data_rows = 0;
  std::size_t kept = 0;
  std::size_t dropped_null_skill = 0;
  std::size_t dropped_duplicate = 0;  // extra skill rows of multi-skill problems
  std::size_t unparseable = 0;
  std::size_t first_bad_line = 0;
};

struct Assist09Result {
  Dataset dataset;
  Assist09Report report;
};

/// Maps a raw skill-builder export onto canonical records: user_id -> student,
/// order_id -> order, problem_id -> question, skill_id -> kc, no literacy.
/// Rows without a skill are dropped; for multi-skill problems ("10_13" or
/// repeated order_id rows) the first listed skill is kept. More than 1%
/// unparseable rows is a LoadError.
Assist09Result adapt_assist09(const std::string& raw_csv);

}  // namespace tlsqkt::data
