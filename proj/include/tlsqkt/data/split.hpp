// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tlsqkt/data/dataset.hpp"

namespace tlsqkt::data {

/// Sequence indices per partition, each sorted ascending.
struct StudentSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  std::vector<std::size_t> train_val() const;
};

/// Partitions students (never interactions): floor(ratio * n) students go to
/// train+validation, the rest to test; train+validation is then split
/// floor(train_share * n_tv) / remainder. Requires at least 10 students.
StudentSplit split_students(const std::vector<Sequence>& sequences, double ratio,
                            std::uint64_t seed, double train_share = 0.9);

}  // namespace tlsqkt::data
