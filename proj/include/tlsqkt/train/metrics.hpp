// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace tlsqkt::train {

/// AUC is undefined without both classes present.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// P(score of a random positive > score of a random negative), ties count 1/2.
/// O(n log n) via sorting; throws UndefinedMetric on single-class input.
double auc(std::span<const double> scores, std::span<const std::int32_t> labels);

/// Fraction of items with (score >= threshold) == label.
double accuracy(std::span<const double> scores, std::span<const std::int32_t> labels,
                double threshold = 0.5);

}  // namespace tlsqkt::train
