// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/train/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace tlsqkt::train {

double auc(std::span<const double> scores, std::span<const std::int32_t> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Walk tie groups in ascending score order, crediting each positive with
  // every negative strictly below it plus half of the negatives it ties with.
  double negatives_below = 0.0;
  double credit = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double pos = 0.0;
    double neg = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) {
        pos += 1.0;
      } else if (labels[order[j]] == 0) {
        neg += 1.0;
      } else {
        throw std::invalid_argument("auc: labels must be 0 or 1");
      }
      ++j;
    }
    credit += pos * negatives_below + 0.5 * pos * neg;
    negatives_below += neg;
    positives += pos;
    i = j;
  }
  if (positives == 0.0 || negatives_below == 0.0) {
    throw UndefinedMetric("auc: need at least one positive and one negative label (got " +
                          std::to_string(static_cast<long long>(positives)) + " positive, " +
                          std::to_string(static_cast<long long>(negatives_below)) + " negative)");
  }
  return credit / (positives * negatives_below);
}

double accuracy(std::span<const double> scores, std::span<const std::int32_t> labels,
                double threshold) {
  if (scores.size() != labels.size()) throw std::invalid_argument("accuracy: size mismatch");
  if (scores.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    hits += ((scores[i] >= threshold ? 1 : 0) == labels[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

}  // namespace tlsqkt::train
