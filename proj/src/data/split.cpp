// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tlsqkt/common/random.hpp"

namespace tlsqkt::data {
namespace {

std::size_t floor_share(double share, std::size_t n) {
  return static_cast<std::size_t>(std::floor(share * static_cast<double>(n) + 1e-9));
}

}  // namespace

std::vector<std::size_t> StudentSplit::train_val() const {
  std::vector<std::size_t> all = train;
  all.insert(all.end(), validation.begin(), validation.end());
  std::sort(all.begin(), all.end());
  return all;
}

StudentSplit split_students(const std::vector<Sequence>& sequences, double ratio,
                            std::uint64_t seed, double train_share) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  if (!(train_share > 0.0 && train_share < 1.0)) {
    throw std::invalid_argument("train share must be in (0, 1)");
  }
  const std::size_t n = sequences.size();
  if (n < 10) {
    throw std::invalid_argument("need at least 10 students to split, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto rng = make_stream(seed, "split");
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);

  const std::size_t n_tv = floor_share(ratio, n);
  const std::size_t n_train = std::max<std::size_t>(1, floor_share(train_share, n_tv));
  StudentSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_tv));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_tv), order.end());
  for (auto* part : {&split.train, &split.validation, &split.test}) {
    std::sort(part->begin(), part->end());
  }
  return split;
}

}  // namespace tlsqkt::data
