// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// Windowing and padding. Position t of a window row carries interaction t as
// input and the correctness of interaction t + 1 as its target; q_next /
// kc_next / l_next hold the ids of interaction t + 1.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tlsqkt/data/dataset.hpp"

namespace tlsqkt::data {

using Flags = std::vector<std::uint8_t>;

/// Contiguous slice [start, start + length) of one sequence.
struct Window {
  std::size_t sequence = 0;
  std::int64_t start = 0;
  std::int64_t length = 0;

  std::int64_t prediction_count() const { return length > 0 ? length - 1 : 0; }
};

/// Row-major [batch_size x steps] arrays; padded cells hold id 0.
struct Batch {
  std::int64_t batch_size = 0;
  std::int64_t steps = 0;
  std::vector<std::int32_t> q_ids, kc_ids, l_ids, responses;
  std::vector<std::int32_t> q_next, kc_next, l_next;
  std::vector<std::int32_t> positions;  // t + 1 on real steps, 0 on padding
  std::vector<double> targets;
  Flags valid_mask;  // prediction positions (a target exists)
  Flags step_mask;   // an interaction is present
  std::vector<std::pair<std::string, std::int64_t>> window_origin;

  std::size_t cell(std::int64_t b, std::int64_t t) const {
    return static_cast<std::size_t>(b * steps + t);
  }
  std::int64_t prediction_count() const;
  /// Throws std::logic_error on inconsistent sizes or target misalignment.
  void validate() const;
};

/// Consecutive non-overlapping windows of at most max_seq_len steps.
std::vector<Window> make_windows(const std::vector<Sequence>& sequences, std::int64_t max_seq_len);

/// Pads to the longest window given.
Batch collate(const Dataset& dataset, std::span<const Window> windows);

/// Windows -> batches of up to batch_size rows, in order. Windows without a
/// prediction position are dropped with a warning on std::clog.
std::vector<Batch> window_and_pad(const Dataset& dataset, std::int64_t max_seq_len,
                                  std::int64_t batch_size);

/// Windows with at least one prediction position.
std::vector<Window> trainable_windows(const std::vector<Window>& windows);

}  // namespace tlsqkt::data
