// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/data/batching.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>

namespace tlsqkt::data {

std::int64_t Batch::prediction_count() const {
  return static_cast<std::int64_t>(std::count(valid_mask.begin(), valid_mask.end(), 1));
}

void Batch::validate() const {
  const auto n = static_cast<std::size_t>(batch_size * steps);
  for (const auto* v : {&q_ids, &kc_ids, &l_ids, &responses, &q_next, &kc_next, &l_next, &positions}) {
    if (v->size() != n) throw std::logic_error("batch: id array size mismatch");
  }
  if (targets.size() != n || valid_mask.size() != n || step_mask.size() != n) {
    throw std::logic_error("batch: target/mask size mismatch");
  }
  for (std::int64_t b = 0; b < batch_size; ++b) {
    for (std::int64_t t = 0; t < steps; ++t) {
      const std::size_t i = cell(b, t);
      if (!valid_mask[i]) continue;
      const bool next_present = t + 1 < steps && step_mask[cell(b, t + 1)];
      if (!step_mask[i] || !next_present) {
        throw std::logic_error("batch: prediction at row " + std::to_string(b) + ", step " +
                               std::to_string(t) + " has no following interaction");
      }
      if (q_next[i] < 1 || l_next[i] < 1 || (targets[i] != 0.0 && targets[i] != 1.0)) {
        throw std::logic_error("batch: misaligned target at row " + std::to_string(b) +
                               ", step " + std::to_string(t));
      }
    }
  }
}

std::vector<Window> make_windows(const std::vector<Sequence>& sequences, std::int64_t max_seq_len) {
  if (max_seq_len < 2) throw std::invalid_argument("max_seq_len must be >= 2");
  std::vector<Window> windows;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto len = static_cast<std::int64_t>(sequences[s].steps.size());
    for (std::int64_t start = 0; start < len; start += max_seq_len) {
      windows.push_back({s, start, std::min(max_seq_len, len - start)});
    }
  }
  return windows;
}

std::vector<Window> trainable_windows(const std::vector<Window>& windows) {
  std::vector<Window> out;
  std::copy_if(windows.begin(), windows.end(), std::back_inserter(out),
               [](const Window& w) { return w.prediction_count() > 0; });
  return out;
}

Batch collate(const Dataset& dataset, std::span<const Window> windows) {
  Batch batch;
  batch.batch_size = static_cast<std::int64_t>(windows.size());
  for (const Window& w : windows) batch.steps = std::max(batch.steps, w.length);
  if (batch.batch_size == 0 || batch.steps == 0) throw std::invalid_argument("collate: empty batch");
  const auto n = static_cast<std::size_t>(batch.batch_size * batch.steps);
  for (auto* v : {&batch.q_ids, &batch.kc_ids, &batch.l_ids, &batch.responses, &batch.q_next,
                  &batch.kc_next, &batch.l_next, &batch.positions}) {
    v->assign(n, 0);
  }
  batch.targets.assign(n, 0.0);
  batch.valid_mask.assign(n, 0);
  batch.step_mask.assign(n, 0);

  auto literacy_of = [&](const Interaction& it) {
    return dataset.has_literacy ? *it.literacy_id : it.kc_id;
  };
  for (std::int64_t b = 0; b < batch.batch_size; ++b) {
    const Window& w = windows[static_cast<std::size_t>(b)];
    const Sequence& seq = dataset.sequences.at(w.sequence);
    batch.window_origin.emplace_back(seq.student_id, w.start);
    for (std::int64_t t = 0; t < w.length; ++t) {
      const Interaction& it = seq.steps[static_cast<std::size_t>(w.start + t)];
      const std::size_t i = batch.cell(b, t);
      batch.q_ids[i] = it.question_id;
      batch.kc_ids[i] = it.kc_id;
      batch.l_ids[i] = literacy_of(it);
      batch.responses[i] = it.correct;
      batch.positions[i] = static_cast<std::int32_t>(t + 1);
      batch.step_mask[i] = 1;
      if (t + 1 < w.length) {
        const Interaction& next = seq.steps[static_cast<std::size_t>(w.start + t + 1)];
        batch.q_next[i] = next.question_id;
        batch.kc_next[i] = next.kc_id;
        batch.l_next[i] = literacy_of(next);
        batch.targets[i] = next.correct;
        batch.valid_mask[i] = 1;
      }
    }
  }
  return batch;
}

std::vector<Batch> window_and_pad(const Dataset& dataset, std::int64_t max_seq_len,
                                  std::int64_t batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const std::vector<Window> all = make_windows(dataset.sequences, max_seq_len);
  const std::vector<Window> usable = trainable_windows(all);
  if (usable.size() != all.size()) {
    std::clog << "warning: dropped " << (all.size() - usable.size())
              << " window(s) with a single interaction (nothing to predict)\n";
  }
  std::vector<Batch> batches;
  for (std::size_t i = 0; i < usable.size(); i += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(static_cast<std::size_t>(batch_size), usable.size() - i);
    batches.push_back(collate(dataset, std::span<const Window>(usable.data() + i, n)));
  }
  return batches;
}

}  // namespace tlsqkt::data
