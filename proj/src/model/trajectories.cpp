// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/model/trajectories.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "tlsqkt/data/csv.hpp"

namespace tlsqkt::model {
namespace {

constexpr std::size_t kMaxProbes = 8;

struct Probe {
  std::int32_t question = 0;
  std::int32_t kc = 0;
};

}  // namespace

Trajectories extract_trajectories(const Model& model, const data::Dataset& dataset,
                                  std::vector<std::int32_t> literacy_ids, bool with_states,
                                  Index batch_size) {
  const std::int32_t n_dims = dataset.n_literacy_ids();
  if (literacy_ids.empty()) {
    for (std::int32_t l = 1; l <= n_dims; ++l) literacy_ids.push_back(l);
  }
  for (std::int32_t l : literacy_ids) {
    if (l < 1 || l > n_dims || l > model.dims().n_literacy) {
      throw ad::IndexError("unknown literacy id " + std::to_string(l));
    }
  }

  // Probe questions per dimension, most frequent first.
  std::map<std::int32_t, std::map<std::int32_t, std::int64_t>> seen;
  std::map<std::int32_t, std::int32_t> kc_of;
  for (const data::Sequence& seq : dataset.sequences) {
    for (const data::Interaction& it : seq.steps) {
      const std::int32_t l = dataset.has_literacy ? *it.literacy_id : it.kc_id;
      ++seen[l][it.question_id];
      kc_of.emplace(it.question_id, it.kc_id);
    }
  }
  std::map<std::int32_t, std::vector<Probe>> probes;
  for (std::int32_t l : literacy_ids) {
    std::vector<std::pair<std::int64_t, std::int32_t>> ranked;
    for (auto [q, n] : seen[l]) ranked.emplace_back(-n, q);
    std::sort(ranked.begin(), ranked.end());
    auto& list = probes[l];
    for (std::size_t i = 0; i < ranked.size() && i < kMaxProbes; ++i) {
      list.push_back({ranked[i].second, kc_of[ranked[i].second]});
    }
    if (list.empty()) list.push_back({});
  }

  const std::size_t n_students = dataset.sequences.size();
  // acc[student][dim index][step]
  std::vector<std::vector<std::vector<double>>> acc(n_students);
  Trajectories result;
  if (with_states) result.states.resize(n_students);
  for (std::size_t s = 0; s < n_students; ++s) {
    acc[s].assign(literacy_ids.size(), std::vector<double>(dataset.sequences[s].steps.size(), 0.0));
    if (with_states) result.states[s].resize(dataset.sequences[s].steps.size());
  }

  const auto windows = data::make_windows(dataset.sequences, model.dims().max_seq_len);
  for (std::size_t start = 0; start < windows.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t count = std::min(static_cast<std::size_t>(batch_size), windows.size() - start);
    std::span<const data::Window> group(windows.data() + start, count);
    data::Batch base = data::collate(dataset, group);
    std::fill(base.valid_mask.begin(), base.valid_mask.end(), 0);

    if (with_states) {
      Tape tape(false);
      const TraceOutput out = forward(tape, model, base);
      const Index hidden = out.literacy_states.dim(2);
      const ad::Vector& st = out.literacy_states.data();
      for (std::size_t b = 0; b < count; ++b) {
        const data::Window& w = group[b];
        for (Index t = 0; t < w.length; ++t) {
          const Index off = (static_cast<Index>(b) * base.steps + t) * hidden;
          result.states[w.sequence][static_cast<std::size_t>(w.start + t)] =
              std::vector<double>(st.data() + off, st.data() + off + hidden);
        }
      }
    }

    for (std::size_t k = 0; k < literacy_ids.size(); ++k) {
      const std::int32_t l = literacy_ids[k];
      const auto& list = probes[l];
      for (const Probe& probe : list) {
        data::Batch batch = base;
        for (std::size_t i = 0; i < batch.step_mask.size(); ++i) {
          if (!batch.step_mask[i]) continue;
          batch.q_next[i] = probe.question;
          batch.kc_next[i] = probe.kc;
          batch.l_next[i] = l;
        }
        Tape tape(false);
        const ad::Vector& probs = forward(tape, model, batch).probs.data();
        for (std::size_t b = 0; b < count; ++b) {
          const data::Window& w = group[b];
          for (Index t = 0; t < w.length; ++t) {
            acc[w.sequence][k][static_cast<std::size_t>(w.start + t)] +=
                probs[static_cast<Index>(batch.cell(static_cast<Index>(b), t))];
          }
        }
      }
    }
  }

  for (std::size_t s = 0; s < n_students; ++s) {
    for (std::size_t k = 0; k < literacy_ids.size(); ++k) {
      const auto n_probes = static_cast<double>(probes[literacy_ids[k]].size());
      for (std::size_t t = 0; t < acc[s][k].size(); ++t) {
        result.points.push_back({dataset.sequences[s].student_id, static_cast<std::int64_t>(t + 1),
                                 literacy_ids[k], acc[s][k][t] / n_probes});
      }
    }
  }
  return result;
}

std::string trajectories_csv(const Trajectories& trajectories, const data::Dataset& dataset) {
  const data::IdMap& dims = dataset.has_literacy ? dataset.literacies : dataset.kcs;
  std::ostringstream os;
  os << "student_id,step,literacy_id,prob\n";
  char buf[64];
  for (const TrajectoryPoint& p : trajectories.points) {
    const auto end = std::to_chars(buf, buf + sizeof buf, p.prob).ptr;
    *end = '\0';
    os << data::quote_csv_field(p.student_id) << ',' << p.step << ',' << dims.original(p.literacy_id) << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace tlsqkt::model
