// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// Canonical interaction records, per-student sequences, and the canonical CSV
// format:
//
//   student_id,order,question_id,kc_id,literacy_id,correct
//
// literacy_id may be empty. Ids in the file are the original ids; in memory
// they are densely re-indexed from 1 (0 is padding) in ascending original-id
// order, so the same file always yields the same dense ids.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlsqkt::data {

/// Load failure carrying the 1-based file line that caused it (0 if none).
class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Interaction {
  std::string student_id;
  std::int64_t order = 0;
  std::int32_t question_id = 0;
  std::int32_t kc_id = 0;
  std::optional<std::int32_t> literacy_id;
  std::int32_t correct = 0;
};

struct Sequence {
  std::string student_id;
  std::vector<Interaction> steps;
};

struct DatasetStats {
  std::int64_t n_students = 0;
  std::int64_t n_questions = 0;
  std::int64_t n_kcs = 0;
  std::int64_t n_interactions = 0;
  std::optional<std::int64_t> n_literacy;
};

/// One kind of id: dense index d (>= 1) <-> original id originals[d - 1].
class IdMap {
 public:
  IdMap() = default;
  explicit IdMap(std::vector<std::int64_t> sorted_originals);

  std::int32_t dense(std::int64_t original) const;
  std::int64_t original(std::int32_t dense) const;
  std::int32_t size() const { return static_cast<std::int32_t>(originals_.size()); }
  const std::vector<std::int64_t>& originals() const { return originals_; }

 private:
  std::vector<std::int64_t> originals_;
  std::map<std::int64_t, std::int32_t> lookup_;
};

/// Sequences in first-appearance order of students, steps sorted by order.
struct Dataset {
  std::vector<Sequence> sequences;  // dense ids
  IdMap questions;
  IdMap kcs;
  IdMap literacies;
  bool has_literacy = false;
  DatasetStats stats;

  /// Vocabulary of the literacy channel. Without literacy labels the KC ids
  /// stand in for literacy ids.
  std::int32_t n_literacy_ids() const { return has_literacy ? literacies.size() : kcs.size(); }
};

/// Parses canonical CSV text. Rows with the same (student, order) are an error.
Dataset parse_canonical(const std::string& text);
Dataset load_canonical(const std::filesystem::path& path);

/// Builds a dataset (dense re-indexing, grouping, stats) from raw records.
Dataset build_dataset(std::vector<Interaction> rows);

/// Canonical CSV text with original ids.
std::string canonical_csv(const Dataset& dataset);
/// original_id,dense_id,kind rows for question, kc and literacy ids.
std::string id_map_csv(const Dataset& dataset);

DatasetStats compute_stats(const Dataset& dataset);

/// Keeps `n` students chosen uniformly under `seed`, preserving their order.
Dataset subsample_students(const Dataset& dataset, std::size_t n, std::uint64_t seed);

/// Keeps the listed sequences (by index), re-using the id maps.
Dataset select_sequences(const Dataset& dataset, const std::vector<std::size_t>& indices);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace tlsqkt::data
