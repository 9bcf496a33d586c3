// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded literacy-tracing simulator. Each student has a general ability plus a
// per-dimension offset, and each dimension grows linearly over the sequence:
//
//   theta_l(t) = g + u_l + slope_l * (t - 1) / (seq_len - 1)
//   P(correct) = sigmoid(theta_l(t) - difficulty_q)
//
// Question q belongs to kc ((q-1) mod n_kcs) + 1 and literacy dimension
// ((q-1) mod n_literacy) + 1; each step draws a question uniformly.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tlsqkt/data/dataset.hpp"

namespace tlsqkt::data {

struct SyntheticConfig {
  std::int64_t n_students = 5224;
  std::int64_t n_questions = 16;
  std::int64_t n_kcs = 16;
  std::int64_t n_literacy = 6;
  std::int64_t seq_len = 16;
  std::uint64_t seed = 7;
  double ability_sd = 1.2;
  double dimension_sd = 0.6;
  double difficulty_sd = 1.5;
  double growth = 1.0;  // mean gain over a full sequence
  double growth_sd = 0.25;
  std::int32_t growing_dimension = 0;  // 0: all dimensions grow; k: only k grows
};

struct TruthRow {
  std::string student_id;
  std::int64_t step = 0;
  std::int32_t literacy_id = 0;
  double theta = 0.0;
};

struct SyntheticData {
  std::vector<Interaction> rows;
  std::vector<TruthRow> truth;  // every (student, step, dimension)
  std::vector<double> difficulty;               // index q - 1
  std::vector<std::int32_t> question_literacy;  // index q - 1
};

SyntheticData generate_synthetic_literacy(const SyntheticConfig& config);

/// One Bernoulli(sigmoid(theta - difficulty)) draw.
std::int32_t sample_response(std::mt19937_64& rng, double theta, double difficulty);

/// student_id,step,literacy_id,theta
std::string ground_truth_csv(const SyntheticData& data);

}  // namespace tlsqkt::data
