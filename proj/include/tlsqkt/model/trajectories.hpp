// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlsqkt/data/dataset.hpp"
#include "tlsqkt/model/model.hpp"

namespace tlsqkt::model {

struct TrajectoryPoint {
  std::string student_id;
  std::int64_t step = 0;          // 1-based position in the student's sequence
  std::int32_t literacy_id = 0;   // dense id
  double prob = 0.0;
};

struct Trajectories {
  std::vector<TrajectoryPoint> points;  // student-major, then dimension, then step
  /// Per student (dataset order), per step: the ability state b_t. Filled only on request.
  std::vector<std::vector<std::vector<double>>> states;
};

/// Counterfactual probe: after each observed step t, the predicted probability
/// of answering an item of dimension l correctly next, averaged over the (up to
/// 8) most frequent questions seen with that dimension. Empty `literacy_ids`
/// means every dimension. Throws ad::IndexError for an unknown dimension.
Trajectories extract_trajectories(const Model& model, const data::Dataset& dataset,
                                  std::vector<std::int32_t> literacy_ids = {},
                                  bool with_states = false, Index batch_size = 64);

/// student_id,step,literacy_id,prob with original literacy ids.
std::string trajectories_csv(const Trajectories& trajectories, const data::Dataset& dataset);

}  // namespace tlsqkt::model
