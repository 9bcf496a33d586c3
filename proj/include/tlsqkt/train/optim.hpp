// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tlsqkt/autodiff/tape.hpp"

namespace tlsqkt::train {

using ad::Parameter;
using ad::Tensor;
using ad::Vector;

/// Mean masked binary cross-entropy over cells with mask set. Probabilities
/// are clamped to [1e-7, 1 - 1e-7]; the gradient is taken at the clamped
/// value. Throws ad::ContractError when no cell is selected.
Tensor bce_loss_masked(const Tensor& probs, std::span<const double> targets,
                       std::span<const std::uint8_t> mask);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Vector> m;
  std::vector<Vector> v;
  std::int64_t t = 0;
};

/// One bias-corrected Adam update in place. Zero-initialises `state` on first use.
void adam_step(std::span<Parameter* const> params, std::span<const Vector> grads, AdamState& state,
               const AdamConfig& config);

}  // namespace tlsqkt::train
