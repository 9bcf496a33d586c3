// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/train/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tlsqkt::train {

using ad::ContractError;
using ad::Index;
using ad::Tape;

constexpr double kProbFloor = 1e-7;
constexpr double kProbCeil = 1.0 - 1e-7;

Tensor bce_loss_masked(const Tensor& probs, std::span<const double> targets,
                       std::span<const std::uint8_t> mask) {
  const Index n = probs.numel();
  if (static_cast<Index>(targets.size()) != n || static_cast<Index>(mask.size()) != n) {
    throw ad::DimensionError("bce_loss_masked: targets/mask do not match probs " +
                             ad::to_string(probs.shape()));
  }
  const Vector& p = probs.data();
  double total = 0.0;
  Index count = 0;
  for (Index i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const double q = std::clamp(p[i], kProbFloor, kProbCeil);
    const double y = targets[static_cast<std::size_t>(i)];
    total -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
    ++count;
  }
  if (count == 0) throw ContractError("bce_loss_masked: mask selects no cells");
  Vector out(1);
  out[0] = total / static_cast<double>(count);
  const ad::NodeId ip = probs.node_id();
  std::vector<double> y(targets.begin(), targets.end());
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return probs.tape().record("bce_loss_masked", std::move(out), {1}, {ip},
                             [ip, count, y = std::move(y), m = std::move(m)](Tape& t, ad::NodeId self) {
    Vector* gp = t.grad_sink(ip);
    if (!gp) return;
    const double g = (*t.grad(self))[0] / static_cast<double>(count);
    const Vector& p = t.value(ip);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i]) continue;
      const double q = std::clamp(p[static_cast<Index>(i)], kProbFloor, kProbCeil);
      (*gp)[static_cast<Index>(i)] += g * (-y[i] / q + (1.0 - y[i]) / (1.0 - q));
    }
  });
}

void adam_step(std::span<Parameter* const> params, std::span<const Vector> grads, AdamState& state,
               const AdamConfig& config) {
  if (params.size() != grads.size()) throw ContractError("adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (Parameter* p : params) {
      state.m.push_back(Vector::Zero(p->size()));
      state.v.push_back(Vector::Zero(p->size()));
    }
  }
  if (state.m.size() != params.size()) throw ContractError("adam_step: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i]->size() || state.m[i].size() != params[i]->size()) {
      throw ContractError("adam_step: gradient shape mismatch for '" + params[i]->name + "'");
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Vector& m = state.m[i];
    Vector& v = state.v[i];
    m = config.beta1 * m + (1.0 - config.beta1) * grads[i];
    v = config.beta2 * v + (1.0 - config.beta2) * grads[i].cwiseAbs2();
    params[i]->value.array() -=
        config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.eps);
  }
}

}  // namespace tlsqkt::train
