// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "tlsqkt/autodiff/tape.hpp"

namespace tlsqkt::ad {

/// Builds a scalar on the given tape from the checked point.
using PointFunction = std::function<Tensor(Tape&, const Tensor&)>;
/// Builds a scalar on the given tape from parameters it registers itself.
using LossFunction = std::function<Tensor(Tape&)>;

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const PointFunction& f, const Vector& point, const Shape& shape,
                  double h = 1e-5);

/// Same measure over every coordinate of every listed parameter. Parameter
/// values are perturbed in place and restored.
double grad_check(const LossFunction& f, const std::vector<Parameter*>& params, double h = 1e-5);

}  // namespace tlsqkt::ad
