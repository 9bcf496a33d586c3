// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tlsqkt::ad {
namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

// std::max drops NaN depending on argument order; keep it sticky.
void fold(double& worst, double err) {
  if (std::isnan(err) || std::isnan(worst)) {
    worst = std::numeric_limits<double>::quiet_NaN();
  } else {
    worst = std::max(worst, err);
  }
}

}  // namespace

double grad_check(const PointFunction& f, const Vector& point, const Shape& shape, double h) {
  auto eval = [&](const Vector& x) {
    Tape tape(false);
    return f(tape, tape.constant(x, shape)).item();
  };

  Vector analytic;
  {
    Tape tape;
    Tensor x = tape.variable(point, shape);
    Tensor y = f(tape, x);
    tape.backward(y);
    analytic = x.grad() ? *x.grad() : Vector::Zero(point.size());
  }

  double worst = 0.0;
  Vector probe = point;
  for (Index i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + h;
    const double up = eval(probe);
    probe[i] = point[i] - h;
    const double down = eval(probe);
    probe[i] = point[i];
    fold(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

double grad_check(const LossFunction& f, const std::vector<Parameter*>& params, double h) {
  auto eval = [&] {
    Tape tape(false);
    return f(tape).item();
  };

  std::vector<Vector> analytic;
  {
    Tape tape;
    Tensor y = f(tape);
    tape.backward(y);
    for (Parameter* p : params) analytic.push_back(tape.gradient(*p));
  }

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Vector& value = params[k]->value;
    for (Index i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + h;
      const double up = eval();
      value[i] = saved - h;
      const double down = eval();
      value[i] = saved;
      fold(worst, relative_error(analytic[k][i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

}  // namespace tlsqkt::ad
