// Copyright 2026 The Phaselearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "phaselearn/errors.hpp"

namespace phaselearn {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  /// Steps shorter than min_step * max(1, t_end) signal stiffness.
  double min_step = 1e-13;
  std::int64_t max_steps = 50'000'000;
};

struct OdeStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_evaluations = 0;
};

/// Adaptive Dormand-Prince 5(4) integration of y' = f(y) from 0 to t_end.
/// `Vec` is an Eigen column vector; `rhs(y, dydt)` writes f(y).
template <typename Vec, typename Rhs>
Vec integrate_dopri5(Rhs&& rhs, Vec y, double t_end, const OdeOptions& opt,
                     OdeStats* stats = nullptr) {
  OdeStats local;
  OdeStats& st = stats ? *stats : local;
  if (t_end == 0.0) return y;

  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2, (void)c3, (void)c4, (void)c5;

  const auto n = y.size();
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n);

  auto error_norm = [&](const Vec& err, const Vec& a, const Vec& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale = opt.atol + opt.rtol * std::max(std::abs(a(i)), std::abs(b(i)));
      worst = std::max(worst, std::abs(err(i)) / scale);
    }
    return worst;
  };

  rhs(y, k1);
  ++st.rhs_evaluations;

  // Initial step from the size of y and of its derivative.
  double h;
  {
    const double d0 = y.cwiseAbs().maxCoeff();
    const double d1 = k1.cwiseAbs().maxCoeff();
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, t_end);
  }

  double t = 0.0;
  const double h_floor = opt.min_step * std::max(1.0, t_end);
  while (t < t_end) {
    if (st.accepted + st.rejected >= opt.max_steps)
      throw NumericalError("integrator exceeded the step budget");
    if (t + h > t_end) h = t_end - t;

    tmp = y + h * (a21 * k1);
    rhs(tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    rhs(tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(tmp, k6);
    y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(y_new, k7);
    st.rhs_evaluations += 6;

    tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = error_norm(tmp, y, y_new);
    if (!std::isfinite(err)) throw NumericalError("integrator produced a non-finite state");

    if (err <= 1.0) {
      t = (t_end - t - h <= 0.0) ? t_end : t + h;
      y.swap(y_new);
      k1.swap(k7);
      ++st.accepted;
      const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
      h *= grow;
    } else {
      ++st.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < h_floor) throw NumericalError("integrator step size underflow (stiff generator?)");
    }
  }
  return y;
}

}  // namespace phaselearn
