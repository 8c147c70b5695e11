// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Scalar random-walk Kalman filter tracking the residual bias of a predictor.
// The corrected prediction is base + bias; each observed error is measured
// against the corrected prediction, so it is the innovation directly.

#pragma once

#include <array>
#include <cmath>

#include "marqoe/error.hpp"

namespace marqoe {

struct KalmanParams {
  double process_noise{1e-4};      // Q, per step
  double measurement_noise{1e-2};  // R
  double initial_variance{1.0};    // P0

  void validate() const {
    if (!(process_noise > 0.0) || !(measurement_noise > 0.0) || !(initial_variance > 0.0))
      throw InvalidParameter("Kalman Q, R and P0 must be > 0");
  }
};

struct KalmanState {
  double bias{0.0};
  double variance{1.0};

  static KalmanState initial(const KalmanParams& p) { return {0.0, p.initial_variance}; }
};

inline KalmanState kalman_update(const KalmanState& s, double observed_error, const KalmanParams& p) {
  if (!std::isfinite(observed_error)) throw InvalidParameter("non-finite observed error");
  const double prior = s.variance + p.process_noise;
  const double gain = prior / (prior + p.measurement_noise);
  return {s.bias + gain * observed_error, (1.0 - gain) * prior};
}

// Posterior variance P* with P* = (1 - K*)(P* + Q), K* = (P* + Q)/(P* + Q + R).
inline double riccati_fixed_point(const KalmanParams& p) {
  const double q = p.process_noise, r = p.measurement_noise;
  const double prior = 0.5 * (q + std::sqrt(q * q + 4.0 * q * r));
  return prior - q;
}

// One filter per pose component: x, y, z, roll, pitch, yaw.
using KalmanBank = std::array<KalmanState, 6>;

inline KalmanBank initial_bank(const KalmanParams& p) {
  KalmanBank b;
  b.fill(KalmanState::initial(p));
  return b;
}

}  // namespace marqoe
