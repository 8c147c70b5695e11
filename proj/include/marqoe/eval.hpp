// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// QoE prediction metrics: mean squared error and 10-bin category accuracy.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "marqoe/error.hpp"

namespace marqoe {

namespace detail {
inline void check_aligned(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size())
    throw InvalidInput(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + ")");
  if (a.empty()) throw InvalidInput(std::string(what) + ": empty series");
}
}  // namespace detail

inline double qoe_mse(std::span<const double> predicted, std::span<const double> realized) {
  detail::check_aligned(predicted, realized, "qoe_mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - realized[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

// Bin of a QoE value in [0, 1]; 1.0 shares the top bin.
inline int qoe_bin(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("QoE value " + std::to_string(v) + " outside [0, 1]");
  return std::min(static_cast<int>(std::floor(10.0 * v)), 9);
}

inline double category_accuracy(std::span<const double> predicted, std::span<const double> realized) {
  detail::check_aligned(predicted, realized, "category_accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (qoe_bin(predicted[i]) == qoe_bin(realized[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace marqoe
