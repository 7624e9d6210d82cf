// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

#include "colora/rng.hpp"
#include "colora/tensor.hpp"

namespace colora {

/// Glorot-uniform draw in +-sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, uint64_t seed) {
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
  std::vector<float> v(Tensor::shape_size(shape));
  for (auto& x : v) x = static_cast<float>(rng.uniform(-limit, limit));
  return Tensor::from_data_unchecked(std::move(shape), std::move(v));
}

inline Tensor random_uniform(std::vector<int> shape, double lo, double hi, uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(Tensor::shape_size(shape));
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return Tensor::from_data_unchecked(std::move(shape), std::move(v));
}

}  // namespace colora
