// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "colora/tensor.hpp"

namespace colora {

/// Central-difference gradient oracle:
/// grad[i] = (f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps).
/// Throws ValueError on eps <= 0 or when f returns a non-finite value.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& at,
                        double eps = 1e-3);

}  // namespace colora
