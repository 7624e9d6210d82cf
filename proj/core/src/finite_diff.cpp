// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/finite_diff.hpp"

#include <cmath>

#include "colora/error.hpp"

namespace colora {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& at,
                        double eps) {
  if (eps <= 0.0) throw ValueError("finite_diff_grad: eps must be positive");
  Tensor probe = at;
  std::vector<float> grad(at.size());
  for (size_t i = 0; i < at.size(); ++i) {
    const float orig = at[i];
    probe[i] = static_cast<float>(orig + eps);
    const double fp = f(probe);
    probe[i] = static_cast<float>(orig - eps);
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw ValueError("finite_diff_grad: function returned non-finite value");
    }
    grad[i] = static_cast<float>((fp - fm) / (2.0 * eps));
  }
  return Tensor::from_data_unchecked(at.shape(), std::move(grad));
}

}  // namespace colora
