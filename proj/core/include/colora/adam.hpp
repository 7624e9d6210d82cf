// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "colora/model.hpp"
#include "colora/tensor.hpp"

namespace colora {

/// Adam defaults: lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter moment state with its own step counter, so resetting one
/// parameter restarts its bias correction.
struct AdamSlot {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// One bias-corrected update: m and v are updated in place, then
/// param -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(Tensor& param, const Tensor& grad, AdamSlot& slot, const AdamConfig& cfg);

/// Keyed optimizer over a graph's named parameters. Frozen parameters are
/// never touched, even when a gradient is supplied for them. Throws
/// NumericError on non-finite gradients.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg) : cfg_(cfg) {}

  void step(std::vector<ParamRef>& params, const std::map<std::string, Tensor>& grads);

  /// Drops moment state (and step counter) for one parameter.
  void reset(const std::string& name) { slots_.erase(name); }

  /// Drops state for every parameter whose name starts with the prefix.
  void reset_prefix(const std::string& prefix);

  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::unordered_map<std::string, AdamSlot> slots_;
};

}  // namespace colora
