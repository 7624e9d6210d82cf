// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/adam.hpp"

#include <cmath>

#include "colora/error.hpp"

namespace colora {

void adam_step(Tensor& param, const Tensor& grad, AdamSlot& slot, const AdamConfig& cfg) {
  if (param.shape() != grad.shape()) {
    throw ShapeError("adam_step: gradient shape " + grad.shape_str() + " vs parameter " +
                     param.shape_str());
  }
  if (slot.m.empty()) {
    slot.m.assign(param.size(), 0.0);
    slot.v.assign(param.size(), 0.0);
  }
  slot.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(slot.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(slot.step));
  for (size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g;
    slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = slot.m[i] / bc1;
    const double v_hat = slot.v[i] / bc2;
    param[i] = static_cast<float>(param[i] - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

void AdamOptimizer::step(std::vector<ParamRef>& params, const std::map<std::string, Tensor>& grads) {
  for (ParamRef& p : params) {
    if (!p.trainable) continue;
    auto it = grads.find(p.name);
    if (it == grads.end()) continue;
    if (!it->second.all_finite()) {
      throw NumericError("non-finite gradient for parameter " + p.name);
    }
    adam_step(*p.tensor, it->second, slots_[p.name], cfg_);
  }
}

void AdamOptimizer::reset_prefix(const std::string& prefix) {
  for (auto it = slots_.begin(); it != slots_.end();) {
    if (it->first.rfind(prefix, 0) == 0) {
      it = slots_.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace colora
