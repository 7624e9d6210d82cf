// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "colora/error.hpp"

namespace colora {

size_t Tensor::shape_size(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ValueError("tensor extents must be positive, got " + std::to_string(d));
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  const size_t n = shape_size(shape);
  t.shape_ = std::move(shape);
  t.data_.assign(n, 0.0f);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, float value) {
  Tensor t = zeros(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> data) {
  Tensor t = from_data_unchecked(std::move(shape), std::move(data));
  if (!t.all_finite()) throw ValueError("tensor construction rejected non-finite value");
  return t;
}

Tensor Tensor::from_data_unchecked(std::vector<int> shape, std::vector<float> data) {
  const size_t n = shape_size(shape);
  if (n != data.size()) {
    throw ShapeError("tensor shape implies " + std::to_string(n) + " values, got " +
                     std::to_string(data.size()));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

bool Tensor::bit_equal(const Tensor& other) const {
  if (shape_ != other.shape_) return false;
  if (data_.empty()) return other.data_.empty();
  return std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

std::string Tensor::shape_str() const {
  std::string s = "(";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape_[i]);
  }
  s += ")";
  return s;
}

double rel_deviation(const Tensor& a, const Tensor& b, double floor) {
  if (a.shape() != b.shape()) {
    throw ShapeError("rel_deviation: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  double max_diff = 0.0, max_mag = floor;
  for (size_t i = 0; i < a.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(static_cast<double>(a[i]) - b[i]));
    max_mag = std::max({max_mag, std::abs(static_cast<double>(a[i])),
                        std::abs(static_cast<double>(b[i]))});
  }
  return max_diff / max_mag;
}

}  // namespace colora
