// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace colora {

/// Dense N-dimensional array of 32-bit floats, row-major.
///
/// Shapes are lists of positive extents and product(shape) always equals the
/// number of stored values. Values loaded from external input are checked
/// finite at construction; internal ops may build tensors without the check
/// through the unchecked factory.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  static Tensor zeros(std::vector<int> shape);

  /// Constant-filled tensor.
  static Tensor full(std::vector<int> shape, float value);

  /// Adopts data; validates the size matches the shape and all values are
  /// finite. Throws ShapeError / ValueError.
  static Tensor from_data(std::vector<int> shape, std::vector<float> data);

  /// Adopts data with the shape/size check but without the finiteness scan.
  /// For op outputs whose inputs were already validated.
  static Tensor from_data_unchecked(std::vector<int> shape, std::vector<float> data);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  const float* raw() const { return data_.data(); }
  float* raw() { return data_.data(); }

  float operator[](size_t i) const { return data_[i]; }
  float& operator[](size_t i) { return data_[i]; }

  // Rank-specific element access, row-major.
  float& at(int i, int j) { return data_[idx2(i, j)]; }
  float at(int i, int j) const { return data_[idx2(i, j)]; }
  float& at(int i, int j, int k) { return data_[idx3(i, j, k)]; }
  float at(int i, int j, int k) const { return data_[idx3(i, j, k)]; }
  float& at(int i, int j, int k, int l) { return data_[idx4(i, j, k, l)]; }
  float at(int i, int j, int k, int l) const { return data_[idx4(i, j, k, l)]; }

  void fill(float value);
  bool all_finite() const;

  /// Exact elementwise equality, including shape.
  bool bit_equal(const Tensor& other) const;

  /// "(2, 3, 4)" style description for error messages.
  std::string shape_str() const;

  /// Number of elements implied by a shape; throws ValueError on non-positive
  /// extents.
  static size_t shape_size(const std::vector<int>& shape);

 private:
  size_t idx2(int i, int j) const {
    return static_cast<size_t>(i) * shape_[1] + j;
  }
  size_t idx3(int i, int j, int k) const {
    return (static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  size_t idx4(int i, int j, int k, int l) const {
    return ((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
  }

  std::vector<int> shape_;
  std::vector<float> data_;
};

/// Relative max-norm deviation: ||a-b||_inf / max(||a||_inf, ||b||_inf, floor).
/// Shapes must match. Used by merge-equivalence and gradient checks.
double rel_deviation(const Tensor& a, const Tensor& b, double floor = 1e-12);

}  // namespace colora
