// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "colora/tensor.hpp"

namespace colora {

enum class Padding { kSame, kValid };

/// Dense convolution kernel: weights (h, w, C, T), optional bias (T).
struct ConvKernel {
  Tensor weights;
  std::optional<Tensor> bias;

  ConvKernel() = default;
  ConvKernel(Tensor w, std::optional<Tensor> b = std::nullopt);

  int kh() const { return weights.dim(0); }
  int kw() const { return weights.dim(1); }
  int in_channels() const { return weights.dim(2); }
  int out_channels() const { return weights.dim(3); }
};

/// Depthwise kernel: weights (h, w, G), one spatial filter per channel.
struct DepthwiseKernel {
  Tensor weights;

  DepthwiseKernel() = default;
  explicit DepthwiseKernel(Tensor w);

  int kh() const { return weights.dim(0); }
  int kw() const { return weights.dim(1); }
  int channels() const { return weights.dim(2); }
};

/// Pointwise (1x1) kernel: weights (C, T), purely cross-channel.
struct PointwiseKernel {
  Tensor weights;

  PointwiseKernel() = default;
  explicit PointwiseKernel(Tensor w);

  int in_channels() const { return weights.dim(0); }
  int out_channels() const { return weights.dim(1); }
};

/// Output geometry of a 2D convolution. The kernel origin for `same` padding
/// sits at (floor(h/2), floor(w/2)); kernel offsets are added to the input
/// index (cross-correlation in the ML convention).
struct ConvGeometry {
  int out_h = 0;
  int out_w = 0;
  int off_h = 0;  // origin offset subtracted from i + l
  int off_w = 0;
};

/// Computes output extents; throws ShapeError if the kernel does not fit under
/// `valid` padding.
ConvGeometry conv_geometry(int in_h, int in_w, int kh, int kw, Padding padding, int stride);

/// Dense 2D convolution. x is (H, W, C) or batched (N, H, W, C); the output
/// has matching rank with T channels. Bias, when present, is added per output
/// channel. Accumulation is in double.
Tensor conv2d(const Tensor& x, const ConvKernel& k, Padding padding, int stride = 1);

/// Per-channel spatial convolution; channel g of the output depends only on
/// channel g of the input.
Tensor depthwise_conv2d(const Tensor& x, const DepthwiseKernel& k, Padding padding,
                        int stride = 1);

/// Channel mixing at each location: out(i,j,t) = sum_k Kp(k,t) * x(i,j,k).
Tensor pointwise_conv2d(const Tensor& x, const PointwiseKernel& k);

// Reverse-mode adjoints. `gy` is the output gradient (flat, double); non-null
// buffers receive accumulated input/kernel/bias gradients and must be sized
// like the corresponding tensor. Null buffers are skipped, which is how
// frozen tensors avoid gradient work.
void conv2d_backward(const Tensor& x, const ConvKernel& k, Padding padding, int stride,
                     std::span<const double> gy, std::vector<double>* gx,
                     std::vector<double>* gk, std::vector<double>* gb);

void depthwise_conv2d_backward(const Tensor& x, const DepthwiseKernel& k, Padding padding,
                               int stride, std::span<const double> gy,
                               std::vector<double>* gx, std::vector<double>* gk);

void pointwise_conv2d_backward(const Tensor& x, const PointwiseKernel& k,
                               std::span<const double> gy, std::vector<double>* gx,
                               std::vector<double>* gk);

}  // namespace colora
