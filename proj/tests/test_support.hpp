// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "colora/conv.hpp"
#include "colora/init.hpp"
#include "colora/tensor.hpp"

namespace colora::testing {

// Independent dense-convolution reference: direct evaluation of
// out(i,j,t) = sum_{l,m,k} K(l,m,k,t) x(i*s + l - off, j*s + m - off, k) + b(t)
// with zero padding outside the input. Deliberately written as plain nested
// loops over a rank-3 input so library ops can be checked against it.
inline Tensor reference_conv2d(const Tensor& x, const ConvKernel& k, Padding padding,
                               int stride = 1) {
  const int H = x.dim(0), W = x.dim(1);
  const int kh = k.kh(), kw = k.kw(), C = k.in_channels(), T = k.out_channels();
  int out_h, out_w, off_h, off_w;
  if (padding == Padding::kSame) {
    out_h = (H + stride - 1) / stride;
    out_w = (W + stride - 1) / stride;
    off_h = kh / 2;
    off_w = kw / 2;
  } else {
    out_h = (H - kh) / stride + 1;
    out_w = (W - kw) / stride + 1;
    off_h = 0;
    off_w = 0;
  }
  Tensor out = Tensor::zeros({out_h, out_w, T});
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      for (int t = 0; t < T; ++t) {
        double acc = k.bias ? (*k.bias)[static_cast<size_t>(t)] : 0.0;
        for (int l = 0; l < kh; ++l) {
          for (int m = 0; m < kw; ++m) {
            const int ii = i * stride + l - off_h;
            const int jj = j * stride + m - off_w;
            if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
            for (int c = 0; c < C; ++c) {
              acc += static_cast<double>(k.weights.at(l, m, c, t)) * x.at(ii, jj, c);
            }
          }
        }
        out.at(i, j, t) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(static_cast<double>(a[i]) - b[i]));
  }
  return d;
}

}  // namespace colora::testing
