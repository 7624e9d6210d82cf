// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/conv.hpp"

#include <string>

#include "colora/error.hpp"

namespace colora {

namespace {

struct BatchView {
  int n, h, w, c;
  bool batched;
};

BatchView batch_view(const Tensor& x) {
  if (x.rank() == 3) return {1, x.dim(0), x.dim(1), x.dim(2), false};
  if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), true};
  throw ShapeError("convolution input must be rank 3 or 4, got " + x.shape_str());
}

std::vector<int> out_shape(const BatchView& v, int oh, int ow, int oc) {
  if (v.batched) return {v.n, oh, ow, oc};
  return {oh, ow, oc};
}

void check_channels(int have, int want, const char* what) {
  if (have != want) {
    throw ShapeError(std::string(what) + ": input has " + std::to_string(have) +
                     " channels, kernel expects " + std::to_string(want));
  }
}

}  // namespace

ConvKernel::ConvKernel(Tensor w, std::optional<Tensor> b)
    : weights(std::move(w)), bias(std::move(b)) {
  if (weights.rank() != 4) {
    throw ShapeError("conv kernel weights must be (h, w, C, T), got " + weights.shape_str());
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != out_channels())) {
    throw ShapeError("conv bias must be (T), got " + bias->shape_str());
  }
}

DepthwiseKernel::DepthwiseKernel(Tensor w) : weights(std::move(w)) {
  if (weights.rank() != 3) {
    throw ShapeError("depthwise kernel weights must be (h, w, G), got " + weights.shape_str());
  }
}

PointwiseKernel::PointwiseKernel(Tensor w) : weights(std::move(w)) {
  if (weights.rank() != 2) {
    throw ShapeError("pointwise kernel weights must be (C, T), got " + weights.shape_str());
  }
}

ConvGeometry conv_geometry(int in_h, int in_w, int kh, int kw, Padding padding, int stride) {
  if (stride < 1) throw ValueError("stride must be >= 1");
  ConvGeometry g;
  if (padding == Padding::kSame) {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    g.off_h = kh / 2;
    g.off_w = kw / 2;
  } else {
    if (kh > in_h || kw > in_w) {
      throw ShapeError("valid padding: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                       " larger than input " + std::to_string(in_h) + "x" + std::to_string(in_w));
    }
    g.out_h = (in_h - kh) / stride + 1;
    g.out_w = (in_w - kw) / stride + 1;
    g.off_h = 0;
    g.off_w = 0;
  }
  return g;
}

Tensor conv2d(const Tensor& x, const ConvKernel& k, Padding padding, int stride) {
  const BatchView v = batch_view(x);
  check_channels(v.c, k.in_channels(), "conv2d");
  const int kh = k.kh(), kw = k.kw(), C = k.in_channels(), T = k.out_channels();
  const ConvGeometry g = conv_geometry(v.h, v.w, kh, kw, padding, stride);

  Tensor out = Tensor::zeros(out_shape(v, g.out_h, g.out_w, T));
  const float* xp = x.raw();
  const float* wp = k.weights.raw();
  float* op = out.raw();
  std::vector<double> acc(static_cast<size_t>(T));

  for (int n = 0; n < v.n; ++n) {
    const float* xn = xp + static_cast<size_t>(n) * v.h * v.w * v.c;
    for (int i = 0; i < g.out_h; ++i) {
      for (int j = 0; j < g.out_w; ++j) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int l = 0; l < kh; ++l) {
          const int ii = i * stride + l - g.off_h;
          if (ii < 0 || ii >= v.h) continue;
          for (int m = 0; m < kw; ++m) {
            const int jj = j * stride + m - g.off_w;
            if (jj < 0 || jj >= v.w) continue;
            const float* xrow = xn + (static_cast<size_t>(ii) * v.w + jj) * C;
            const float* wrow = wp + (static_cast<size_t>(l) * kw + m) * C * T;
            for (int c = 0; c < C; ++c) {
              const double xv = xrow[c];
              const float* wt = wrow + static_cast<size_t>(c) * T;
              for (int t = 0; t < T; ++t) acc[static_cast<size_t>(t)] += xv * wt[t];
            }
          }
        }
        float* orow = op + ((static_cast<size_t>(n) * g.out_h + i) * g.out_w + j) * T;
        if (k.bias) {
          const float* bp = k.bias->raw();
          for (int t = 0; t < T; ++t)
            orow[t] = static_cast<float>(acc[static_cast<size_t>(t)] + bp[t]);
        } else {
          for (int t = 0; t < T; ++t) orow[t] = static_cast<float>(acc[static_cast<size_t>(t)]);
        }
      }
    }
  }
  return out;
}

Tensor depthwise_conv2d(const Tensor& x, const DepthwiseKernel& k, Padding padding, int stride) {
  const BatchView v = batch_view(x);
  check_channels(v.c, k.channels(), "depthwise_conv2d");
  const int kh = k.kh(), kw = k.kw(), G = k.channels();
  const ConvGeometry g = conv_geometry(v.h, v.w, kh, kw, padding, stride);

  Tensor out = Tensor::zeros(out_shape(v, g.out_h, g.out_w, G));
  const float* xp = x.raw();
  const float* wp = k.weights.raw();
  float* op = out.raw();
  std::vector<double> acc(static_cast<size_t>(G));

  for (int n = 0; n < v.n; ++n) {
    const float* xn = xp + static_cast<size_t>(n) * v.h * v.w * v.c;
    for (int i = 0; i < g.out_h; ++i) {
      for (int j = 0; j < g.out_w; ++j) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int l = 0; l < kh; ++l) {
          const int ii = i * stride + l - g.off_h;
          if (ii < 0 || ii >= v.h) continue;
          for (int m = 0; m < kw; ++m) {
            const int jj = j * stride + m - g.off_w;
            if (jj < 0 || jj >= v.w) continue;
            const float* xrow = xn + (static_cast<size_t>(ii) * v.w + jj) * G;
            const float* wrow = wp + (static_cast<size_t>(l) * kw + m) * G;
            for (int c = 0; c < G; ++c) acc[static_cast<size_t>(c)] += static_cast<double>(xrow[c]) * wrow[c];
          }
        }
        float* orow = op + ((static_cast<size_t>(n) * g.out_h + i) * g.out_w + j) * G;
        for (int c = 0; c < G; ++c) orow[c] = static_cast<float>(acc[static_cast<size_t>(c)]);
      }
    }
  }
  return out;
}

Tensor pointwise_conv2d(const Tensor& x, const PointwiseKernel& k) {
  const BatchView v = batch_view(x);
  check_channels(v.c, k.in_channels(), "pointwise_conv2d");
  const int C = k.in_channels(), T = k.out_channels();

  Tensor out = Tensor::zeros(out_shape(v, v.h, v.w, T));
  const float* xp = x.raw();
  const float* wp = k.weights.raw();
  float* op = out.raw();
  const size_t pixels = static_cast<size_t>(v.n) * v.h * v.w;
  std::vector<double> acc(static_cast<size_t>(T));

  for (size_t p = 0; p < pixels; ++p) {
    const float* xrow = xp + p * C;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int c = 0; c < C; ++c) {
      const double xv = xrow[c];
      const float* wt = wp + static_cast<size_t>(c) * T;
      for (int t = 0; t < T; ++t) acc[static_cast<size_t>(t)] += xv * wt[t];
    }
    float* orow = op + p * T;
    for (int t = 0; t < T; ++t) orow[t] = static_cast<float>(acc[static_cast<size_t>(t)]);
  }
  return out;
}

void conv2d_backward(const Tensor& x, const ConvKernel& k, Padding padding, int stride,
                     std::span<const double> gy, std::vector<double>* gx,
                     std::vector<double>* gk, std::vector<double>* gb) {
  if (!gx && !gk && !gb) return;
  const BatchView v = batch_view(x);
  const int kh = k.kh(), kw = k.kw(), C = k.in_channels(), T = k.out_channels();
  const ConvGeometry g = conv_geometry(v.h, v.w, kh, kw, padding, stride);
  const float* xp = x.raw();
  const float* wp = k.weights.raw();

  for (int n = 0; n < v.n; ++n) {
    for (int i = 0; i < g.out_h; ++i) {
      for (int j = 0; j < g.out_w; ++j) {
        const double* gyrow = gy.data() + ((static_cast<size_t>(n) * g.out_h + i) * g.out_w + j) * T;
        if (gb) {
          for (int t = 0; t < T; ++t) (*gb)[static_cast<size_t>(t)] += gyrow[t];
        }
        if (!gx && !gk) continue;
        for (int l = 0; l < kh; ++l) {
          const int ii = i * stride + l - g.off_h;
          if (ii < 0 || ii >= v.h) continue;
          for (int m = 0; m < kw; ++m) {
            const int jj = j * stride + m - g.off_w;
            if (jj < 0 || jj >= v.w) continue;
            const size_t xbase = (static_cast<size_t>(n) * v.h * v.w +
                                  static_cast<size_t>(ii) * v.w + jj) * C;
            const size_t wbase = (static_cast<size_t>(l) * kw + m) * C * T;
            for (int c = 0; c < C; ++c) {
              const float* wt = wp + wbase + static_cast<size_t>(c) * T;
              if (gk) {
                const double xv = xp[xbase + static_cast<size_t>(c)];
                double* gkt = gk->data() + wbase + static_cast<size_t>(c) * T;
                for (int t = 0; t < T; ++t) gkt[t] += xv * gyrow[t];
              }
              if (gx) {
                double s = 0.0;
                for (int t = 0; t < T; ++t) s += gyrow[t] * wt[t];
                (*gx)[xbase + static_cast<size_t>(c)] += s;
              }
            }
          }
        }
      }
    }
  }
}

void depthwise_conv2d_backward(const Tensor& x, const DepthwiseKernel& k, Padding padding,
                               int stride, std::span<const double> gy,
                               std::vector<double>* gx, std::vector<double>* gk) {
  if (!gx && !gk) return;
  const BatchView v = batch_view(x);
  const int kh = k.kh(), kw = k.kw(), G = k.channels();
  const ConvGeometry g = conv_geometry(v.h, v.w, kh, kw, padding, stride);
  const float* xp = x.raw();
  const float* wp = k.weights.raw();

  for (int n = 0; n < v.n; ++n) {
    for (int i = 0; i < g.out_h; ++i) {
      for (int j = 0; j < g.out_w; ++j) {
        const double* gyrow = gy.data() + ((static_cast<size_t>(n) * g.out_h + i) * g.out_w + j) * G;
        for (int l = 0; l < kh; ++l) {
          const int ii = i * stride + l - g.off_h;
          if (ii < 0 || ii >= v.h) continue;
          for (int m = 0; m < kw; ++m) {
            const int jj = j * stride + m - g.off_w;
            if (jj < 0 || jj >= v.w) continue;
            const size_t xbase = (static_cast<size_t>(n) * v.h * v.w +
                                  static_cast<size_t>(ii) * v.w + jj) * G;
            const size_t wbase = (static_cast<size_t>(l) * kw + m) * G;
            for (int c = 0; c < G; ++c) {
              if (gk) (*gk)[wbase + static_cast<size_t>(c)] += static_cast<double>(xp[xbase + static_cast<size_t>(c)]) * gyrow[c];
              if (gx) (*gx)[xbase + static_cast<size_t>(c)] += gyrow[c] * static_cast<double>(wp[wbase + static_cast<size_t>(c)]);
            }
          }
        }
      }
    }
  }
}

void pointwise_conv2d_backward(const Tensor& x, const PointwiseKernel& k,
                               std::span<const double> gy, std::vector<double>* gx,
                               std::vector<double>* gk) {
  if (!gx && !gk) return;
  const BatchView v = batch_view(x);
  const int C = k.in_channels(), T = k.out_channels();
  const float* xp = x.raw();
  const float* wp = k.weights.raw();
  const size_t pixels = static_cast<size_t>(v.n) * v.h * v.w;

  for (size_t p = 0; p < pixels; ++p) {
    const float* xrow = xp + p * C;
    const double* gyrow = gy.data() + p * T;
    for (int c = 0; c < C; ++c) {
      const float* wt = wp + static_cast<size_t>(c) * T;
      if (gk) {
        const double xv = xrow[c];
        double* gkt = gk->data() + static_cast<size_t>(c) * T;
        for (int t = 0; t < T; ++t) gkt[t] += xv * gyrow[t];
      }
      if (gx) {
        double s = 0.0;
        for (int t = 0; t < T; ++t) s += gyrow[t] * wt[t];
        (*gx)[p * C + static_cast<size_t>(c)] += s;
      }
    }
  }
}

}  // namespace colora
