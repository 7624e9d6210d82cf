// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/adapters.hpp"

#include <algorithm>
#include <string>

#include "colora/error.hpp"
#include "colora/init.hpp"

namespace colora {

namespace {

bool all_zero(const Tensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](float v) { return v == 0.0f; });
}

int residual_channels(const CoLoRALayer& layer) {
  return layer.order == ResidualOrder::kDwThenPw ? layer.base.in_channels()
                                                 : layer.base.out_channels();
}

}  // namespace

void validate(const CoLoRALayer& layer) {
  const int c = layer.base.in_channels(), t = layer.base.out_channels();
  if (layer.kp.in_channels() != c || layer.kp.out_channels() != t) {
    throw ShapeError("CoLoRA kp must map C=" + std::to_string(c) + " to T=" + std::to_string(t) +
                     ", got " + layer.kp.weights.shape_str());
  }
  if (layer.kd.kh() != layer.base.kh() || layer.kd.kw() != layer.base.kw()) {
    throw ShapeError("CoLoRA kd spatial size must match base kernel");
  }
  if (layer.kd.channels() != residual_channels(layer)) {
    throw ShapeError("CoLoRA kd has " + std::to_string(layer.kd.channels()) +
                     " channels, order requires " + std::to_string(residual_channels(layer)));
  }
  if (layer.db && (layer.db->rank() != 1 || layer.db->dim(0) != t)) {
    throw ShapeError("CoLoRA bias delta must be (T)");
  }
  if (layer.merge_count < 0) throw ValueError("merge_count must be >= 0");
}

CoLoRALayer make_colora(ConvKernel base, ResidualOrder order, uint64_t seed, Padding padding,
                        int stride) {
  CoLoRALayer layer;
  layer.order = order;
  layer.padding = padding;
  layer.stride = stride;
  const int c = base.in_channels(), t = base.out_channels();
  const int h = base.kh(), w = base.kw();
  layer.base = std::move(base);
  layer.kp = PointwiseKernel(glorot_uniform({c, t}, c, t, seed));
  layer.kd = DepthwiseKernel(
      Tensor::zeros({h, w, order == ResidualOrder::kDwThenPw ? c : t}));
  if (layer.base.bias) layer.db = Tensor::zeros({t});
  validate(layer);
  return layer;
}

Tensor colora_forward(const CoLoRALayer& layer, const Tensor& x) {
  Tensor base_out = conv2d(x, layer.base, layer.padding, layer.stride);
  const bool residual_zero = all_zero(layer.kd.weights) && (!layer.db || all_zero(*layer.db));
  if (residual_zero) return base_out;

  Tensor res;
  if (layer.order == ResidualOrder::kDwThenPw) {
    res = pointwise_conv2d(depthwise_conv2d(x, layer.kd, layer.padding, layer.stride), layer.kp);
  } else {
    res = depthwise_conv2d(pointwise_conv2d(x, layer.kp), layer.kd, layer.padding, layer.stride);
  }
  if (layer.db) res = add_channel_bias(res, *layer.db);

  for (size_t i = 0; i < base_out.size(); ++i) base_out[i] += res[i];
  return base_out;
}

Var colora_forward(GradTape& t, Var x, Var base_w, std::optional<Var> base_b, Var kp, Var kd,
                   std::optional<Var> db, ResidualOrder order, Padding padding, int stride) {
  Var base_out = conv2d(t, x, base_w, base_b, padding, stride);
  Var res = order == ResidualOrder::kDwThenPw
                ? pointwise_conv2d(t, depthwise_conv2d(t, x, kd, padding, stride), kp)
                : depthwise_conv2d(t, pointwise_conv2d(t, x, kp), kd, padding, stride);
  if (db) res = add_channel_bias(t, res, *db);
  return add(t, base_out, res);
}

ConvKernel compose(const CoLoRALayer& layer) {
  validate(layer);
  const int h = layer.base.kh(), w = layer.base.kw();
  const int c = layer.base.in_channels(), t = layer.base.out_channels();
  Tensor dk = Tensor::zeros({h, w, c, t});
  for (int l = 0; l < h; ++l) {
    for (int m = 0; m < w; ++m) {
      for (int k = 0; k < c; ++k) {
        for (int tt = 0; tt < t; ++tt) {
          const float kp = layer.kp.weights.at(k, tt);
          const float kd = layer.order == ResidualOrder::kDwThenPw
                               ? layer.kd.weights.at(l, m, k)
                               : layer.kd.weights.at(l, m, tt);
          dk.at(l, m, k, tt) = kd * kp;
        }
      }
    }
  }
  return ConvKernel(std::move(dk), layer.db);
}

void merge(CoLoRALayer& layer) {
  ConvKernel delta = compose(layer);
  for (size_t i = 0; i < layer.base.weights.size(); ++i) {
    layer.base.weights[i] += delta.weights[i];
  }
  if (layer.db) {
    if (layer.base.bias) {
      for (size_t i = 0; i < layer.base.bias->size(); ++i) (*layer.base.bias)[i] += (*layer.db)[i];
    } else {
      layer.base.bias = *layer.db;
    }
  }
  layer.merge_count += 1;
}

void reinit(CoLoRALayer& layer, uint64_t seed) {
  const int c = layer.base.in_channels(), t = layer.base.out_channels();
  layer.kp = PointwiseKernel(glorot_uniform({c, t}, c, t, seed));
  layer.kd.weights.fill(0.0f);
  if (layer.db) layer.db->fill(0.0f);
}

CnnAdapterLayer make_cnn_adapter(ConvKernel base, int out_channels, uint64_t seed,
                                 Padding padding, int stride) {
  CnnAdapterLayer layer;
  const int c = base.out_channels();
  layer.base = std::move(base);
  layer.padding = padding;
  layer.stride = stride;
  if (out_channels == c) {
    Tensor ident = Tensor::zeros({c, c});
    for (int i = 0; i < c; ++i) ident.at(i, i) = 1.0f;
    layer.a = PointwiseKernel(std::move(ident));
  } else {
    layer.a = PointwiseKernel(glorot_uniform({c, out_channels}, c, out_channels, seed));
  }
  layer.norm_scale = Tensor::full({1}, 1.0f);
  layer.norm_shift = Tensor::zeros({1});
  return layer;
}

Tensor cnn_adapter_forward(const CnnAdapterLayer& layer, const Tensor& x) {
  if (layer.a.in_channels() != layer.base.out_channels()) {
    throw ShapeError("cnn adapter: base output channels must match mixing input");
  }
  Tensor u = relu(conv2d(x, layer.base, layer.padding, layer.stride));
  Tensor v = scalar_affine(u, layer.norm_scale[0], layer.norm_shift[0]);
  return pointwise_conv2d(v, layer.a);
}

Var cnn_adapter_forward(GradTape& t, Var x, Var base_w, std::optional<Var> base_b, Var a,
                        Var scale, Var shift, Padding padding, int stride) {
  Var u = relu(t, conv2d(t, x, base_w, base_b, padding, stride));
  Var v = scalar_affine(t, u, scale, shift);
  return pointwise_conv2d(t, v, a);
}

DenseLoraLayer make_dense_lora(Tensor w0, int rank, uint64_t seed) {
  if (w0.rank() != 2) throw ShapeError("dense LoRA w0 must be (k, d)");
  const int k = w0.dim(0), d = w0.dim(1);
  if (rank < 1 || rank > std::min(d, k)) {
    throw ValueError("dense LoRA rank " + std::to_string(rank) + " out of [1, min(d, k)]");
  }
  DenseLoraLayer layer;
  layer.w0 = std::move(w0);
  layer.a = glorot_uniform({rank, d}, d, rank, seed);
  layer.b = Tensor::zeros({k, rank});
  layer.rank = rank;
  return layer;
}

Tensor dense_lora_forward(const DenseLoraLayer& layer, const Tensor& x) {
  Tensor base = linear(x, layer.w0, nullptr);
  Tensor u = linear(x, layer.a, nullptr);
  Tensor v = linear(u, layer.b, nullptr);
  for (size_t i = 0; i < base.size(); ++i) base[i] += v[i];
  return base;
}

void dense_lora_merge(DenseLoraLayer& layer) {
  const int k = layer.w0.dim(0), d = layer.w0.dim(1), r = layer.rank;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int q = 0; q < r; ++q) {
        acc += static_cast<double>(layer.b.at(i, q)) * layer.a.at(q, j);
      }
      layer.w0.at(i, j) += static_cast<float>(acc);
    }
  }
  layer.b.fill(0.0f);
}

Var dense_lora_forward(GradTape& t, Var x, Var w0, Var a, Var b) {
  Var base = linear(t, x, w0, std::nullopt);
  Var delta = linear(t, linear(t, x, a, std::nullopt), b, std::nullopt);
  return add(t, base, delta);
}

MergeSweepResult merge_equivalence_sweep(int num_layers, uint64_t seed) {
  const int spatial[] = {1, 3, 5};
  const int channels[] = {1, 2, 4, 8};
  Rng rng(seed);
  MergeSweepResult result;

  for (int i = 0; i < num_layers; ++i) {
    const int h = spatial[rng.uniform_index(3)];
    const int w = spatial[rng.uniform_index(3)];
    const int c = channels[rng.uniform_index(4)];
    const int t = channels[rng.uniform_index(4)];
    const auto order = (i % 2 == 0) ? ResidualOrder::kPwThenDw : ResidualOrder::kDwThenPw;
    const auto padding = rng.uniform() < 0.5 ? Padding::kSame : Padding::kValid;
    const uint64_t s = rng.next_u64();

    ConvKernel base(random_uniform({h, w, c, t}, -1.0, 1.0, s),
                    random_uniform({t}, -0.5, 0.5, s + 1));
    CoLoRALayer layer = make_colora(std::move(base), order, s + 2, padding);
    layer.kd.weights = random_uniform(layer.kd.weights.shape(), -1.0, 1.0, s + 3);
    *layer.db = random_uniform({t}, -0.5, 0.5, s + 4);

    const int hw = std::max(h, 6 + static_cast<int>(rng.uniform_index(3)));
    Tensor x = random_uniform({hw, hw, c}, -1.0, 1.0, s + 5);

    Tensor via_branches = colora_forward(layer, x);
    CoLoRALayer merged = layer;
    merge(merged);
    Tensor via_merged = conv2d(x, merged.base, padding, layer.stride);

    result.max_rel_deviation =
        std::max(result.max_rel_deviation, rel_deviation(via_branches, via_merged));
    result.layers_checked += 1;
  }
  return result;
}

}  // namespace colora
