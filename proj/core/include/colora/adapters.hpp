// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>

#include "colora/autograd.hpp"
#include "colora/conv.hpp"
#include "colora/tensor.hpp"

namespace colora {

/// Factorization order of the separable residual.
///
/// kDwThenPw: residual = pointwise(depthwise(x, kd), kp), kd over the C input
/// channels. kPwThenDw (Inception-style, the default): residual =
/// depthwise(pointwise(x, kp), kd), kd over the T output channels. The two
/// orders have different trainable counts when C != T (hwC + CT vs hwT + CT).
enum class ResidualOrder { kDwThenPw, kPwThenDw };

/// A frozen convolution plus a trainable separable residual that merges
/// exactly into the base kernel.
///
/// Invariants: kd's spatial extent equals the base kernel's; kd's channel
/// count is C for kDwThenPw and T for kPwThenDw; right after construction or
/// reinit, kd and db are all zeros so the layer output equals the base-only
/// output bit for bit.
struct CoLoRALayer {
  ConvKernel base;
  PointwiseKernel kp;
  DepthwiseKernel kd;
  std::optional<Tensor> db;  // per-output-channel bias delta
  ResidualOrder order = ResidualOrder::kPwThenDw;
  int merge_count = 0;
  Padding padding = Padding::kSame;
  int stride = 1;
};

/// Builds a CoLoRA layer around a frozen base kernel: Glorot-uniform kp
/// (fan_in = C, fan_out = T), zero kd. The bias delta is enabled exactly when
/// the base kernel has a bias, and starts at zero.
CoLoRALayer make_colora(ConvKernel base, ResidualOrder order, uint64_t seed,
                        Padding padding = Padding::kSame, int stride = 1);

/// Validates shape invariants; throws ShapeError on violation.
void validate(const CoLoRALayer& layer);

/// Frozen branch plus residual branch. When kd and db are all zeros the
/// residual is skipped so the result bit-equals conv2d(x, base).
Tensor colora_forward(const CoLoRALayer& layer, const Tensor& x);

/// Taped forward for training; always records the residual branch so
/// gradients reach kp/kd/db.
Var colora_forward(GradTape& t, Var x, Var base_w, std::optional<Var> base_b, Var kp, Var kd,
                   std::optional<Var> db, ResidualOrder order, Padding padding, int stride);

/// Collapses the residual pair into a dense kernel:
/// kDwThenPw: dK(l,m,k,t) = kd(l,m,k) * kp(k,t)
/// kPwThenDw: dK(l,m,k,t) = kp(k,t) * kd(l,m,t)
/// The bias part is db, passed through.
ConvKernel compose(const CoLoRALayer& layer);

/// base += compose(layer); increments merge_count. kp/kd/db are untouched
/// (reinit is a separate, explicit step).
void merge(CoLoRALayer& layer);

/// Fresh Glorot kp from the seed, kd and db back to zero. Afterwards the
/// layer output equals the base-only output exactly.
void reinit(CoLoRALayer& layer, uint64_t seed);

/// 1x1 adapter after a frozen convolution: pointwise mixing of the ReLU'd
/// base output, preceded by a 2-parameter affine normalization.
struct CnnAdapterLayer {
  ConvKernel base;
  PointwiseKernel a;
  Tensor norm_scale;  // 1 element
  Tensor norm_shift;  // 1 element
  Padding padding = Padding::kSame;
  int stride = 1;
};

/// Identity mixing matrix when square, Glorot otherwise; affine starts as the
/// identity (scale 1, shift 0).
CnnAdapterLayer make_cnn_adapter(ConvKernel base, int out_channels, uint64_t seed,
                                 Padding padding = Padding::kSame, int stride = 1);

Tensor cnn_adapter_forward(const CnnAdapterLayer& layer, const Tensor& x);

Var cnn_adapter_forward(GradTape& t, Var x, Var base_w, std::optional<Var> base_b, Var a,
                        Var scale, Var shift, Padding padding, int stride);

/// Dense-layer low-rank adapter: y = w0 x + b (a x), w0 (k x d) frozen,
/// a (r x d), b (k x r) starting at zero.
struct DenseLoraLayer {
  Tensor w0;
  Tensor a;
  Tensor b;
  int rank = 0;
};

/// Glorot a, zero b. Throws ValueError when rank is not in [1, min(d, k)].
DenseLoraLayer make_dense_lora(Tensor w0, int rank, uint64_t seed);

/// x is (N, d); returns (N, k).
Tensor dense_lora_forward(const DenseLoraLayer& layer, const Tensor& x);

/// w0 += b a, then b is zeroed so the forward map is unchanged.
void dense_lora_merge(DenseLoraLayer& layer);

Var dense_lora_forward(GradTape& t, Var x, Var w0, Var a, Var b);

/// Merge-equivalence check over randomly drawn layers (spatial sizes 1/3/5,
/// channel counts 1/2/4/8, both orders, both paddings): compares the
/// frozen+residual forward against the merged-kernel forward and reports the
/// worst relative deviation.
struct MergeSweepResult {
  int layers_checked = 0;
  double max_rel_deviation = 0.0;
};

MergeSweepResult merge_equivalence_sweep(int num_layers, uint64_t seed);

}  // namespace colora
