// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colora/conv.hpp"
#include "colora/tensor.hpp"

namespace colora {

class GradTape;

/// Handle to a node on a GradTape.
struct Var {
  int node = -1;
  const GradTape* tape = nullptr;
};

/// Reverse-mode gradient tape.
///
/// Leaves carry a name and a trainable flag; every op appends a node holding
/// its output value and an adjoint callback. backward() sweeps the tape in
/// reverse and returns one gradient tensor per trainable leaf; frozen leaves
/// receive none and ops whose results cannot reach a trainable leaf are
/// skipped entirely. Gradients accumulate in double and are returned as f32
/// tensors with exactly the shape of the tensor they differentiate.
class GradTape {
 public:
  using BackwardFn =
      std::function<void(GradTape&, const std::vector<int>&, std::span<const double>)>;

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  /// Named leaf; trainable leaves appear in the gradient map.
  Var leaf(Tensor value, std::string name, bool trainable);

  /// Unnamed non-trainable leaf (inputs, label-independent constants).
  Var constant(Tensor value);

  /// Appends an op node. `scalar64` optionally carries the exact double value
  /// of a scalar reduction (float storage would lose precision the finite
  /// difference oracle needs).
  Var record(Tensor value, std::vector<int> parents, BackwardFn fn, double scalar64 = 0.0,
             bool has_scalar64 = false);

  const Tensor& value(const Var& v) const;
  const Tensor& value(int node) const;

  /// Exact double value of a scalar node when available, else the f32 value.
  double scalar(const Var& v) const;

  bool requires_grad(int node) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Reverse sweep from a scalar loss node. Returns name -> gradient for
  /// every trainable leaf (zero-filled when the leaf does not reach the
  /// loss). Throws ValueError if the loss is not on this tape or not scalar.
  std::map<std::string, Tensor> backward(const Var& loss);

  /// Gradient accumulation target for a parent node, or nullptr when the node
  /// does not require grad (frozen or constant ancestry). For backward fns.
  std::vector<double>* grad_target(int node);

 private:
  struct Node {
    Tensor value;
    double scalar64 = 0.0;
    bool has_scalar64 = false;
    std::string name;
    bool trainable = false;
    bool requires_grad = false;
    std::vector<int> parents;
    BackwardFn backward;
  };

  int check(const Var& v) const;

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

// ---- Taped ops -------------------------------------------------------------

Var conv2d(GradTape& t, Var x, Var w, std::optional<Var> bias, Padding padding,
           int stride = 1);
Var depthwise_conv2d(GradTape& t, Var x, Var w, Padding padding, int stride = 1);
Var pointwise_conv2d(GradTape& t, Var x, Var w);
Var add(GradTape& t, Var a, Var b);
Var add_channel_bias(GradTape& t, Var x, Var bias);
Var relu(GradTape& t, Var x);
Var max_pool2x2(GradTape& t, Var x);
Var global_avg_pool(GradTape& t, Var x);
Var flatten_batch(GradTape& t, Var x);
Var linear(GradTape& t, Var x, Var w, std::optional<Var> bias);
Var scalar_affine(GradTape& t, Var x, Var scale, Var shift);
Var softmax_cross_entropy(GradTape& t, Var logits, std::vector<int> labels);
Var sum(GradTape& t, Var x);
Var weighted_sum(GradTape& t, Var x, Tensor weights);

// ---- Pure counterparts (inference path) -------------------------------------

Tensor relu(const Tensor& x);
Tensor max_pool2x2(const Tensor& x);
Tensor global_avg_pool(const Tensor& x);
Tensor flatten_batch(const Tensor& x);
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias);
Tensor scalar_affine(const Tensor& x, float scale, float shift);

/// Row-wise softmax of (N, K) logits, computed in double.
Tensor softmax_rows(const Tensor& logits);

/// Mean cross-entropy of (N, K) logits against integer labels.
double cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Row-wise argmax; ties resolve to the lowest index.
std::vector<int> argmax_rows(const Tensor& scores);

double sum(const Tensor& x);

}  // namespace colora
