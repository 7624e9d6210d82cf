// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "colora/adapters.hpp"
#include "colora/error.hpp"
#include "colora/init.hpp"
#include "test_support.hpp"

using namespace colora;
using colora::testing::max_abs_diff;

namespace {

CoLoRALayer random_layer(int h, int c, int t, ResidualOrder order, uint64_t seed,
                         Padding padding = Padding::kSame) {
  ConvKernel base(random_uniform({h, h, c, t}, -1, 1, seed), random_uniform({t}, -0.5, 0.5, seed + 1));
  CoLoRALayer layer = make_colora(std::move(base), order, seed + 2, padding);
  layer.kd.weights = random_uniform(layer.kd.weights.shape(), -1, 1, seed + 3);
  *layer.db = random_uniform({t}, -0.5, 0.5, seed + 4);
  return layer;
}

}  // namespace

TEST_CASE("fresh layers start with zero residual and Glorot kp") {
  const int c = 3, t = 5;
  ConvKernel base(random_uniform({3, 3, c, t}, -1, 1, 1), Tensor::zeros({t}));
  const CoLoRALayer layer = make_colora(base, ResidualOrder::kPwThenDw, 42);

  for (size_t i = 0; i < layer.kd.weights.size(); ++i) CHECK(layer.kd.weights[i] == 0.0f);
  REQUIRE(layer.db.has_value());
  for (size_t i = 0; i < layer.db->size(); ++i) CHECK((*layer.db)[i] == 0.0f);
  CHECK(layer.kd.channels() == t);  // PwThenDw: depthwise over output channels

  const double bound = std::sqrt(6.0 / (c + t));
  for (size_t i = 0; i < layer.kp.weights.size(); ++i) {
    CHECK(std::abs(layer.kp.weights[i]) <= bound);
  }

  const CoLoRALayer again = make_colora(base, ResidualOrder::kPwThenDw, 42);
  CHECK(layer.kp.weights.bit_equal(again.kp.weights));

  const CoLoRALayer other = make_colora(base, ResidualOrder::kDwThenPw, 42);
  CHECK(other.kd.channels() == c);

  ConvKernel no_bias(random_uniform({3, 3, c, t}, -1, 1, 2));
  CHECK_FALSE(make_colora(no_bias, ResidualOrder::kPwThenDw, 1).db.has_value());
}

TEST_CASE("zero residual forwards bit-equal the base conv") {
  const Tensor x = random_uniform({6, 6, 3}, -1, 1, 7);
  ConvKernel base(random_uniform({3, 3, 3, 4}, -1, 1, 8), random_uniform({4}, -1, 1, 9));
  const CoLoRALayer layer = make_colora(base, ResidualOrder::kPwThenDw, 10);
  CHECK(colora_forward(layer, x).bit_equal(conv2d(x, layer.base, Padding::kSame)));
}

TEST_CASE("residual-only layer equals the separable chain plus bias delta") {
  const Tensor x = random_uniform({5, 5, 2}, -1, 1, 11);
  CoLoRALayer layer = random_layer(3, 2, 3, ResidualOrder::kDwThenPw, 12);
  layer.base.weights.fill(0.0f);
  layer.base.bias->fill(0.0f);

  const Tensor got = colora_forward(layer, x);
  Tensor want = pointwise_conv2d(depthwise_conv2d(x, layer.kd, Padding::kSame), layer.kp);
  want = add_channel_bias(want, *layer.db);
  CHECK(max_abs_diff(got, want) < 1e-6);
}

TEST_CASE("forward equals base plus composed-kernel conv for both orders") {
  const Tensor x = random_uniform({6, 6, 2}, -1, 1, 13);
  for (auto order : {ResidualOrder::kDwThenPw, ResidualOrder::kPwThenDw}) {
    const CoLoRALayer layer = random_layer(3, 2, 3, order, 14 + static_cast<uint64_t>(order));
    const Tensor got = colora_forward(layer, x);
    Tensor want = conv2d(x, layer.base, Padding::kSame);
    const Tensor delta = conv2d(x, compose(layer), Padding::kSame);
    for (size_t i = 0; i < want.size(); ++i) want[i] += delta[i];
    CHECK(rel_deviation(got, want) < 1e-5);
  }
}

TEST_CASE("compose: zeros, 1x1 diagonal product, and separable equivalence") {
  CoLoRALayer zeros = random_layer(3, 2, 3, ResidualOrder::kPwThenDw, 20);
  zeros.kd.weights.fill(0.0f);
  const ConvKernel dk0 = compose(zeros);
  for (size_t i = 0; i < dk0.weights.size(); ++i) CHECK(dk0.weights[i] == 0.0f);

  // h=w=1: composed kernel is diag(kd) * Kp as a matrix.
  CoLoRALayer one = random_layer(1, 3, 2, ResidualOrder::kDwThenPw, 21);
  const ConvKernel dk1 = compose(one);
  for (int k = 0; k < 3; ++k) {
    for (int t = 0; t < 2; ++t) {
      const float want = one.kd.weights.at(0, 0, k) * one.kp.weights.at(k, t);
      CHECK(dk1.weights.at(0, 0, k, t) == doctest::Approx(want).epsilon(1e-7));
    }
  }

  // Dense conv with the composed kernel reproduces the chained separable ops.
  const Tensor x = random_uniform({6, 6, 2}, -1, 1, 22);
  for (auto order : {ResidualOrder::kDwThenPw, ResidualOrder::kPwThenDw}) {
    CoLoRALayer layer = random_layer(3, 2, 3, order, 23 + static_cast<uint64_t>(order));
    layer.db.reset();
    layer.base.bias.reset();
    const Tensor via_dense = conv2d(x, compose(layer), Padding::kSame);
    const Tensor via_chain =
        order == ResidualOrder::kDwThenPw
            ? pointwise_conv2d(depthwise_conv2d(x, layer.kd, Padding::kSame), layer.kp)
            : depthwise_conv2d(pointwise_conv2d(x, layer.kp), layer.kd, Padding::kSame);
    CHECK(max_abs_diff(via_dense, via_chain) < 1e-6);
  }
}

TEST_CASE("composition is linear in kd") {
  CoLoRALayer layer = random_layer(3, 2, 4, ResidualOrder::kPwThenDw, 26);
  const Tensor kd1 = random_uniform(layer.kd.weights.shape(), -1, 1, 27);
  const Tensor kd2 = random_uniform(layer.kd.weights.shape(), -1, 1, 28);

  layer.kd.weights = kd1;
  const ConvKernel c1 = compose(layer);
  layer.kd.weights = kd2;
  const ConvKernel c2 = compose(layer);
  for (size_t i = 0; i < kd1.size(); ++i) layer.kd.weights[i] = kd1[i] + kd2[i];
  const ConvKernel csum = compose(layer);
  for (size_t i = 0; i < csum.weights.size(); ++i) {
    CHECK(std::abs(csum.weights[i] - (c1.weights[i] + c2.weights[i])) < 1e-6);
  }
}

TEST_CASE("merge adds the composed kernel into the base") {
  const Tensor x = random_uniform({6, 6, 2}, -1, 1, 30);

  SUBCASE("zero residual leaves the base unchanged") {
    CoLoRALayer layer = random_layer(3, 2, 3, ResidualOrder::kPwThenDw, 31);
    layer.kd.weights.fill(0.0f);
    layer.db->fill(0.0f);
    const Tensor before = layer.base.weights;
    merge(layer);
    CHECK(layer.base.weights.bit_equal(before));
    CHECK(layer.merge_count == 1);
  }

  SUBCASE("forward before merge equals merged-base conv after") {
    for (auto order : {ResidualOrder::kDwThenPw, ResidualOrder::kPwThenDw}) {
      CoLoRALayer layer = random_layer(3, 2, 3, order, 33 + static_cast<uint64_t>(order));
      const Tensor pre = colora_forward(layer, x);
      CoLoRALayer merged = layer;
      merge(merged);
      const Tensor post = conv2d(x, merged.base, Padding::kSame);
      CHECK(rel_deviation(pre, post) < 1e-5);
      // kp/kd/db untouched by merge
      CHECK(merged.kp.weights.bit_equal(layer.kp.weights));
      CHECK(merged.kd.weights.bit_equal(layer.kd.weights));
    }
  }

  SUBCASE("sequential merges accumulate composed kernels") {
    CoLoRALayer layer = random_layer(3, 2, 3, ResidualOrder::kPwThenDw, 40);
    const Tensor k0 = layer.base.weights;
    std::vector<double> acc(k0.size(), 0.0);
    for (int e = 1; e <= 5; ++e) {
      layer.kd.weights = random_uniform(layer.kd.weights.shape(), -1, 1, 41 + static_cast<uint64_t>(e));
      layer.kp.weights = random_uniform(layer.kp.weights.shape(), -1, 1, 51 + static_cast<uint64_t>(e));
      const ConvKernel delta = compose(layer);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += delta.weights[i];
      merge(layer);
    }
    CHECK(layer.merge_count == 5);
    Tensor want = k0;
    for (size_t i = 0; i < want.size(); ++i) want[i] = static_cast<float>(want[i] + acc[i]);
    CHECK(rel_deviation(layer.base.weights, want) < 1e-5);
  }
}

TEST_CASE("reinit zeroes the residual and redraws kp deterministically") {
  CoLoRALayer layer = random_layer(3, 2, 3, ResidualOrder::kPwThenDw, 60);
  const Tensor x = random_uniform({5, 5, 2}, -1, 1, 61);
  reinit(layer, 77);
  CHECK(colora_forward(layer, x).bit_equal(conv2d(x, layer.base, Padding::kSame)));

  const double bound = std::sqrt(6.0 / (2 + 3));
  for (size_t i = 0; i < layer.kp.weights.size(); ++i) {
    CHECK(std::abs(layer.kp.weights[i]) <= bound);
  }
  CoLoRALayer other = random_layer(3, 2, 3, ResidualOrder::kPwThenDw, 62);
  reinit(other, 77);
  CHECK(layer.kp.weights.bit_equal(other.kp.weights));
}

TEST_CASE("gradients flow to kp/kd/db but never to the frozen base") {
  const Tensor x = random_uniform({5, 5, 2}, -1, 1, 70);
  CoLoRALayer layer = random_layer(3, 2, 3, ResidualOrder::kPwThenDw, 71);

  GradTape tape;
  const Var xv = tape.constant(x);
  const Var bw = tape.leaf(layer.base.weights, "base.weight", false);
  const Var bb = tape.leaf(*layer.base.bias, "base.bias", false);
  const Var kp = tape.leaf(layer.kp.weights, "kp", true);
  const Var kd = tape.leaf(layer.kd.weights, "kd", true);
  const Var db = tape.leaf(*layer.db, "db", true);
  const Var y = colora_forward(tape, xv, bw, bb, kp, kd, db, layer.order, layer.padding, 1);
  const auto grads = tape.backward(sum(tape, y));

  CHECK(grads.count("kp") == 1);
  CHECK(grads.count("kd") == 1);
  CHECK(grads.count("db") == 1);
  CHECK(grads.count("base.weight") == 0);
  CHECK(grads.count("base.bias") == 0);

  bool any_nonzero = false;
  for (size_t i = 0; i < grads.at("kd").size(); ++i) any_nonzero |= grads.at("kd")[i] != 0.0f;
  CHECK(any_nonzero);
}

TEST_CASE("order asymmetry shows up in parameter counts when C != T") {
  const int h = 3, c = 2, t = 8;
  const CoLoRALayer pw_dw = random_layer(h, c, t, ResidualOrder::kPwThenDw, 80);
  const CoLoRALayer dw_pw = random_layer(h, c, t, ResidualOrder::kDwThenPw, 81);
  const size_t count_pw = pw_dw.kd.weights.size() + pw_dw.kp.weights.size();
  const size_t count_dw = dw_pw.kd.weights.size() + dw_pw.kp.weights.size();
  CHECK(count_pw == static_cast<size_t>(h * h * t + c * t));
  CHECK(count_dw == static_cast<size_t>(h * h * c + c * t));
  CHECK(count_pw != count_dw);
}

TEST_CASE("invalid layer shapes are rejected") {
  CoLoRALayer layer = random_layer(3, 2, 3, ResidualOrder::kPwThenDw, 85);
  layer.kd = DepthwiseKernel(Tensor::zeros({3, 3, 2}));  // wrong channel count for PwThenDw
  CHECK_THROWS_AS(validate(layer), ShapeError);
  layer = random_layer(3, 2, 3, ResidualOrder::kPwThenDw, 86);
  layer.kd = DepthwiseKernel(Tensor::zeros({5, 5, 3}));  // wrong spatial size
  CHECK_THROWS_AS(validate(layer), ShapeError);
}

TEST_CASE("cnn adapter: identity mixing, zero mixing, summation oracle") {
  const Tensor x = random_uniform({5, 5, 2}, -1, 1, 90);
  ConvKernel base(random_uniform({3, 3, 2, 3}, -1, 1, 91), random_uniform({3}, -1, 1, 92));
  CnnAdapterLayer layer = make_cnn_adapter(base, 3, 93);

  // identity A + identity affine -> plain ReLU of the base output
  CHECK(cnn_adapter_forward(layer, x).bit_equal(relu(conv2d(x, base, Padding::kSame))));

  layer.a.weights.fill(0.0f);
  const Tensor yz = cnn_adapter_forward(layer, x);
  for (size_t i = 0; i < yz.size(); ++i) CHECK(yz[i] == 0.0f);

  // random case against direct summation
  layer.a.weights = random_uniform({3, 4}, -1, 1, 94);
  layer.norm_scale[0] = 1.7f;
  layer.norm_shift[0] = -0.3f;
  const Tensor got = cnn_adapter_forward(layer, x);
  const Tensor u = relu(conv2d(x, base, Padding::kSame));
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      for (int t = 0; t < 4; ++t) {
        double want = 0.0;
        for (int k = 0; k < 3; ++k) {
          want += (1.7 * u.at(i, j, k) - 0.3) * layer.a.weights.at(k, t);
        }
        CHECK(std::abs(got.at(i, j, t) - want) < 1e-5);
      }
    }
  }
}

TEST_CASE("dense LoRA: zero delta, outer product, merge equivalence") {
  const Tensor w0 = random_uniform({3, 4}, -1, 1, 100);
  DenseLoraLayer layer = make_dense_lora(w0, 2, 101);
  const Tensor x = random_uniform({2, 4}, -1, 1, 102);

  // b = 0 at construction -> y == w0 x
  CHECK(max_abs_diff(dense_lora_forward(layer, x), linear(x, w0, nullptr)) == 0.0);

  // rank 1: delta is the outer product b a
  DenseLoraLayer r1 = make_dense_lora(w0, 1, 103);
  r1.b = random_uniform({3, 1}, -1, 1, 104);
  const Tensor pre = dense_lora_forward(r1, x);
  DenseLoraLayer merged = r1;
  dense_lora_merge(merged);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      const float want = w0.at(i, j) + r1.b.at(i, 0) * r1.a.at(0, j);
      CHECK(merged.w0.at(i, j) == doctest::Approx(want).epsilon(1e-6));
    }
  }
  for (size_t i = 0; i < merged.b.size(); ++i) CHECK(merged.b[i] == 0.0f);
  CHECK(max_abs_diff(pre, dense_lora_forward(merged, x)) < 1e-6);
  CHECK(max_abs_diff(pre, linear(x, merged.w0, nullptr)) < 1e-6);

  CHECK_THROWS_AS(make_dense_lora(w0, 5, 1), ValueError);
  CHECK_THROWS_AS(make_dense_lora(w0, 0, 1), ValueError);
}

TEST_CASE("merge equivalence sweep stays under tolerance") {
  const MergeSweepResult r = merge_equivalence_sweep(100, 2026);
  CHECK(r.layers_checked == 100);
  CHECK(r.max_rel_deviation <= 1e-5);
}
