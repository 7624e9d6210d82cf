// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "colora/conv.hpp"
#include "colora/error.hpp"
#include "colora/init.hpp"
#include "test_support.hpp"

using namespace colora;
using colora::testing::max_abs_diff;
using colora::testing::reference_conv2d;

TEST_CASE("conv2d identity and zero kernels") {
  const Tensor x = Tensor::from_data({1, 1, 1}, {5.0f});
  const ConvKernel ident(Tensor::from_data({1, 1, 1, 1}, {1.0f}));
  CHECK(conv2d(x, ident, Padding::kSame)[0] == 5.0f);

  const Tensor x2 = random_uniform({5, 4, 3}, -1, 1, 3);
  const ConvKernel zero(Tensor::zeros({3, 3, 3, 2}));
  const Tensor y = conv2d(x2, zero, Padding::kSame);
  for (size_t i = 0; i < y.size(); ++i) CHECK(y[i] == 0.0f);
}

TEST_CASE("conv2d valid sliding window, hand-computed") {
  const Tensor x = Tensor::from_data({2, 2, 1}, {1, 2, 3, 4});
  const ConvKernel k(Tensor::from_data({2, 2, 1, 1}, {1, 0, 0, 1}));
  const Tensor y = conv2d(x, k, Padding::kValid);
  CHECK(y.shape() == std::vector<int>{1, 1, 1});
  CHECK(y[0] == 5.0f);  // 1*1 + 4*1
}

TEST_CASE("conv2d matches the reference implementation") {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const int h = 1 + static_cast<int>(seed % 3) * 2;  // 1, 3, 5
    const Tensor x = random_uniform({7, 6, 3}, -1, 1, seed);
    const ConvKernel k(random_uniform({h, h, 3, 4}, -1, 1, seed + 100),
                       random_uniform({4}, -1, 1, seed + 200));
    for (Padding p : {Padding::kSame, Padding::kValid}) {
      const Tensor got = conv2d(x, k, p);
      const Tensor want = reference_conv2d(x, k, p);
      CHECK(max_abs_diff(got, want) < 1e-5);
    }
  }
}

TEST_CASE("conv2d stride matches the reference implementation") {
  const Tensor x = random_uniform({8, 8, 2}, -1, 1, 17);
  const ConvKernel k(random_uniform({3, 3, 2, 3}, -1, 1, 18));
  for (Padding p : {Padding::kSame, Padding::kValid}) {
    CHECK(max_abs_diff(conv2d(x, k, p, 2), reference_conv2d(x, k, p, 2)) < 1e-5);
  }
}

TEST_CASE("conv2d shape rules and errors") {
  const Tensor x = random_uniform({6, 5, 3}, -1, 1, 5);
  const ConvKernel k(random_uniform({3, 3, 3, 2}, -1, 1, 6));
  CHECK(conv2d(x, k, Padding::kSame).shape() == std::vector<int>{6, 5, 2});
  CHECK(conv2d(x, k, Padding::kValid).shape() == std::vector<int>{4, 3, 2});

  const ConvKernel wrong_c(random_uniform({3, 3, 4, 2}, -1, 1, 7));
  CHECK_THROWS_AS(conv2d(x, wrong_c, Padding::kSame), ShapeError);

  const ConvKernel too_big(random_uniform({7, 7, 3, 2}, -1, 1, 8));
  CHECK_THROWS_AS(conv2d(x, too_big, Padding::kValid), ShapeError);
  CHECK_NOTHROW(conv2d(x, too_big, Padding::kSame));
}

TEST_CASE("batched conv2d equals per-sample conv2d") {
  const Tensor batch = random_uniform({3, 5, 5, 2}, -1, 1, 9);
  const ConvKernel k(random_uniform({3, 3, 2, 4}, -1, 1, 10), random_uniform({4}, -1, 1, 11));
  const Tensor y = conv2d(batch, k, Padding::kSame);
  CHECK(y.shape() == std::vector<int>{3, 5, 5, 4});
  for (int n = 0; n < 3; ++n) {
    std::vector<float> sample(batch.raw() + static_cast<size_t>(n) * 50,
                              batch.raw() + static_cast<size_t>(n + 1) * 50);
    const Tensor yn = conv2d(Tensor::from_data({5, 5, 2}, std::move(sample)), k, Padding::kSame);
    for (size_t i = 0; i < yn.size(); ++i) {
      CHECK(y[static_cast<size_t>(n) * 100 + i] == yn[i]);
    }
  }
}

TEST_CASE("depthwise identity, zeros, and per-channel decomposition") {
  const Tensor x = random_uniform({4, 4, 2}, -1, 1, 12);
  const DepthwiseKernel ones(Tensor::full({1, 1, 2}, 1.0f));
  CHECK(depthwise_conv2d(x, ones, Padding::kSame).bit_equal(x));

  const DepthwiseKernel zeros(Tensor::zeros({3, 3, 2}));
  const Tensor yz = depthwise_conv2d(x, zeros, Padding::kSame);
  for (size_t i = 0; i < yz.size(); ++i) CHECK(yz[i] == 0.0f);

  // Two distinct 3x3 filters act exactly like two independent single-channel
  // dense convolutions.
  const Tensor filters = random_uniform({3, 3, 2}, -1, 1, 13);
  const DepthwiseKernel dk(filters);
  const Tensor y = depthwise_conv2d(x, dk, Padding::kSame);
  for (int g = 0; g < 2; ++g) {
    std::vector<float> chan(16), kd(9);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) chan[static_cast<size_t>(i) * 4 + j] = x.at(i, j, g);
    }
    for (int l = 0; l < 3; ++l) {
      for (int m = 0; m < 3; ++m) kd[static_cast<size_t>(l) * 3 + m] = filters.at(l, m, g);
    }
    const Tensor yg = conv2d(Tensor::from_data({4, 4, 1}, std::move(chan)),
                             ConvKernel(Tensor::from_data({3, 3, 1, 1}, std::move(kd))),
                             Padding::kSame);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        CHECK(y.at(i, j, g) == doctest::Approx(yg.at(i, j, 0)).epsilon(1e-6));
      }
    }
  }

  const DepthwiseKernel wrong(Tensor::zeros({3, 3, 5}));
  CHECK_THROWS_AS(depthwise_conv2d(x, wrong, Padding::kSame), ShapeError);
}

TEST_CASE("pointwise identity, zeros, and per-pixel dot product") {
  const Tensor x = random_uniform({3, 3, 2}, -1, 1, 14);
  Tensor ident = Tensor::zeros({2, 2});
  ident.at(0, 0) = ident.at(1, 1) = 1.0f;
  CHECK(pointwise_conv2d(x, PointwiseKernel(ident)).bit_equal(x));

  const Tensor yz = pointwise_conv2d(x, PointwiseKernel(Tensor::zeros({2, 3})));
  for (size_t i = 0; i < yz.size(); ++i) CHECK(yz[i] == 0.0f);

  Tensor xc = Tensor::zeros({2, 2, 2});
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      xc.at(i, j, 0) = 3.0f;
      xc.at(i, j, 1) = 4.0f;
    }
  }
  const PointwiseKernel kp(Tensor::from_data({2, 1}, {1.0f, 2.0f}));
  const Tensor y = pointwise_conv2d(xc, kp);
  for (size_t i = 0; i < y.size(); ++i) CHECK(y[i] == 11.0f);

  CHECK_THROWS_AS(pointwise_conv2d(x, PointwiseKernel(Tensor::zeros({3, 1}))), ShapeError);
}

TEST_CASE("conv2d with a 1x1 kernel equals pointwise exactly") {
  const Tensor x = random_uniform({5, 4, 3}, -1, 1, 15);
  const Tensor w = random_uniform({3, 2}, -1, 1, 16);
  std::vector<float> w4(w.data().begin(), w.data().end());
  const Tensor via_conv = conv2d(x, ConvKernel(Tensor::from_data({1, 1, 3, 2}, std::move(w4))),
                                 Padding::kSame);
  const Tensor via_pw = pointwise_conv2d(x, PointwiseKernel(w));
  CHECK(via_conv.bit_equal(via_pw));
}

TEST_CASE("conv2d is linear in the kernel") {
  const Tensor x = random_uniform({5, 5, 2}, -1, 1, 17);
  const Tensor k1 = random_uniform({3, 3, 2, 3}, -1, 1, 18);
  const Tensor k2 = random_uniform({3, 3, 2, 3}, -1, 1, 19);
  const float a = 0.7f, b = -1.3f;
  std::vector<float> mixed(k1.size());
  for (size_t i = 0; i < mixed.size(); ++i) mixed[i] = a * k1[i] + b * k2[i];

  const Tensor lhs = conv2d(x, ConvKernel(Tensor::from_data({3, 3, 2, 3}, std::move(mixed))),
                            Padding::kSame);
  const Tensor y1 = conv2d(x, ConvKernel(k1), Padding::kSame);
  const Tensor y2 = conv2d(x, ConvKernel(k2), Padding::kSame);
  for (size_t i = 0; i < lhs.size(); ++i) {
    CHECK(std::abs(lhs[i] - (a * y1[i] + b * y2[i])) < 1e-6);
  }
}
