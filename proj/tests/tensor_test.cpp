// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "colora/error.hpp"
#include "colora/finite_diff.hpp"
#include "colora/tensor.hpp"

using namespace colora;

TEST_CASE("tensor shape/data size must agree") {
  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0f, 2.0f, 3.0f}), ShapeError);
  CHECK_THROWS_AS(Tensor::from_data({0}, {}), ValueError);
  CHECK_THROWS_AS(Tensor::from_data({-1, 3}, {1.0f, 2.0f}), ValueError);
  const Tensor t = Tensor::from_data({2, 3}, {0, 1, 2, 3, 4, 5});
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 5.0f);
}

TEST_CASE("tensor construction rejects non-finite values") {
  CHECK_THROWS_AS(Tensor::from_data({2}, {1.0f, std::numeric_limits<float>::quiet_NaN()}),
                  ValueError);
  CHECK_THROWS_AS(Tensor::from_data({1}, {std::numeric_limits<float>::infinity()}), ValueError);
}

TEST_CASE("bit_equal distinguishes signed zero") {
  const Tensor a = Tensor::from_data({1}, {0.0f});
  const Tensor b = Tensor::from_data({1}, {-0.0f});
  CHECK(a.bit_equal(a));
  CHECK_FALSE(a.bit_equal(b));
}

TEST_CASE("rel_deviation on identical and perturbed tensors") {
  const Tensor a = Tensor::from_data({3}, {1.0f, -2.0f, 4.0f});
  CHECK(rel_deviation(a, a) == 0.0);
  Tensor b = a;
  b[2] = 4.0f + 4e-5f;
  CHECK(rel_deviation(a, b) == doctest::Approx(1e-5).epsilon(0.05));
}

TEST_CASE("finite differences reproduce simple analytic gradients") {
  const Tensor x = Tensor::from_data({2}, {1.0f, 2.0f});
  auto sum_fn = [](const Tensor& t) {
    double s = 0;
    for (size_t i = 0; i < t.size(); ++i) s += t[i];
    return s;
  };
  const Tensor g1 = finite_diff_grad(sum_fn, x, 1e-3);
  CHECK(g1[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(g1[1] == doctest::Approx(1.0).epsilon(1e-4));

  auto sq_fn = [](const Tensor& t) {
    double s = 0;
    for (size_t i = 0; i < t.size(); ++i) s += static_cast<double>(t[i]) * t[i];
    return s;
  };
  const Tensor g2 = finite_diff_grad(sq_fn, x, 1e-3);
  CHECK(std::abs(g2[0] - 2.0) < 1e-4);
  CHECK(std::abs(g2[1] - 4.0) < 1e-4);

  const Tensor g3 = finite_diff_grad([](const Tensor&) { return 3.5; }, x, 1e-3);
  CHECK(std::abs(g3[0]) < 1e-9);
  CHECK(std::abs(g3[1]) < 1e-9);
}

TEST_CASE("finite differences validate inputs") {
  const Tensor x = Tensor::from_data({1}, {1.0f});
  CHECK_THROWS_AS(finite_diff_grad([](const Tensor&) { return 0.0; }, x, 0.0), ValueError);
  CHECK_THROWS_AS(finite_diff_grad([](const Tensor&) { return 0.0; }, x, -1.0), ValueError);
  CHECK_THROWS_AS(finite_diff_grad(
                      [](const Tensor&) { return std::numeric_limits<double>::quiet_NaN(); }, x,
                      1e-3),
                  ValueError);
}
