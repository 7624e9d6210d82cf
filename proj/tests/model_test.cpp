// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "colora/error.hpp"
#include "colora/init.hpp"
#include "colora/model.hpp"

using namespace colora;

namespace {

ModelGraph single_conv_graph(int h, int c, int t, bool bias, uint64_t seed = 5) {
  ModelGraph g({8, 8, c});
  ConvKernel k(random_uniform({h, h, c, t}, -1, 1, seed),
               bias ? std::optional<Tensor>(Tensor::zeros({t})) : std::nullopt);
  g.add_layer({"conv", false, ConvLayer{std::move(k), Padding::kSame, 1}});
  return g;
}

}  // namespace

TEST_CASE("tiny vgg builds, validates, and emits class logits") {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {8}, {8, 8, 4}, 1);
  const auto shapes = g.infer_shapes();
  CHECK(shapes.back() == std::vector<int>{1, 4});

  const Tensor x = random_uniform({2, 16, 16, 1}, 0, 1, 2);
  CHECK(g.forward(x).shape() == std::vector<int>{2, 4});
  CHECK(g.num_classes() == 4);
}

TEST_CASE("second block consumes the first block's width") {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {8, 16}, {8, 8, 4}, 1);
  bool found = false;
  for (const Layer& l : g.layers()) {
    if (l.name == "b2c1") {
      found = true;
      CHECK(std::get<ConvLayer>(l.impl).kernel.in_channels() == 8);
      CHECK(std::get<ConvLayer>(l.impl).kernel.out_channels() == 16);
    }
  }
  CHECK(found);
}

TEST_CASE("tiny vgg parameter total matches hand arithmetic") {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {8, 16}, {8, 8, 4}, 1);
  const ParamReport report = count_params(g);
  // conv blocks: (3*3*1*8 + 8) + (3*3*8*8 + 8) + (3*3*8*16 + 16) + (3*3*16*16 + 16)
  const long backbone = (72 + 8) + (576 + 8) + (1152 + 16) + (2304 + 16);
  // head: 1x1 conv 16->8 (+8), dense 8->8 (+8), dense 8->4 (+4)
  const long head = (16 * 8 + 8) + (8 * 8 + 8) + (8 * 4 + 4);
  CHECK(report.trainable_total == backbone + head);
  CHECK(report.frozen_total == 0);
  CHECK(report.trainable_fraction() == 1.0);
}

TEST_CASE("builder rejects bad arguments") {
  CHECK_THROWS_AS(build_tiny_vgg({16, 16, 1}, {}, {8, 8, 4}, 1), ValueError);
  CHECK_THROWS_AS(build_tiny_vgg({16, 16, 1}, {8}, {0, 8, 4}, 1), ValueError);
  CHECK_THROWS_AS(build_tiny_vgg({16, 16}, {8}, {8, 8, 4}, 1), ShapeError);
  // 4x4 input cannot survive three 2x2 pools
  CHECK_THROWS_AS(build_tiny_vgg({4, 4, 1}, {4, 4, 4, 4}, {4, 4, 2}, 1), ShapeError);
}

TEST_CASE("inject_colora with empty targets only applies the freeze policy") {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {8}, {8, 8, 4}, 3);
  const Tensor x = random_uniform({1, 16, 16, 1}, 0, 1, 4);
  const Tensor before = g.forward(x);

  ModelGraph frozen = inject_colora(g, {}, ResidualOrder::kPwThenDw,
                                    FreezePolicy::kFreezeBackbone, 5);
  CHECK(frozen.forward(x).bit_equal(before));
  const ParamReport report = count_params(frozen);
  long head_params = 0;
  for (const ParamRow& r : report.rows) {
    if (r.name.rfind("head.", 0) == 0) head_params += r.trainable;
  }
  CHECK(report.trainable_total == head_params);
  CHECK(report.trainable_fraction() ==
        doctest::Approx(static_cast<double>(head_params) / report.total()));
}

TEST_CASE("injecting every conv leaves the forward output bit-identical") {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {8, 16}, {8, 8, 4}, 6);
  ModelGraph adapted = inject_colora(g, conv_layer_names(g), ResidualOrder::kPwThenDw,
                                     FreezePolicy::kFreezeBackbone, 7);
  for (uint64_t s = 0; s < 5; ++s) {
    const Tensor x = random_uniform({2, 16, 16, 1}, 0, 1, 100 + s);
    CHECK(adapted.forward(x).bit_equal(g.forward(x)));
  }
}

TEST_CASE("injection errors: unknown names, double injection, non-conv targets") {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {8}, {8, 8, 4}, 8);
  CHECK_THROWS_AS(
      inject_colora(g, {"nope"}, ResidualOrder::kPwThenDw, FreezePolicy::kFreezeBackbone, 9),
      ValueError);
  CHECK_THROWS_AS(
      inject_colora(g, {"b1c1_relu"}, ResidualOrder::kPwThenDw, FreezePolicy::kFreezeBackbone, 9),
      ValueError);
  ModelGraph once = inject_colora(g, {"b1c1"}, ResidualOrder::kPwThenDw,
                                  FreezePolicy::kFreezeBackbone, 10);
  CHECK_THROWS_AS(
      inject_colora(once, {"b1c1"}, ResidualOrder::kPwThenDw, FreezePolicy::kFreezeBackbone, 11),
      ValueError);
}

TEST_CASE("a 3x3 conv with C=4, T=8 gains 104 trainable parameters (PwThenDw)") {
  ModelGraph g({8, 8, 4});
  g.add_layer({"conv", false,
               ConvLayer{ConvKernel(random_uniform({3, 3, 4, 8}, -1, 1, 12)), Padding::kSame, 1}});
  ModelGraph adapted =
      inject_colora(g, {"conv"}, ResidualOrder::kPwThenDw, FreezePolicy::kFreezeBackbone, 13);
  const ParamReport report = count_params(adapted);
  CHECK(report.rows.size() == 1);
  CHECK(report.rows[0].n_adapter == 3 * 3 * 8 + 4 * 8);  // 104
  CHECK(report.trainable_total == 104);
  CHECK(report.rows[0].frozen == 3 * 3 * 4 * 8);
}

TEST_CASE("count_params reproduces the published per-layer formulas") {
  // h=w=3, C=64, T=128
  ModelGraph g = single_conv_graph(3, 64, 128, false);
  ParamReport plain = count_params(g);
  CHECK(plain.rows[0].n_original == 73728);

  ModelGraph colora =
      inject_colora(g, {"conv"}, ResidualOrder::kPwThenDw, FreezePolicy::kFreezeBackbone, 14);
  ParamReport rc = count_params(colora);
  CHECK(rc.rows[0].n_adapter == 3 * 3 * 128 + 64 * 128);  // 9344
  CHECK(rc.trainable_total == 9344);

  ModelGraph dw =
      inject_colora(g, {"conv"}, ResidualOrder::kDwThenPw, FreezePolicy::kFreezeBackbone, 15);
  CHECK(count_params(dw).rows[0].n_adapter == 3 * 3 * 64 + 64 * 128);

  // CNN adapter counting: mixing matrix dims + 2 affine scalars
  ModelGraph g64 = single_conv_graph(3, 32, 64, false);
  ModelGraph ad = inject_cnn_adapter(g64, {"conv"}, FreezePolicy::kFreezeBackbone, 16);
  ParamReport ra = count_params(ad);
  CHECK(ra.rows[0].n_adapter == 64 * 64 + 2);
  CHECK(ra.trainable_total == 64 * 64 + 2);

  // 1x1 conv: N_C = T + C*T
  ModelGraph g11 = single_conv_graph(1, 6, 9, false);
  ModelGraph c11 =
      inject_colora(g11, {"conv"}, ResidualOrder::kPwThenDw, FreezePolicy::kFreezeBackbone, 17);
  CHECK(count_params(c11).rows[0].n_adapter == 9 + 6 * 9);
}

TEST_CASE("adapter dominance condition N_C < N_O iff hwT + CT < hwCT") {
  Rng rng(18);
  for (int i = 0; i < 40; ++i) {
    const int h = 1 + 2 * static_cast<int>(rng.uniform_index(3));
    const int c = 1 + static_cast<int>(rng.uniform_index(16));
    const int t = 1 + static_cast<int>(rng.uniform_index(16));
    const long n_o = static_cast<long>(h) * h * c * t;
    const long n_c = static_cast<long>(h) * h * t + static_cast<long>(c) * t;

    ModelGraph g = single_conv_graph(h, c, t, false, 19 + static_cast<uint64_t>(i));
    ModelGraph a =
        inject_colora(g, {"conv"}, ResidualOrder::kPwThenDw, FreezePolicy::kFreezeBackbone, 20);
    const ParamReport r = count_params(a);
    CHECK(r.rows[0].n_original == n_o);
    CHECK(r.rows[0].n_adapter == n_c);
    CHECK((r.rows[0].n_adapter < r.rows[0].n_original) == (n_c < n_o));
  }
}

TEST_CASE("taped forward agrees with pure forward") {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {8}, {8, 8, 4}, 21);
  const Tensor x = random_uniform({3, 16, 16, 1}, 0, 1, 22);
  GradTape tape;
  const Var logits = g.forward_taped(tape, x);
  CHECK(tape.value(logits).bit_equal(g.forward(x)));
}

TEST_CASE("param report CSV has one row per parameterized layer plus a total") {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {8}, {8, 8, 4}, 23);
  std::ostringstream os;
  write_param_report_csv(count_params(g), os);
  const std::string csv = os.str();
  CHECK(csv.find("layer,kind,n_original,n_adapter,trainable,frozen\n") == 0);
  CHECK(csv.find("\ntotal,") != std::string::npos);
}
