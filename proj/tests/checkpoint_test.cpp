// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "colora/checkpoint.hpp"
#include "colora/error.hpp"
#include "colora/init.hpp"
#include "colora/model.hpp"

using namespace colora;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("colora_ckpt_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ModelGraph adapted_graph(uint64_t seed) {
  ModelGraph g = build_tiny_vgg({16, 16, 1}, {4, 8}, {8, 8, 4}, seed);
  g = inject_colora(g, {"b1c1", "b2c2"}, ResidualOrder::kPwThenDw, FreezePolicy::kFreezeBackbone,
                    seed + 1);
  // make adapter state non-trivial
  for (Layer& l : g.layers()) {
    if (auto* cl = std::get_if<CoLoRALayer>(&l.impl)) {
      cl->kd.weights = random_uniform(cl->kd.weights.shape(), -1, 1, seed + 2);
      *cl->db = random_uniform(cl->db->shape(), -1, 1, seed + 3);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("checkpoint round trip preserves tensors, masks, orders, and merges") {
  TempDir tmp;
  const std::string path = (tmp.path / "model.ckpt").string();

  ModelGraph g = adapted_graph(31);
  // exercise a merge so merge_count is nonzero
  for (Layer& l : g.layers()) {
    if (auto* cl = std::get_if<CoLoRALayer>(&l.impl)) merge(*cl);
  }
  save_checkpoint(g, path);
  ModelGraph loaded = load_checkpoint(path);

  auto gp = g.params();
  auto lp = loaded.params();
  REQUIRE(gp.size() == lp.size());
  for (size_t i = 0; i < gp.size(); ++i) {
    CHECK(gp[i].name == lp[i].name);
    CHECK(gp[i].trainable == lp[i].trainable);
    CHECK(gp[i].tensor->bit_equal(*lp[i].tensor));
  }
  for (size_t i = 0; i < g.layers().size(); ++i) {
    const Layer& a = g.layers()[i];
    const Layer& b = loaded.layers()[i];
    CHECK(a.name == b.name);
    CHECK(a.is_head == b.is_head);
    if (const auto* ca = std::get_if<CoLoRALayer>(&a.impl)) {
      const auto* cb = std::get_if<CoLoRALayer>(&b.impl);
      REQUIRE(cb != nullptr);
      CHECK(ca->order == cb->order);
      CHECK(cb->merge_count == 1);
    }
  }

  // Same function after reload.
  const Tensor x = random_uniform({2, 16, 16, 1}, 0, 1, 33);
  CHECK(loaded.forward(x).bit_equal(g.forward(x)));

  // Identical bytes when saved again.
  const std::string path2 = (tmp.path / "model2.ckpt").string();
  save_checkpoint(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}

TEST_CASE("truncated and corrupted checkpoints fail cleanly") {
  TempDir tmp;
  const std::string path = (tmp.path / "model.ckpt").string();
  ModelGraph g = adapted_graph(41);
  save_checkpoint(g, path);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  SUBCASE("one byte shorter") {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 1));
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }
  SUBCASE("magic mismatch") {
    bytes[0] = 'X';
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }
  SUBCASE("trailing garbage") {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.put('\0');
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_checkpoint((tmp.path / "nope.ckpt").string()), IoError); }
}

TEST_CASE("load into a mismatched graph reports a shape error") {
  TempDir tmp;
  const std::string path = (tmp.path / "model.ckpt").string();
  save_checkpoint(build_tiny_vgg({16, 16, 1}, {4}, {8, 8, 4}, 51), path);

  ModelGraph wider = build_tiny_vgg({16, 16, 1}, {8}, {8, 8, 4}, 52);
  CHECK_THROWS_AS(load_checkpoint_into(path, wider), IoError);

  ModelGraph same = build_tiny_vgg({16, 16, 1}, {4}, {8, 8, 4}, 53);
  CHECK_NOTHROW(load_checkpoint_into(path, same));
  const Tensor x = random_uniform({1, 16, 16, 1}, 0, 1, 54);
  CHECK(same.forward(x).bit_equal(load_checkpoint(path).forward(x)));
}
