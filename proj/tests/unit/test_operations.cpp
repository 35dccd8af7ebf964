#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "sentops/error.hpp"
#include "sentops/operations.hpp"
#include "sentops/random.hpp"

using namespace sentops;

TEST_CASE("apply_operation examples") {
  using V = std::vector<double>;
  CHECK(apply_operation(OperationKind::kSubtract, V{3, 1}, V{1, 1}) == V{2, 0});
  CHECK(apply_operation(OperationKind::kAdd, V{3, 1}, V{1, 1}) == V{4, 2});
  CHECK(apply_operation(OperationKind::kMultiply, V{3, 1}, V{2, -1}) == V{6, -1});
  CHECK(apply_operation(OperationKind::kDivide, V{1, 4}, V{2, 2}) == V{0.5, 2});
  std::size_t guarded = 0;
  CHECK(apply_operation(OperationKind::kDivide, V{1, 1}, V{0, 2}, &guarded) == V{0, 0.5});
  CHECK(guarded == 1);
  CHECK(apply_operation(OperationKind::kDivide, V{1}, V{1e-9}) == V{0});
  CHECK_THROWS_AS(apply_operation(OperationKind::kAdd, V{1, 2}, V{1}), ContractError);
  CHECK_THROWS_AS(apply_operation(OperationKind::kDivide, V{1e308}, V{1e-5}), ContractError);
}

TEST_CASE("subtract anticommutes, add and multiply commute") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(5), v(5);
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    const auto uv = apply_operation(OperationKind::kSubtract, u, v);
    const auto vu = apply_operation(OperationKind::kSubtract, v, u);
    for (std::size_t i = 0; i < 5; ++i) CHECK(uv[i] == -vu[i]);
    CHECK(apply_operation(OperationKind::kAdd, u, v) == apply_operation(OperationKind::kAdd, v, u));
    CHECK(apply_operation(OperationKind::kMultiply, u, v) == apply_operation(OperationKind::kMultiply, v, u));
  }
}

TEST_CASE("operation names parse both ways") {
  for (OperationKind k : kAllOperations) CHECK(parse_operation(operation_name(k)) == k);
  CHECK(parse_operation("-") == OperationKind::kSubtract);
  CHECK(parse_operation("/") == OperationKind::kDivide);
  CHECK_FALSE(parse_operation("modulo"));
}

TEST_CASE("operation space construction") {
  const auto groups = fixtures::planted_groups({4, 3});
  PlantedConfig cfg;
  cfg.dim = 5;
  cfg.noise_scale = 0.0;
  const auto emb = synthesize_planted(groups, cfg);
  const auto space = build_operation_space(groups, emb, OperationKind::kSubtract);
  CHECK(space.points.size() == 7);
  CHECK(space.num_patterns == 2);
  CHECK(space.dim == 5);
  for (std::size_t i = 1; i < 4; ++i) CHECK(space.points[i].vector == space.points[0].vector);
  CHECK(space.pattern_labels() == std::vector<int>{0, 0, 0, 0, 1, 1, 1});
  CHECK(space.to_matrix().rows() == 7);

  const auto empty = build_operation_space({}, emb, OperationKind::kAdd);
  CHECK(empty.points.empty());

  const auto normalized = build_operation_space(groups, emb, OperationKind::kSubtract, true);
  double norm = 0.0;
  for (double v : normalized.points[0].vector) norm += v * v;
  CHECK(norm == doctest::Approx(1.0));
}

TEST_CASE("missing sentence vectors are listed") {
  const auto groups = fixtures::planted_groups({2});
  EmbeddingMatrix emb(2, "partial");
  emb.insert(0, {1, 2});
  emb.insert(1, {1, 2});
  try {
    build_operation_space(groups, emb, OperationKind::kSubtract);
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("operation space file round trip") {
  const auto groups = fixtures::planted_groups({2, 2});
  const auto emb = synthesize_planted(groups, PlantedConfig{});
  const auto space = build_operation_space(groups, emb, OperationKind::kDivide);
  const auto path = fixtures::scratch_dir("ops") / "ops.jsonl";
  {
    std::ofstream out(path);
    write_operation_space(out, space, "feedfacecafebeef");
  }
  const auto back = read_operation_space(path);
  CHECK(back.config_hash == "feedfacecafebeef");
  CHECK(back.space.kind == OperationKind::kDivide);
  CHECK(back.space.to_matrix() == space.to_matrix());
  CHECK(back.space.pattern_labels() == space.pattern_labels());
}
