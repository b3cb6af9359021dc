#include <doctest.h>

#include "packinglab/model_io.hpp"
#include "support.hpp"

using namespace packinglab;
using nlohmann::json;

TEST_SUITE("model_io") {
  TEST_CASE("round trip") {
    for (const auto& m : {testing::square(4, 1.5, ConflictKernel::gaussian(0.8, 0.5, 1.0)),
                          testing::line(9, 2.0, ConflictKernel::hard(0.5, true)),
                          testing::atoms({0.5, 1.0}, {{0, 0.3}, {0.3, 1}})}) {
      const json j = model_to_json(m);
      CHECK(model_to_json(parse_model(j)) == j);
    }
  }

  TEST_CASE("grid measure and defaults") {
    const auto m = parse_model(json::parse(R"({
      "space": {"type": "box", "lower": [0, 0], "upper": [2, 2]},
      "measure": {"type": "grid", "cells": [2, 1], "densities": [1.0, 3.0]},
      "kernel": {"type": "constant", "probability": 0.5, "range": 0.3}})"));
    CHECK(m.space.is_periodic());
    CHECK(m.total_mass() == doctest::Approx(8.0));
    CHECK(m.seed_policy.seed == 0);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(parse_model(json::parse(R"({"space": {"type": "sphere"}})")), ConfigError);
    CHECK_THROWS_AS(parse_model(json::parse(R"({"measure": {}})")), ConfigError);
    CHECK_THROWS_AS(parse_model(json::parse(R"({
      "space": {"type": "sites", "sites": [[0], [1, 2]]},
      "measure": {"type": "atomic", "weights": [1, 1]},
      "kernel": {"type": "zero"}})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_model(json::parse(R"({
      "space": {"type": "sites", "sites": [0, 1]},
      "measure": {"type": "atomic", "weights": [1, 1]},
      "kernel": {"type": "matrix", "values": [[0, 1]]}})")),
                    ConfigError);
    const auto inf = parse_model(json::parse(R"({
      "space": {"type": "box", "lower": [0], "upper": [1]},
      "measure": {"type": "homogeneous", "density": "inf"},
      "kernel": {"type": "zero"}})"));
    CHECK_FALSE(validate_model(inf).ok);
  }

  TEST_CASE("test functions") {
    const auto sys = atomic_system(testing::atoms({1, 1, 1}, {{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}));
    CHECK(parse_test_function(json(0.4), sys).values == std::vector<double>{0.4, 0.4, 0.4});
    CHECK(parse_test_function(json::parse("[0.1, 0.2, 0.3]"), sys).values == std::vector<double>{0.1, 0.2, 0.3});
    CHECK(parse_test_function(json::parse(R"({"box": {"lower": [0.5], "upper": [2.5]}})"), sys).values ==
          std::vector<double>{1.0, 0.0, 0.0});
    CHECK(parse_test_function(json::parse(R"({"complement_of": [0]})"), sys).values == std::vector<double>{1, 0, 1});
    CHECK_THROWS_AS(parse_test_function(json::parse("[0.1]"), sys), ConfigError);
    CHECK_THROWS_AS(parse_test_function(json::parse(R"({"complement_of": [0.5]})"), sys), ConfigError);
    const auto f = parse_point_function(json::parse(R"({"box": {"lower": [0], "upper": [1]}, "inside": 0.2})"),
                                        testing::line(5, 1, ConflictKernel::zero()));
    CHECK(f(std::vector<double>{0.5}, -1) == 0.2);
    CHECK(f(std::vector<double>{3.0}, -1) == 1.0);
  }

  TEST_CASE("time grids, orders, methods") {
    CHECK(parse_time_grid(json(2.0)) == std::vector<double>{2.0});
    const auto g = parse_time_grid(json::parse(R"({"from": 0, "to": 1, "step": 0.25})"));
    CHECK(g.size() == 5);
    CHECK(g.back() == doctest::Approx(1.0));
    CHECK_THROWS_AS(parse_time_grid(json::parse("[1, 0.5]")), ConfigError);
    CHECK_THROWS_AS(parse_time_grid(json::parse("[-1]")), ConfigError);
    CHECK(parse_order(json("inf")).infinite);
    CHECK(parse_order(json(3)).k == 3);
    CHECK_THROWS_AS(parse_order(json(-1)), ConfigError);
    CHECK_THROWS_AS(parse_order(json("three")), ConfigError);
    CHECK(parse_method("picard") == SolverMethod::Picard);
    CHECK_THROWS_AS(parse_method("euler"), ConfigError);
  }
}
