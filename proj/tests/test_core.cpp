#include <doctest.h>

#include <cmath>
#include <numbers>

#include "packinglab/rng.hpp"
#include "support.hpp"

using namespace packinglab;
using testing::atoms;
using testing::line;
using testing::square;

TEST_SUITE("core") {
  TEST_CASE("philox known answers") {
    using P = Philox4x32;
    CHECK(P::block({0, 0, 0, 0}, {0, 0}) == P::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(P::block({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
          P::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(P::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          P::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }

  TEST_CASE("counter rng streams are reproducible and distinct") {
    CounterRng a(42, 1), b(42, 1), c(42, 2);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
      const auto x = a(), y = b(), z = c();
      CHECK(x == y);
      differs = differs || x != z;
    }
    CHECK(differs);
    CounterRng u(7);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double x = u.uniform();
      REQUIRE(x >= 0.0);
      REQUIRE(x < 1.0);
      sum += x;
    }
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("box and distances") {
    Box b{{0.0, 0.0}, {2.0, 3.0}};
    CHECK(b.volume() == 6.0);
    CHECK(b.contains(std::vector<double>{1.0, 2.9}));
    CHECK_FALSE(b.contains(std::vector<double>{2.5, 1.0}));
    const std::vector<double> p{0.5}, q{9.5};
    CHECK(line(10, 1, ConflictKernel::zero(), true).space.distance(p, q) == doctest::Approx(1.0));
    CHECK(line(10, 1, ConflictKernel::zero(), false).space.distance(p, q) == doctest::Approx(9.0));
  }

  TEST_CASE("kernel profiles") {
    CHECK(ConflictKernel::hard(1.0).profile(1.0) == 1.0);
    CHECK(ConflictKernel::hard(1.0, true).profile(1.0) == 0.0);
    CHECK(ConflictKernel::hard(1.0).profile(1.01) == 0.0);
    CHECK(ConflictKernel::constant(0.3, 2.0).profile(1.5) == 0.3);
    CHECK(ConflictKernel::gaussian(0.8, 0.5, 1.0).profile(0.5) == doctest::Approx(0.8 * std::exp(-0.5)));
    CHECK(ConflictKernel::gaussian(0.8, 0.5, 1.0).profile(1.1) == 0.0);
    CHECK(ConflictKernel::zero().is_binary());
    CHECK_FALSE(ConflictKernel::constant(0.3, 1.0).is_binary());
  }

  TEST_CASE("kernel mass against closed forms") {
    const std::vector<double> mid{5.0}, edge{0.0};
    // lambda * 2r on the line
    CHECK(kernel_mass_at(line(10, 2.0, ConflictKernel::hard(0.5)), mid) == doctest::Approx(2.0));
    // half the neighbourhood at a hard wall
    CHECK(kernel_mass_at(line(10, 1.0, ConflictKernel::hard(1.0), false), edge) == doctest::Approx(1.0));
    // periodic wrap restores the full neighbourhood
    CHECK(kernel_mass_at(line(10, 1.0, ConflictKernel::hard(1.0), true), edge) == doctest::Approx(2.0));
    // truncated Gaussian in the plane: 2 pi s^2 a (1 - exp(-R^2 / 2 s^2))
    const double a = 0.8, s = 0.7, R = 2.0, lam = 1.5;
    const double expect = lam * a * 2 * std::numbers::pi * s * s * (1 - std::exp(-R * R / (2 * s * s)));
    CHECK(kernel_mass_at(square(10, lam, ConflictKernel::gaussian(a, s, R)), std::vector<double>{5, 5}) ==
          doctest::Approx(expect).epsilon(1e-6));
    const auto two = atoms({2.0, 3.0}, {{1, 1}, {1, 1}});
    CHECK(kernel_mass_at(two, std::vector<double>{0.0}, 0) == doctest::Approx(5.0));
  }

  TEST_CASE("validation accepts well-posed models") {
    const auto d = validate_model(square(8, 1.0, ConflictKernel::hard(0.5)));
    CHECK(d.ok);
    CHECK(d.mass_bound == doctest::Approx(std::numbers::pi * 0.25).epsilon(1e-6));
    CHECK(validate_model(atoms({1, 1}, {{0, 1}, {1, 0}})).ok);
    CHECK(validate_model(line(5, 0.0, ConflictKernel::hard(1.0))).ok);
  }

  TEST_CASE("validation names the violated invariant") {
    auto has = [](const ModelDiagnostics& d, const std::string& name) {
      return std::find(d.failures.begin(), d.failures.end(), name) != d.failures.end();
    };
    CHECK(has(validate_model(atoms({1, 1}, {{0, 0.3}, {0.5, 0}})), "symmetry"));
    CHECK(has(validate_model(atoms({1, 1}, {{0, 1.5}, {1.5, 0}})), "range"));
    CHECK(has(validate_model(line(5, INFINITY, ConflictKernel::hard(1.0))), "local_finiteness"));
    CHECK(has(validate_model(line(5, 1.0, ConflictKernel::hard(3.0))), "periodic_range"));
    CHECK_THROWS_AS(require_valid(atoms({1, -1}, {{0, 0}, {0, 0}})), InvariantError);
  }

  TEST_CASE("conflict realization is an unordered relation") {
    ConflictRealization c;
    c.add(5, 2);
    c.add(2, 5);
    c.add(1, 3);
    CHECK(c.contains(2, 5));
    CHECK(c.contains(5, 2));
    CHECK_FALSE(c.contains(1, 2));
    CHECK(c.pairs().size() == 2);
    CHECK(c.pairs().front() == std::make_pair(1u, 3u));
    CHECK_THROWS_AS(c.add(4, 4), InvariantError);
  }

  TEST_CASE("pattern bookkeeping") {
    TimedPointPattern p(1, Box{{0}, {1}}, 2.0, 9);
    p.push_back(3, std::vector<double>{0.25}, 1.5);
    p.push_back(7, std::vector<double>{0.75}, 0.5);
    CHECK(p.size() == 2);
    CHECK(p.index_of(7) == 1u);
    CHECK_FALSE(p.index_of(4));
    CHECK(p.point(0).location == std::vector<double>{0.25});
    CHECK(p.site(0) == -1);
  }
}
