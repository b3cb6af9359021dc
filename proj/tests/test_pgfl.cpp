#include <doctest.h>

#include <cmath>

#include "packinglab/mc.hpp"
#include "packinglab/pgfl.hpp"
#include "support.hpp"

using namespace packinglab;
using testing::atoms;
using testing::forward_chain;
using testing::line;
using testing::random_binary;
using testing::random_v;

namespace {

SolverOptions with(SolverMethod m, double tol = 1e-11) {
  SolverOptions o;
  o.tol = tol;
  o.method = m;
  return o;
}

}  // namespace

TEST_SUITE("pgfl") {
  TEST_CASE("no conflicts gives the Poisson closed form") {
    const auto sys = atomic_system(atoms({0.5, 1.2, 2.0}, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}));
    const TestFunction v{{0.3, 0.9, 0.6}};
    const double expect = std::exp(-1.5 * (0.5 * 0.7 + 1.2 * 0.1 + 2.0 * 0.4));
    CHECK(poisson_pgfl(sys, 1.5, v) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(solve_f_inf(sys, 1.5, v, with(SolverMethod::Closure)).value == doctest::Approx(expect).epsilon(1e-10));
    CHECK(solve_f_inf(sys, 1.5, v, with(SolverMethod::Picard)).value == doctest::Approx(expect).epsilon(1e-10));
    CHECK(f_k(sys, 3, 1.5, v).value == doctest::Approx(expect).epsilon(1e-9));
  }

  TEST_CASE("two atoms in full conflict: first arrival wins") {
    const double la = 0.7, lb = 1.3, L = la + lb;
    const auto sys = atomic_system(atoms({la, lb}, {{1, 1}, {1, 1}}));
    for (double t : {0.1, 1.0, 4.0}) {
      const TestFunction v{{0.2, 0.65}};
      const double e = std::exp(-L * t);
      const double expect = e + (1 - e) * (la * 0.2 + lb * 0.65) / L;
      CHECK(solve_f_inf(sys, t, v, with(SolverMethod::Closure)).value == doctest::Approx(expect).epsilon(1e-10));
      CHECK(solve_f_inf(sys, t, v, with(SolverMethod::Picard)).value == doctest::Approx(expect).epsilon(1e-10));
      // retention of a point at a: int_0^t e^{-L tau} dtau
      CHECK(moment_density_at_atom(sys, MaternOrder::inf(), t, 0, with(SolverMethod::Auto)).value ==
            doctest::Approx((1 - e) / L).epsilon(1e-9));
    }
  }

  TEST_CASE("forward chain oracle, infinite order and order one") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const auto sys = atomic_system(random_binary(seed, 2 + seed % 4));
      const auto v = random_v(seed, sys.size());
      for (double t : {0.4, 1.7}) {
        const auto inf = forward_chain(sys, testing::ChainOrder::Inf, t, v, 0);
        const auto one = forward_chain(sys, testing::ChainOrder::One, t, v, 0);
        CHECK(solve_f_inf(sys, t, v, with(SolverMethod::Closure)).value == doctest::Approx(inf.pgfl).epsilon(1e-9));
        CHECK(solve_f_inf(sys, t, v, with(SolverMethod::Picard)).value == doctest::Approx(inf.pgfl).epsilon(1e-9));
        CHECK(f_k(sys, 1, t, v).value == doctest::Approx(one.pgfl).epsilon(1e-9));
        CHECK(solve_pgfl(sys, MaternOrder::finite(1), t, v).value == doctest::Approx(one.pgfl).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("closure and Picard agree on curves") {
    const auto sys = atomic_system(random_binary(42, 5));
    const auto v = random_v(42, 5);
    // the series needs its terms well inside double range, so keep t moderate
    const std::vector<double> times{0.0, 0.5, 1.0, 1.5};
    const auto a = solve_f_inf_curve(sys, times, v, with(SolverMethod::Closure));
    const auto b = solve_f_inf_curve(sys, times, v, with(SolverMethod::Picard, 1e-9));
    CHECK(a.values.front() == 1.0);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-9));
    for (int k : {1, 2, 3}) {
      const auto c = f_k_curve(sys, k, times, v, with(SolverMethod::Closure));
      const auto d = f_k_curve(sys, k, times, v, with(SolverMethod::Picard, 1e-9));
      for (std::size_t i = 0; i < times.size(); ++i) CHECK(c.values[i] == doctest::Approx(d.values[i]).epsilon(1e-9));
    }
  }

  TEST_CASE("even and odd orders sandwich the infinite order") {
    // M_1 in M_3 in M_inf in M_2 in M_0, so for v <= 1 the p.g.fl runs the other way
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto sys = atomic_system(random_binary(100 + seed, 5));
      const auto v = random_v(seed, 5);
      const double t = 1.5, eps = 1e-9;
      const double f0 = f_k(sys, 0, t, v).value, f1 = f_k(sys, 1, t, v).value, f2 = f_k(sys, 2, t, v).value;
      const double f3 = f_k(sys, 3, t, v).value, fi = solve_f_inf(sys, t, v).value;
      CHECK(f0 <= f2 + eps);
      CHECK(f2 <= fi + eps);
      CHECK(fi <= f3 + eps);
      CHECK(f3 <= f1 + eps);
    }
  }

  TEST_CASE("values lie in [0, 1] and fall with t and with v") {
    const auto sys = atomic_system(random_binary(7, 5));
    auto v = random_v(7, 5);
    const std::vector<double> times{0.0, 0.3, 0.9, 2.7, 8.1};
    const auto c = solve_f_inf_curve(sys, times, v);
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(c.values[i] >= 0.0);
      CHECK(c.values[i] <= 1.0);
      if (i) CHECK(c.values[i] <= c.values[i - 1] + 1e-12);
    }
    const double before = solve_f_inf(sys, 1.0, v).value;
    for (auto& x : v.values) x *= 0.9;
    CHECK(solve_f_inf(sys, 1.0, v).value <= before);
    CHECK(solve_f_inf(sys, 2.0, TestFunction::constant(5, 1.0)).value == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("bounds enclose the solution") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const auto sys = atomic_system(random_binary(200 + seed, 4));
      const auto v = random_v(seed, 4);
      for (double t : {0.5, 2.0}) {
        const auto b = f_inf_bounds(sys, t, v);
        const double f = solve_f_inf(sys, t, v).value;
        CHECK(b.lower <= f + 1e-10);
        CHECK(f <= b.upper + 1e-10);
      }
    }
  }

  TEST_CASE("higher orders against simulation") {
    // no exact oracle for k >= 2; compare with the estimator at 4 standard errors
    const auto model = random_binary(9, 4);
    const auto sys = atomic_system(model);
    const auto v = random_v(9, 4);
    for (int k : {2, 3}) {
      const double t = 1.5;
      const auto est = estimate_pgfl(model, MaternOrder::finite(k), t, {site_function(v)}, 40000, 17);
      CHECK(std::abs(z_score(est, f_k(sys, k, t, v).value)) < 4.0);
    }
    // joint system: v on Q_1, u on R_1
    const auto u = random_v(10, 4);
    const auto joint = estimate_pgfl(model, JointQR{1}, 1.0, {site_function(v), site_function(u)}, 40000, 18);
    CHECK(std::abs(z_score(joint, solve_g_k(sys, 1, 1.0, {v, u}).value)) < 4.0);
  }

  TEST_CASE("type II moment closed form") {
    const auto m = line(20, 1.0, ConflictKernel::hard(0.5));
    const std::vector<double> x{10.0};
    for (double t : {0.5, 1.0, 2.0, 5.0}) {
      CHECK(moment_density(m, MaternOrder::finite(1), t, x).value == doctest::Approx(1 - std::exp(-t)).epsilon(1e-9));
    }
  }

  TEST_CASE("discretization converges") {
    const auto m = line(4, 1.0, ConflictKernel::hard(0.5));
    const double t = 1.0;
    auto at = [&](std::size_t cells) {
      const auto sys = discretize(m, cells);
      return solve_f_inf(sys, t, TestFunction::constant(cells, 0.5)).value;
    };
    const double a = at(4), b = at(8), c = at(16);
    CHECK(std::abs(c - b) < std::abs(b - a));
  }

  TEST_CASE("budget refusal and fallback") {
    // 16 disjoint conflicting pairs: 3^16 closure states, but a shallow series at small t
    const std::size_t pairs = 16, n = 2 * pairs;
    std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; i += 2) h[i][i + 1] = h[i + 1][i] = 1.0;
    const auto sys = atomic_system(atoms(std::vector<double>(n, 0.01), h));
    const auto v = random_v(1, n);
    const double t = 0.05;
    // pairs evolve independently, so the p.g.fl factorizes
    double expect = 1.0;
    for (std::size_t i = 0; i < n; i += 2) {
      const auto pair = atomic_system(atoms({0.01, 0.01}, {{0, 1}, {1, 0}}));
      expect *= forward_chain(pair, testing::ChainOrder::Inf, t, TestFunction{{v[i], v[i + 1]}}, 0).pgfl;
    }
    SolverOptions capped = with(SolverMethod::Closure, 1e-7);
    capped.max_states = 100000;
    CHECK_THROWS_AS(solve_f_inf(sys, t, v, capped), BudgetError);
    capped.method = SolverMethod::Auto;
    const auto r = solve_f_inf(sys, t, v, capped);
    CHECK(r.method == "picard");
    CHECK(r.value == doctest::Approx(expect).epsilon(1e-7));
  }

  TEST_CASE("test function checks") {
    const auto sys = atomic_system(atoms({1, 1}, {{0, 1}, {1, 0}}));
    CHECK_THROWS_AS(check_test_function(sys, TestFunction{{0.5, 1.5}}), InvariantError);
    CHECK_THROWS_AS(check_test_function(sys, TestFunction{{0.5}}), InvariantError);
    const auto hv = h_transform(sys, TestFunction{{0.4, 0.8}}, 0);
    CHECK(hv.values == std::vector<double>{0.4, 0.0});
    CHECK(deficit_mass(sys, TestFunction{{0.4, 0.8}}) == doctest::Approx(0.8));
    CHECK(f_k_arguments(2, TestFunction{{0.4, 0.8}}).size() == 3);
  }
}
