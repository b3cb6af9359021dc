#include <doctest.h>

#include <cmath>
#include <cstring>

#include "packinglab/mc.hpp"
#include "packinglab/palm.hpp"
#include "packinglab/validation.hpp"
#include "support.hpp"

using namespace packinglab;
using testing::atoms;
using testing::line;
using testing::random_binary;
using testing::random_v;
using testing::square;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("mc") {
  TEST_CASE("unit test function is exact") {
    const auto m = square(6, 1.0, ConflictKernel::hard(0.5));
    const auto e = estimate_pgfl(m, MaternOrder::inf(), 2.0, {constant_function(1.0)}, 200, 1);
    CHECK(e.mean == 1.0);
    CHECK(e.se == 0.0);
    CHECK(e.reps == 200);
  }

  TEST_CASE("order zero is the Poisson rain") {
    const auto m = line(10, 0.6, ConflictKernel::hard(0.5));
    const auto e = estimate_pgfl(m, MaternOrder::finite(0), 1.0, {constant_function(0.9)}, 20000, 2);
    CHECK(std::abs(z_score(e, poisson_pgfl(m, 1.0, 0.9))) < 4.0);
  }

  TEST_CASE("moments") {
    const auto empty = line(10, 0.0, ConflictKernel::hard(0.5));
    CHECK(estimate_moment(empty, MaternOrder::inf(), 1.0, constant_function(1.0), 100, 3).mean == 0.0);
    const auto m = line(10, 1.0, ConflictKernel::hard(0.5));
    const auto region = box_indicator(Box{{2.0}, {6.0}});
    // k = 1: (1 - e^{-t}) per unit length
    const auto e = estimate_moment(m, MaternOrder::finite(1), 2.0, region, 20000, 4);
    CHECK(std::abs(z_score(e, 4.0 * (1 - std::exp(-2.0)))) < 4.0);
  }

  TEST_CASE("joint estimator reduces to the marginals") {
    const auto m = random_binary(31, 5);
    const auto v = site_function(random_v(31, 5));
    const auto one = constant_function(1.0);
    const std::vector<PgflQuery> q{{MaternOrder::finite(1), 1.2, {v}},
                                   {JointQR{1}, 1.2, {v, one}},
                                   {MaternOrder::finite(0), 1.2, {v}},
                                   {JointQR{1}, 1.2, {v, v}},
                                   {MaternOrder::finite(1), 1.2, {v}},
                                   {JointQR{2}, 1.2, {v, one, one}}};
    const auto e = estimate_pgfl_batch(m, q, 3000, 5);
    CHECK(same_bits(e[0].mean, e[1].mean));
    CHECK(same_bits(e[2].mean, e[3].mean));
    CHECK(same_bits(e[4].mean, e[5].mean));
  }

  TEST_CASE("results do not depend on the worker count") {
    const auto m = square(6, 1.0, ConflictKernel::constant(0.6, 0.7));
    McOptions a, b;
    a.jobs = 1;
    b.jobs = 3;
    const auto v = constant_function(0.95);
    const auto x = estimate_pgfl(m, MaternOrder::inf(), 2.0, {v}, 1000, 6, a);
    const auto y = estimate_pgfl(m, MaternOrder::inf(), 2.0, {v}, 1000, 6, b);
    CHECK(same_bits(x.mean, y.mean));
    CHECK(same_bits(x.se, y.se));
    const auto r1 = renyi_density(200, 1, 1, 5, 40, 6, 1), r3 = renyi_density(200, 1, 1, 5, 40, 6, 3);
    CHECK(same_bits(r1.mean, r3.mean));
  }

  TEST_CASE("standard error shrinks as one over root reps") {
    const auto m = line(10, 1.0, ConflictKernel::hard(0.5));
    const auto v = constant_function(0.9);
    const auto a = estimate_pgfl(m, MaternOrder::inf(), 1.0, {v}, 4000, 7);
    const auto b = estimate_pgfl(m, MaternOrder::inf(), 1.0, {v}, 16000, 7);
    CHECK(b.se / a.se > 0.4);
    CHECK(b.se / a.se < 0.6);
  }

  TEST_CASE("simulation agrees with the solver on a discrete instance") {
    const auto m = random_binary(41, 4);
    const auto sys = atomic_system(m);
    const auto v = random_v(41, 4);
    const auto e = estimate_pgfl(m, MaternOrder::inf(), 1.5, {site_function(v)}, 40000, 8);
    CHECK(std::abs(z_score(e, solve_f_inf(sys, 1.5, v).value)) < 4.0);
    const auto p = estimate_palm_pgfl(m, MaternOrder::inf(), 1.5, site_function(v), site_indicator({1}), 40000, 9);
    CHECK(std::abs(z_score(p, solve_palm_f_inf(sys, 1.5, v, 1).reduced)) < 4.0);
  }

  TEST_CASE("Palm estimator") {
    const auto m = atoms({1.0, 1.0}, {{0, 0}, {0, 0}});
    const auto sys = atomic_system(m);
    const TestFunction v{{0.5, 0.5}};
    const auto e = estimate_palm_pgfl(m, MaternOrder::inf(), 1.0, site_function(v), site_indicator({0}), 20000, 10);
    CHECK(std::abs(z_score(e, poisson_pgfl(sys, 1.0, v))) < 4.0);
    const auto one = estimate_palm_pgfl(m, MaternOrder::inf(), 1.0, constant_function(1.0), site_indicator({0}), 500, 10);
    CHECK(one.mean == 1.0);
    const auto empty = atoms({0.0, 1.0}, {{0, 0}, {0, 0}});
    CHECK_THROWS_AS(estimate_palm_pgfl(empty, MaternOrder::inf(), 1.0, constant_function(0.5), site_indicator({0}), 50, 1),
                    InvariantError);
  }

  TEST_CASE("expansion identity") {
    CHECK(expansion_check({}).lhs == 1.0);
    CHECK(expansion_check({}).rhs == 1.0);
    const auto one = expansion_check({0.3});
    CHECK(one.rhs == doctest::Approx(0.3));
    const std::vector<double> v{0.1, 0.9, 0.5, 0.25, 0.75, 0.0, 1.0, 0.6, 0.33, 0.8};
    const auto e = expansion_check(v);
    CHECK(e.lhs == doctest::Approx(e.rhs).epsilon(1e-12));
    CHECK_THROWS(expansion_check(std::vector<double>(13, 0.5)));
  }

  TEST_CASE("parking curve") {
    const std::vector<double> times{0.5, 1.0, 2.0, 4.0};
    const auto c = renyi_curve(2000, 1, 1, times, 40, 12);
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(std::abs(z_score(c.density[i], renyi_coverage(times[i]))) < 4.0);
      if (i) CHECK(c.density[i].mean > c.density[i - 1].mean);
    }
    CHECK(renyi_coverage(1e-3) == doctest::Approx(1e-3).epsilon(1e-3));
    const auto tiny = renyi_density(2000, 1, 1, 1e-4, 10, 12);
    CHECK(tiny.mean < 1e-3);
  }

  TEST_CASE("parking fast path matches the general pipeline") {
    const double L = 100, t = 3.0;
    const auto m = line(L, 1.0, ConflictKernel::hard(1.0, true));
    const auto g = estimate_moment(m, MaternOrder::inf(), t, constant_function(1.0), 3000, 13);
    const auto f = renyi_density(L, 1, 1, t, 3000, 14);
    const double se = std::hypot(g.se / L, f.se);
    CHECK(std::abs(g.mean / L - f.mean) < 4.0 * se);
  }

  TEST_CASE("saturation doubles until the change is small") {
    const auto s = renyi_saturate(1000, 1, 1, 4, 0.05, 10, 15);
    CHECK(s.reached);
    CHECK(s.last_change < 0.05);
    CHECK(s.t >= 4.0);
  }
}
