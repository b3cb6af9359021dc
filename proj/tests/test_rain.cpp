#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "packinglab/rain.hpp"
#include "support.hpp"

using namespace packinglab;
using testing::atoms;
using testing::line;
using testing::square;

TEST_SUITE("rain") {
  TEST_CASE("point counts follow the intensity") {
    // Poisson mean lambda |W| t; variance equals the mean
    const auto m = square(5, 0.8, ConflictKernel::hard(0.5));
    const int reps = 400;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) sum += static_cast<double>(sample_rain(m, 2.5, derive_seed(11, r)).size());
    const double mean = 0.8 * 25 * 2.5;
    CHECK(std::abs(sum / reps - mean) < 4.0 * std::sqrt(mean / reps));
  }

  TEST_CASE("patterns respect window, timers and ids") {
    const auto m = square(4, 1.5, ConflictKernel::hard(0.5));
    const Box win{{1.0, 0.5}, {3.0, 2.0}};
    const auto p = sample_rain(m, win, 3.0, 5);
    REQUIRE(p.size() > 0);
    std::set<double> timers;
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p.id(i) == i);
      CHECK(win.contains(p.location(i)));
      CHECK(p.timer(i) >= 0.0);
      CHECK(p.timer(i) < 3.0);
      timers.insert(p.timer(i));
    }
    CHECK(timers.size() == p.size());
  }

  TEST_CASE("same seed gives the same pattern") {
    const auto m = line(20, 2.0, ConflictKernel::hard(0.5));
    std::ostringstream a, b, c;
    write_pattern_csv(a, sample_rain(m, 1.0, 99));
    write_pattern_csv(b, sample_rain(m, 1.0, 99));
    write_pattern_csv(c, sample_rain(m, 1.0, 100));
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
  }

  TEST_CASE("zero intensity gives an empty pattern") {
    CHECK(sample_rain(line(10, 0.0, ConflictKernel::hard(1.0)), 5.0, 1).empty());
    CHECK(sample_rain(atoms({0.0, 0.0}, {{0, 1}, {1, 0}}), 5.0, 1).empty());
  }

  TEST_CASE("discrete rain carries site indices") {
    const auto m = atoms({3.0, 0.0, 2.0}, {{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
    const auto p = sample_rain(m, 4.0, 3);
    REQUIRE(p.size() > 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p.site(i) != 1);
      CHECK(p.location(i)[0] == static_cast<double>(p.site(i)));
    }
  }

  TEST_CASE("grid hash finds exactly the all-pairs conflicts") {
    const auto m = line(30, 3.0, ConflictKernel::constant(0.4, 0.7));
    const auto p = sample_rain(m, 1.0, 21);
    const auto c = sample_conflicts(p, m, 77);
    ConflictRealization brute;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = i + 1; j < p.size(); ++j) {
        const double h = m.conflict(p.location(i), -1, p.location(j), -1);
        if (conflict_indicator(77, p.id(i), p.id(j), h)) brute.add(p.id(i), p.id(j));
      }
    }
    CHECK(c.pairs() == brute.pairs());
  }

  TEST_CASE("conflict frequency matches h") {
    const double h = 0.3;
    const int n = 200000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += conflict_indicator(5, static_cast<std::uint32_t>(i), 1u << 30, h);
    CHECK(std::abs(hits / double(n) - h) < 4.0 * std::sqrt(h * (1 - h) / n));
    CHECK(conflict_indicator(5, 3, 8, 0.5) == conflict_indicator(5, 8, 3, 0.5));
  }

  TEST_CASE("csv round trip is bit exact") {
    const auto m = square(3, 2.0, ConflictKernel::hard(0.4));
    const auto p = sample_rain(m, 1.5, 8);
    const auto c = sample_conflicts(p, m, 8);
    std::stringstream ps, cs;
    write_pattern_csv(ps, p);
    write_conflicts_csv(cs, c);
    const auto q = read_pattern_csv(ps, p.window(), p.t_max());
    const auto d = read_conflicts_csv(cs);
    REQUIRE(q.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(q.id(i) == p.id(i));
      CHECK(q.timer(i) == p.timer(i));
      CHECK(q.location(i)[0] == p.location(i)[0]);
      CHECK(q.location(i)[1] == p.location(i)[1]);
    }
    CHECK(d.pairs() == c.pairs());
    std::istringstream bad("x,y\n1,2\n");
    CHECK_THROWS_AS(read_pattern_csv(bad, p.window(), 1.0), InvariantError);
  }

  TEST_CASE("memory budget refuses oversized rain") {
    setenv("PACKINGLAB_BUDGET_MB", "1", 1);
    CHECK_THROWS_AS(sample_rain(square(1000, 10.0, ConflictKernel::hard(0.1)), 10.0, 1), BudgetError);
    unsetenv("PACKINGLAB_BUDGET_MB");
    CHECK(memory_budget_bytes() == std::size_t{2048} << 20);
  }
}
