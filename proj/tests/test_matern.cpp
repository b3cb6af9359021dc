#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "packinglab/matern.hpp"
#include "packinglab/rain.hpp"
#include "support.hpp"

using namespace packinglab;
using testing::line;
using testing::square;

namespace {

// a(1) - b(2) - c(3) on a line, conflicts a-b and b-c
struct Chain {
  TimedPointPattern p{1, Box{{0}, {3}}, 4.0, 0};
  ConflictRealization c;
  Chain() {
    p.push_back(0, std::vector<double>{0.5}, 1.0);
    p.push_back(1, std::vector<double>{1.5}, 2.0);
    p.push_back(2, std::vector<double>{2.5}, 3.0);
    c.add(0, 1);
    c.add(1, 2);
  }
};

struct Sample {
  TimedPointPattern p;
  ConflictRealization c;
};

Sample draw(std::uint64_t seed, double t = 3.0) {
  const auto m = square(8, 1.0, ConflictKernel::constant(0.7, 0.6));
  Sample s{sample_rain(m, t, seed), {}};
  s.c = sample_conflicts(s.p, m, seed);
  return s;
}

// Accept in timer order when no accepted point conflicts; reads the raw pairs.
IdSet rsa(const TimedPointPattern& p, const ConflictRealization& c) {
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p.timer(a) < p.timer(b); });
  IdSet out;
  for (auto i : idx) {
    bool free = true;
    for (auto a : out) free = free && !c.contains(a, p.id(i));
    if (free) out.push_back(p.id(i));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool subset(const IdSet& a, const IdSet& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

}  // namespace

TEST_SUITE("matern") {
  TEST_CASE("chain by hand") {
    Chain ch;
    CHECK(matern_k(ch.p, ch.c, 1) == IdSet{0});
    CHECK(matern_k(ch.p, ch.c, 2) == IdSet{0, 2});
    CHECK(matern_inf(ch.p, ch.c) == IdSet{0, 2});
    CHECK(matern_type_I(ch.p, ch.c).empty());
    const auto g = build_conflict_graph(ch.p, ch.c);
    CHECK(ids_of(g, selection_k(g, 0)) == IdSet{0, 1, 2});
    CHECK_THROWS_AS(matern_k(ch.p, ch.c, 0), InvariantError);
    CHECK(g.edge_count == 2);
    CHECK(g.max_depth() == 2);
    CHECK(ancestors_by_search(g, 2) == std::vector<std::uint32_t>{0, 1});
  }

  TEST_CASE("no conflicts keeps everything") {
    const auto s = draw(3);
    const ConflictRealization none;
    IdSet all(s.p.ids().begin(), s.p.ids().end());
    CHECK(matern_inf(s.p, none) == all);
    CHECK(matern_k(s.p, none, 1) == all);
    CHECK(matern_type_I(s.p, none) == all);
  }

  TEST_CASE("thinning csv") {
    Chain ch;
    std::ostringstream os;
    write_thinning_csv(os, ch.p, matern_inf(ch.p, ch.c));
    CHECK(os.str() == "id,kept_flag\n0,1\n1,0\n2,1\n");
  }

  TEST_CASE("infinite order equals sequential adsorption") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto s = draw(seed);
      const auto inf = matern_inf(s.p, s.c);
      CHECK(inf == rsa(s.p, s.c));
      CHECK(conflicting_pairs_within(s.c, inf) == 0);
    }
  }

  TEST_CASE("ancestor recursion matches search") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s = draw(seed);
      const auto g = build_conflict_graph(s.p, s.c);
      const auto A = ancestor_sets(g);
      for (std::uint32_t v = 0; v < g.size(); ++v) REQUIRE(A[v] == ancestors_by_search(g, v));
    }
  }

  TEST_CASE("hierarchy nests and stabilizes") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s = draw(seed);
      const auto g = build_conflict_graph(s.p, s.c);
      const auto inf = ids_of(g, selection_inf(g));
      std::vector<IdSet> M;
      for (int k = 0; k <= static_cast<int>(g.max_depth()) + 1; ++k) M.push_back(ids_of(g, selection_k(g, k)));
      for (std::size_t k = 0; k + 2 < M.size(); ++k) {
        if (k % 2 == 0) {
          CHECK(subset(M[k + 2], M[k]));
          CHECK(subset(inf, M[k]));
        } else {
          CHECK(subset(M[k], M[k + 2]));
          CHECK(subset(M[k], inf));
        }
      }
      CHECK(M[g.max_depth()] == inf);
      CHECK(M.back() == inf);
      CHECK(subset(matern_type_I(s.p, s.c), M[1]));
      CHECK_NOTHROW(selection_inf(g));
      CHECK(selection_inf_greedy(g) == selection_inf_recursive(g));
    }
  }

  TEST_CASE("Q and R partition the pattern") {
    Chain ch;
    const auto qr1 = partition_QR(ch.p, ch.c, 1);
    CHECK(qr1.Q.size() == 1);
    CHECK(qr1.Q[0] == IdSet{0});
    CHECK(qr1.R == IdSet{1, 2});
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = draw(seed);
      for (int k = 1; k <= 4; ++k) {
        const auto qr = partition_QR(s.p, s.c, k);
        std::size_t total = qr.R.size();
        for (const auto& q : qr.Q) total += q.size();
        CHECK(total == s.p.size());
      }
      CHECK(partition_QR(s.p, s.c, 1).Q[0] == matern_k(s.p, s.c, 1));
    }
  }

  TEST_CASE("thinning commutes with timer restriction") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s = draw(seed, 3.0);
      const auto r = restrict(s.p, 0.0, 1.7);
      for (std::uint32_t id : r.ids()) REQUIRE(s.p.timer(*s.p.index_of(id)) < 1.7);
      for (int k : {1, 2, 3}) {
        IdSet direct;
        for (auto id : matern_k(s.p, s.c, k)) {
          if (s.p.timer(*s.p.index_of(id)) < 1.7) direct.push_back(id);
        }
        CHECK(matern_k(r, s.c, k) == direct);
      }
    }
  }

  TEST_CASE("sandwich layers enclose the new infinite-order points") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s = draw(seed, 3.0);
      const auto layers = sandwich_layers(s.p, s.c, MaternOrder::inf(), 1.0, 2.0);
      IdSet mid;
      for (auto id : matern_inf(restrict(s.p, 0.0, 2.0), s.c)) {
        if (s.p.timer(*s.p.index_of(id)) >= 1.0) mid.push_back(id);
      }
      CHECK(subset(layers.lower, mid));
      CHECK(subset(mid, layers.upper));
    }
    Chain ch;
    CHECK_THROWS_AS(sandwich_layers(ch.p, ch.c, MaternOrder::inf(), 2.0, 1.0), InvariantError);
  }

  TEST_CASE("type I retention on the line") {
    // a point survives iff no other arrival before t lies within r: lambda t exp(-2 r lambda t) per unit length
    const double lam = 1.0, r = 0.5, t = 1.2, L = 50;
    const auto m = line(L, lam, ConflictKernel::hard(r));
    const int reps = 400;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < reps; ++i) {
      const auto p = sample_rain(m, t, derive_seed(4, i));
      const double n = static_cast<double>(matern_type_I(p, sample_conflicts(p, m, derive_seed(5, i))).size()) / L;
      sum += n;
      sq += n * n;
    }
    const double mean = sum / reps, se = std::sqrt((sq / reps - mean * mean) / (reps - 1));
    CHECK(std::abs(mean - lam * t * std::exp(-2 * r * lam * t)) < 4 * se);
  }
}
