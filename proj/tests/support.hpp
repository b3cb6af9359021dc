#pragma once
// Fixture builders and an independent exact oracle for small binary systems.

#include <cmath>
#include <cstdint>
#include <vector>

#include "packinglab/core.hpp"
#include "packinglab/pgfl.hpp"
#include "packinglab/rng.hpp"

namespace testing {

using namespace packinglab;

// Atoms on the integer line with an explicit kernel table.
inline Model atoms(const std::vector<double>& weights, const std::vector<std::vector<double>>& h) {
  DiscreteSites s;
  s.dimension = 1;
  for (std::size_t i = 0; i < weights.size(); ++i) s.coords.push_back(static_cast<double>(i));
  std::vector<double> flat;
  for (const auto& r : h) flat.insert(flat.end(), r.begin(), r.end());
  Model m;
  m.space = GroundSpace(std::move(s));
  m.measure = Atomic{weights};
  m.kernel = ConflictKernel::matrix(weights.size(), std::move(flat));
  return m;
}

inline Model line(double length, double density, ConflictKernel kernel, bool periodic = true) {
  Model m;
  m.space = GroundSpace(ContinuousBox{Box{{0.0}, {length}}, periodic});
  m.measure = Homogeneous{density};
  m.kernel = std::move(kernel);
  return m;
}

inline Model square(double side, double density, ConflictKernel kernel) {
  Model m;
  m.space = GroundSpace(ContinuousBox{Box{{0.0, 0.0}, {side, side}}, true});
  m.measure = Homogeneous{density};
  m.kernel = std::move(kernel);
  return m;
}

// Random binary instance: weights in [0.2, 2], symmetric {0,1} table.
inline Model random_binary(std::uint64_t seed, std::size_t n, double p_edge = 0.5) {
  CounterRng rng(seed, 7);
  std::vector<double> w(n);
  for (auto& x : w) x = 0.2 + 1.8 * rng.uniform();
  std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) h[i][j] = h[j][i] = rng.uniform() < p_edge ? 1.0 : 0.0;
  }
  return atoms(w, h);
}

inline TestFunction random_v(std::uint64_t seed, std::size_t n) {
  CounterRng rng(seed, 9);
  TestFunction v = TestFunction::constant(n, 0.0);
  for (auto& x : v.values) x = rng.uniform();
  return v;
}

// Forward Kolmogorov equations of the rain on a binary atomic system.
//
// Infinite order: the state is the set of blocked atoms; an arrival at an
// unblocked atom is accepted and blocks its conflict neighbourhood.
// Order one: the state is the set of atoms that have seen an arrival; an
// arrival is kept iff none of those conflicts with it.
//
// Alongside the expected product it carries, for one anchor atom, the mean
// number of kept points at the anchor and the Campbell numerator
// E[sum over kept anchor points of the product of v over the other kept points].
struct ChainResult {
  double pgfl = 0.0;
  double anchor_count = 0.0;
  double anchor_product = 0.0;
  double reduced_palm() const { return anchor_product / anchor_count; }
};

enum class ChainOrder { Inf, One };

inline ChainResult forward_chain(const AtomicSystem& sys, ChainOrder order, double t, const TestFunction& v,
                                 std::size_t anchor, int steps = 4000) {
  const std::size_t n = sys.size();
  const std::size_t states = std::size_t{1} << n;
  std::vector<std::uint32_t> nbr(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sys.kernel(i, j) == 1.0) nbr[i] |= 1u << j;
    }
  }
  // R probability, P product, C anchor count, Q anchor product; interleaved per state
  using Vec = std::vector<double>;
  auto deriv = [&](const Vec& x) {
    Vec d(x.size(), 0.0);
    for (std::size_t s = 0; s < states; ++s) {
      const double R = x[4 * s], P = x[4 * s + 1], C = x[4 * s + 2], Q = x[4 * s + 3];
      for (std::size_t a = 0; a < n; ++a) {
        const double rate = sys.weights[a];
        std::size_t to = s;
        bool kept = false;
        if (order == ChainOrder::Inf) {
          kept = !(s >> a & 1u);
          if (kept) to = s | nbr[a];
        } else {
          kept = (nbr[a] & s) == 0;
          to = s | (std::size_t{1} << a);
        }
        const double va = kept ? v[a] : 1.0;
        const bool at = kept && a == anchor;
        d[4 * s] -= rate * R;
        d[4 * s + 1] -= rate * P;
        d[4 * s + 2] -= rate * C;
        d[4 * s + 3] -= rate * Q;
        d[4 * to] += rate * R;
        d[4 * to + 1] += rate * va * P;
        d[4 * to + 2] += rate * (C + (at ? R : 0.0));
        d[4 * to + 3] += rate * (va * Q + (at ? P : 0.0));
      }
    }
    return d;
  };
  Vec x(4 * states, 0.0);
  x[0] = 1.0;
  x[1] = 1.0;
  const double dt = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = deriv(x);
    Vec y(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] + 0.5 * dt * k1[j];
    const Vec k2 = deriv(y);
    for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] + 0.5 * dt * k2[j];
    const Vec k3 = deriv(y);
    for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] + dt * k3[j];
    const Vec k4 = deriv(y);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += dt / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  ChainResult r;
  for (std::size_t s = 0; s < states; ++s) {
    r.pgfl += x[4 * s + 1];
    r.anchor_count += x[4 * s + 2];
    r.anchor_product += x[4 * s + 3];
  }
  return r;
}

}  // namespace testing
