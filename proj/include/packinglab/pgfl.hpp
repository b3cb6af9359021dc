#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "packinglab/core.hpp"
#include "packinglab/matern.hpp"

namespace packinglab {

/// Raised when a solver cannot certify its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_increment)
      : std::runtime_error(what), last_increment_(last_increment) {}
  double last_increment() const noexcept { return last_increment_; }

 private:
  double last_increment_;
};

/// Finite set of weighted atoms with a full conflict table. Built directly
/// from an atomic model, or by discretizing a continuous one on a grid.
struct AtomicSystem {
  Model model;                 // source model, used for h against arbitrary locations
  std::size_t dimension = 0;
  std::vector<double> positions;  // atom-major
  std::vector<double> weights;
  std::vector<double> h;          // n x n, h[i * n + j]
  bool binary = true;
  bool discretized = false;
  std::vector<std::size_t> resolution;  // cells per axis when discretized

  std::size_t size() const { return weights.size(); }
  double kernel(std::size_t i, std::size_t j) const { return h[i * size() + j]; }
  std::span<const double> position(std::size_t i) const { return {positions.data() + i * dimension, dimension}; }
  double total_weight() const;
};

/// Requires an atomic measure on discrete sites.
AtomicSystem atomic_system(const Model& model);

/// Cell-centre atoms with weight density * cell volume; h evaluated between
/// centres with the model's (possibly periodic) distance.
AtomicSystem discretize(const Model& model, const std::vector<std::size_t>& cells_per_axis);
AtomicSystem discretize(const Model& model, std::size_t cells_per_axis);

/// Atomic models pass through; continuous ones are discretized.
AtomicSystem to_atomic(const Model& model, std::size_t cells_per_axis);

/// Values in [0, 1], one per atom of an AtomicSystem (on a discretized
/// continuous model this is the grid representation).
struct TestFunction {
  std::vector<double> values;

  static TestFunction constant(std::size_t n, double c) { return {std::vector<double>(n, c)}; }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool is_one() const;
};

/// Throws InvariantError unless sizes match and values lie in [0, 1].
void check_test_function(const AtomicSystem& sys, const TestFunction& v);

/// v(y) (1 - h(x, y)) with x an atom.
TestFunction h_transform(const AtomicSystem& sys, const TestFunction& v, std::size_t atom);

/// 1 - h(., x) at every atom, x an arbitrary location of the model space.
TestFunction conflict_complement(const AtomicSystem& sys, std::span<const double> x, std::int64_t site = -1);

/// int (1 - v) dLambda.
double deficit_mass(const AtomicSystem& sys, const TestFunction& v);

double poisson_pgfl(const AtomicSystem& sys, double t, const TestFunction& v);
/// Constant test function on any model: exp(-t (1 - c) Lambda(space)).
double poisson_pgfl(const Model& model, double t, double c);

enum class SolverMethod { Auto, Closure, Picard };
std::string to_string(SolverMethod m);

struct SolverOptions {
  double tol = 1e-9;
  SolverMethod method = SolverMethod::Auto;
  std::size_t max_states = 4'000'000;
  int max_depth = 400;
};

struct SolverResult {
  double value = 0.0;
  std::string method;            // "closure-ode" | "picard" | "quadrature" | "closed-form"
  double tol = 0.0;
  double error_estimate = 0.0;
  std::size_t states_or_depth = 0;
  std::size_t work = 0;
  std::vector<double> certificate;  // Picard term ratios, or RK4 successive differences
};

struct SolverCurve {
  std::vector<double> times;
  std::vector<double> values;
  SolverResult meta;  // value holds the last grid value
};

SolverResult solve_f_inf(const AtomicSystem& sys, double t, const TestFunction& v, const SolverOptions& opts = {});
SolverCurve solve_f_inf_curve(const AtomicSystem& sys, const std::vector<double>& times, const TestFunction& v,
                              const SolverOptions& opts = {});

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};
Bounds f_inf_bounds(const AtomicSystem& sys, double t, const TestFunction& v);

/// Index sets and transform rules of the joint k-thinning system.
struct KMaternSystem {
  int k = 1;
  std::vector<std::vector<int>> I;  // I[j - 1] = I_j, truncated at k
  std::vector<int> J;               // J_k
  std::vector<int> w;               // w[i - 1]: component index for w_i, 0 meaning the constant 1
  std::vector<int> thinning_level;  // per term i: the M level whose points thin it, -1 for none
  std::vector<std::vector<std::uint8_t>> thins;  // thins[i - 1][j - 1]: term i thins component j

  bool in_I(int j, int l) const;
  bool in_J(int l) const;
};
KMaternSystem index_sets(int k);

/// g_k(t, v_1..v_{k+1}).
SolverResult solve_g_k(const AtomicSystem& sys, int k, double t, const std::vector<TestFunction>& vs,
                       const SolverOptions& opts = {});
SolverCurve solve_g_k_curve(const AtomicSystem& sys, int k, const std::vector<double>& times,
                            const std::vector<TestFunction>& vs, const SolverOptions& opts = {});

/// Arguments of g_k that give the marginal p.g.fl of M_k.
std::vector<TestFunction> f_k_arguments(int k, const TestFunction& v);

/// p.g.fl of M_k; k = 0 is the Poisson closed form.
SolverResult f_k(const AtomicSystem& sys, int k, double t, const TestFunction& v, const SolverOptions& opts = {});
SolverCurve f_k_curve(const AtomicSystem& sys, int k, const std::vector<double>& times, const TestFunction& v,
                      const SolverOptions& opts = {});

/// Any order: finite k >= 0 or infinity.
SolverResult solve_pgfl(const AtomicSystem& sys, MaternOrder order, double t, const TestFunction& v,
                        const SolverOptions& opts = {});
SolverCurve solve_pgfl_curve(const AtomicSystem& sys, MaternOrder order, const std::vector<double>& times,
                             const TestFunction& v, const SolverOptions& opts = {});

/// m_k(t, x) = int_0^t f_{k-1}(tau, 1 - h(., x)) dtau by composite Simpson with
/// step halving. `order` is k >= 1 or infinity.
SolverResult moment_density(const AtomicSystem& sys, MaternOrder order, double t, const TestFunction& complement,
                            const SolverOptions& opts = {});
SolverResult moment_density_at_atom(const AtomicSystem& sys, MaternOrder order, double t, std::size_t atom,
                                    const SolverOptions& opts = {});
/// Continuous or atomic model; k = 1 uses the Poisson closed form exactly,
/// other orders discretize at `cells_per_axis`.
SolverResult moment_density(const Model& model, MaternOrder order, double t, std::span<const double> x,
                            const SolverOptions& opts = {}, std::size_t cells_per_axis = 16);

/// Composite Simpson with interval doubling until successive values differ by < tol / 2.
/// `curve` maps a uniform grid on [0, t] to integrand values.
SolverResult simpson_certified(const std::function<std::vector<double>(const std::vector<double>&)>& curve,
                               double t, double tol);

}  // namespace packinglab
