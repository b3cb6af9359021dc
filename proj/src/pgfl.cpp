#include "packinglab/pgfl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "systems.hpp"

namespace packinglab {

double AtomicSystem::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

namespace {

bool all_binary(const std::vector<double>& h) {
  return std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

}  // namespace

AtomicSystem atomic_system(const Model& model) {
  require_valid(model);
  if (!model.space.is_discrete() || !std::holds_alternative<Atomic>(model.measure)) {
    throw InvariantError("measure_shape", "atomic_system needs discrete sites with an atomic measure");
  }
  AtomicSystem sys;
  sys.model = model;
  const auto& sites = model.space.sites();
  const std::size_t n = sites.count();
  sys.dimension = sites.dimension;
  sys.positions = sites.coords;
  sys.weights = std::get<Atomic>(model.measure).weights;
  sys.h.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sys.h[i * n + j] = model.conflict(sites.site(i), static_cast<std::int64_t>(i), sites.site(j),
                                        static_cast<std::int64_t>(j));
  sys.binary = all_binary(sys.h);
  return sys;
}

AtomicSystem discretize(const Model& model, const std::vector<std::size_t>& cells) {
  require_valid(model);
  if (model.space.is_discrete()) throw InvariantError("measure_shape", "discretize needs a continuous space");
  const Box& dom = model.space.box().bounds;
  const std::size_t d = dom.dimension();
  if (cells.size() != d) throw InvariantError("dimension", "one cell count per axis");
  PiecewiseGrid grid{cells, {}};
  const std::size_t n = grid.cell_count();
  if (n == 0) throw InvariantError("resolution", "cell counts must be positive");
  AtomicSystem sys;
  sys.model = model;
  sys.dimension = d;
  sys.discretized = true;
  sys.resolution = cells;
  sys.positions.resize(n * d);
  sys.weights.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const Box b = grid.cell_box(dom, c);
    std::vector<double> centre(d);
    for (std::size_t a = 0; a < d; ++a) centre[a] = 0.5 * (b.lower[a] + b.upper[a]);
    std::copy(centre.begin(), centre.end(), sys.positions.begin() + static_cast<std::ptrdiff_t>(c * d));
    double density = 0.0;
    if (const auto* hom = std::get_if<Homogeneous>(&model.measure)) {
      density = hom->density;
    } else {
      const auto& g = std::get<PiecewiseGrid>(model.measure);
      std::size_t flat = 0;
      for (std::size_t a = 0; a < d; ++a) {
        const double w = dom.side(a) / static_cast<double>(g.cells[a]);
        auto idx = static_cast<std::size_t>(std::floor((centre[a] - dom.lower[a]) / w));
        flat = flat * g.cells[a] + std::min(idx, g.cells[a] - 1);
      }
      density = g.densities[flat];
    }
    sys.weights[c] = density * b.volume();
  }
  sys.h.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sys.h[i * n + j] = model.conflict(sys.position(i), -1, sys.position(j), -1);
  sys.binary = all_binary(sys.h);
  return sys;
}

AtomicSystem discretize(const Model& model, std::size_t cells_per_axis) {
  return discretize(model, std::vector<std::size_t>(model.space.dimension(), cells_per_axis));
}

AtomicSystem to_atomic(const Model& model, std::size_t cells_per_axis) {
  return model.space.is_discrete() ? atomic_system(model) : discretize(model, cells_per_axis);
}

bool TestFunction::is_one() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 1.0; });
}

void check_test_function(const AtomicSystem& sys, const TestFunction& v) {
  if (v.size() != sys.size()) throw InvariantError("test_function", "one value per atom required");
  for (double x : v.values) {
    if (!(x >= 0.0 && x <= 1.0)) throw InvariantError("test_function", "values must lie in [0, 1]");
  }
  if (!std::isfinite(deficit_mass(sys, v))) throw InvariantError("integrability", "int (1 - v) dLambda is not finite");
}

TestFunction h_transform(const AtomicSystem& sys, const TestFunction& v, std::size_t atom) {
  TestFunction out = v;
  for (std::size_t y = 0; y < sys.size(); ++y) out.values[y] *= 1.0 - sys.kernel(atom, y);
  return out;
}

TestFunction conflict_complement(const AtomicSystem& sys, std::span<const double> x, std::int64_t site) {
  TestFunction out = TestFunction::constant(sys.size(), 1.0);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const std::int64_t si = sys.discretized ? -1 : static_cast<std::int64_t>(i);
    out.values[i] = 1.0 - sys.model.conflict(sys.position(i), si, x, site);
  }
  return out;
}

double deficit_mass(const AtomicSystem& sys, const TestFunction& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) s += sys.weights[i] * (1.0 - v[i]);
  return s;
}

double poisson_pgfl(const AtomicSystem& sys, double t, const TestFunction& v) {
  check_test_function(sys, v);
  return std::exp(-t * deficit_mass(sys, v));
}

double poisson_pgfl(const Model& model, double t, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw InvariantError("test_function", "values must lie in [0, 1]");
  return std::exp(-t * (1.0 - c) * model.total_mass());
}

std::string to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::Auto:
      return "auto";
    case SolverMethod::Closure:
      return "closure";
    case SolverMethod::Picard:
      return "picard";
  }
  return "auto";
}

namespace {

SolverCurve to_curve(const std::vector<double>& times, detail::RunOutput out) {
  SolverCurve c;
  c.times = times;
  c.values = std::move(out.values.front());
  c.meta = std::move(out.meta);
  c.meta.value = c.values.empty() ? 1.0 : c.values.back();
  return c;
}

SolverResult single(const SolverCurve& c) { return c.meta; }

}  // namespace

SolverCurve solve_f_inf_curve(const AtomicSystem& sys, const std::vector<double>& times, const TestFunction& v,
                              const SolverOptions& opts) {
  return to_curve(times, detail::run(sys, {std::nullopt, std::nullopt}, {v}, {detail::kPgfl}, times, opts));
}

SolverResult solve_f_inf(const AtomicSystem& sys, double t, const TestFunction& v, const SolverOptions& opts) {
  return single(solve_f_inf_curve(sys, {t}, v, opts));
}

Bounds f_inf_bounds(const AtomicSystem& sys, double t, const TestFunction& v) {
  check_test_function(sys, v);
  Bounds b;
  b.lower = std::exp(-t * deficit_mass(sys, v));
  double sum = 0.0;
  for (std::size_t x = 0; x < sys.size(); ++x) {
    const double deficit = sys.weights[x] * (1.0 - v[x]);
    if (deficit == 0.0) continue;
    double A = 0.0;
    for (std::size_t y = 0; y < sys.size(); ++y) A += sys.weights[y] * (1.0 - v[y] * (1.0 - sys.kernel(x, y)));
    const double ratio = A < 1e-12 ? t : -std::expm1(-t * A) / A;
    sum += deficit * ratio;
  }
  b.upper = 1.0 - sum;
  return b;
}

bool KMaternSystem::in_I(int j, int l) const {
  const auto& s = I[static_cast<std::size_t>(j - 1)];
  return std::find(s.begin(), s.end(), l) != s.end();
}

bool KMaternSystem::in_J(int l) const { return std::find(J.begin(), J.end(), l) != J.end(); }

KMaternSystem index_sets(int k) {
  if (k < 1) throw InvariantError("order", "k must be >= 1");
  KMaternSystem s;
  s.k = k;
  for (int j = 1; j <= k; ++j) {
    std::vector<int> set;
    for (int l = 0; l <= k; ++l) {
      const bool even = l % 2 == 0;
      if (j % 2 == 1 ? (even || l >= j) : (even && l <= j - 2)) set.push_back(l);
    }
    s.I.push_back(std::move(set));
  }
  for (int l = 0; l <= k; l += 2) {
    if (k % 2 == 1 ? l <= k - 1 : l <= k) s.J.push_back(l);
  }
  for (int i = 1; i <= k + 1; ++i) {
    int w = 0;
    if (k % 2 == 0) {
      if (i == k + 1) w = k;
      else w = i % 2 == 1 ? i + 2 : i - 2;
    } else {
      if (i == k + 1) w = k - 1;
      else if (i == k) w = k + 1;
      else w = i % 2 == 1 ? i + 2 : i - 2;
    }
    s.w.push_back(w);
  }
  for (int i = 1; i <= k + 1; ++i) {
    int src = 0;
    if (i == k + 1) src = k % 2 == 0 ? k : k - 1;
    else src = i % 2 == 1 ? i : i - 2;
    const int level = src - 1;
    s.thinning_level.push_back(level);
    std::vector<std::uint8_t> row;
    for (int j = 1; j <= k; ++j) row.push_back(level >= 0 && s.in_I(j, level));
    row.push_back(level >= 0 && s.in_J(level));
    s.thins.push_back(std::move(row));
  }
  return s;
}

SolverCurve solve_g_k_curve(const AtomicSystem& sys, int k, const std::vector<double>& times,
                            const std::vector<TestFunction>& vs, const SolverOptions& opts) {
  if (k < 1) throw InvariantError("order", "k must be >= 1");
  return to_curve(times, detail::run(sys, {k, std::nullopt}, vs, {detail::kPgfl}, times, opts));
}

SolverResult solve_g_k(const AtomicSystem& sys, int k, double t, const std::vector<TestFunction>& vs,
                       const SolverOptions& opts) {
  return single(solve_g_k_curve(sys, k, {t}, vs, opts));
}

std::vector<TestFunction> f_k_arguments(int k, const TestFunction& v) {
  const auto s = index_sets(k);
  const auto one = TestFunction::constant(v.size(), 1.0);
  std::vector<TestFunction> out;
  for (int j = 1; j <= k; ++j) out.push_back(s.in_I(j, k) ? v : one);
  out.push_back(s.in_J(k) ? v : one);
  return out;
}

SolverCurve f_k_curve(const AtomicSystem& sys, int k, const std::vector<double>& times, const TestFunction& v,
                      const SolverOptions& opts) {
  if (k < 0) throw InvariantError("order", "k must be >= 0");
  if (k == 0) {
    check_test_function(sys, v);
    SolverCurve c;
    c.times = times;
    const double a = deficit_mass(sys, v);
    for (double t : times) c.values.push_back(std::exp(-t * a));
    c.meta.method = "closed-form";
    c.meta.tol = opts.tol;
    c.meta.value = c.values.empty() ? 1.0 : c.values.back();
    return c;
  }
  return solve_g_k_curve(sys, k, times, f_k_arguments(k, v), opts);
}

SolverResult f_k(const AtomicSystem& sys, int k, double t, const TestFunction& v, const SolverOptions& opts) {
  return single(f_k_curve(sys, k, {t}, v, opts));
}

SolverCurve solve_pgfl_curve(const AtomicSystem& sys, MaternOrder order, const std::vector<double>& times,
                             const TestFunction& v, const SolverOptions& opts) {
  return order.infinite ? solve_f_inf_curve(sys, times, v, opts) : f_k_curve(sys, order.k, times, v, opts);
}

SolverResult solve_pgfl(const AtomicSystem& sys, MaternOrder order, double t, const TestFunction& v,
                        const SolverOptions& opts) {
  return single(solve_pgfl_curve(sys, order, {t}, v, opts));
}

SolverResult simpson_certified(const std::function<std::vector<double>(const std::vector<double>&)>& curve,
                               double t, double tol) {
  SolverResult r;
  r.method = "quadrature";
  r.tol = tol;
  if (t == 0.0) return r;
  auto simpson = [&](std::size_t n) {
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = t * static_cast<double>(i) / static_cast<double>(n);
    grid[n] = t;
    const auto f = curve(grid);
    double s = f[0] + f[n];
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f[i];
    r.work += n + 1;
    return s * t / (3.0 * static_cast<double>(n));
  };
  std::size_t n = 16;
  double previous = simpson(n);
  while (true) {
    n *= 2;
    const double current = simpson(n);
    const double diff = std::abs(current - previous);
    r.certificate.push_back(diff);
    if (diff < tol / 2.0) {
      r.value = current;
      r.error_estimate = diff / 15.0;
      r.states_or_depth = n;
      return r;
    }
    if (n >= (std::size_t{1} << 16)) {
      std::ostringstream os;
      os << "Simpson step halving did not reach " << tol << " (last change " << diff << ")";
      throw SolverError(os.str(), diff);
    }
    previous = current;
  }
}

SolverResult moment_density(const AtomicSystem& sys, MaternOrder order, double t, const TestFunction& complement,
                            const SolverOptions& opts) {
  if (!order.infinite && order.k < 1) throw InvariantError("order", "moment density needs k >= 1");
  check_test_function(sys, complement);
  if (t < 0.0) throw InvariantError("time", "t must be >= 0");
  const MaternOrder previous = order.infinite ? order : MaternOrder::finite(order.k - 1);
  std::string inner_method;
  auto integrand = [&](const std::vector<double>& grid) {
    auto c = solve_pgfl_curve(sys, previous, grid, complement, opts);
    inner_method = c.meta.method;
    return c.values;
  };
  auto r = simpson_certified(integrand, t, std::max(opts.tol * 10.0, 1e-13));
  if (!inner_method.empty()) r.method = "quadrature+" + inner_method;
  return r;
}

SolverResult moment_density_at_atom(const AtomicSystem& sys, MaternOrder order, double t, std::size_t atom,
                                    const SolverOptions& opts) {
  TestFunction complement = TestFunction::constant(sys.size(), 1.0);
  for (std::size_t i = 0; i < sys.size(); ++i) complement.values[i] = 1.0 - sys.kernel(i, atom);
  return moment_density(sys, order, t, complement, opts);
}

SolverResult moment_density(const Model& model, MaternOrder order, double t, std::span<const double> x,
                            const SolverOptions& opts, std::size_t cells_per_axis) {
  if (!order.infinite && order.k == 1) {
    require_valid(model);
    std::int64_t site = -1;
    if (model.space.is_discrete()) {
      if (auto s = model.space.find_site(x)) site = static_cast<std::int64_t>(*s);
    }
    const double mass = kernel_mass_at(model, x, site);
    auto integrand = [&](const std::vector<double>& grid) {
      std::vector<double> f(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) f[i] = std::exp(-grid[i] * mass);
      return f;
    };
    auto r = simpson_certified(integrand, t, std::max(opts.tol, 1e-14));
    r.method = "quadrature+closed-form";
    return r;
  }
  const AtomicSystem sys = to_atomic(model, cells_per_axis);
  std::int64_t site = -1;
  if (!sys.discretized) {
    if (auto s = model.space.find_site(x)) site = static_cast<std::int64_t>(*s);
  }
  return moment_density(sys, order, t, conflict_complement(sys, x, site), opts);
}

}  // namespace packinglab
