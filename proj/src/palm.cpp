#include "packinglab/palm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "systems.hpp"

namespace packinglab {

double palm_from_reduced(double v_at_anchor, double reduced_value) { return v_at_anchor * reduced_value; }

std::optional<std::size_t> find_anchor(const AtomicSystem& sys, std::span<const double> location) {
  if (location.size() != sys.dimension) return std::nullopt;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    auto p = sys.position(i);
    if (std::equal(p.begin(), p.end(), location.begin())) return i;
  }
  return std::nullopt;
}

namespace {

void check_anchor(const AtomicSystem& sys, std::size_t anchor) {
  if (anchor >= sys.size()) throw InvariantError("anchor", "anchor must be an atom");
  if (!(sys.weights[anchor] > 0.0)) throw InvariantError("anchor", "anchor atom carries no intensity");
}

// F = m * f_y for the given bases and for the all-ones bases, then the ratio.
PalmCurve palm_curve(const AtomicSystem& sys, std::optional<int> k, const std::vector<TestFunction>& bases,
                     const std::vector<double>& times, std::size_t anchor, const SolverOptions& opts) {
  check_anchor(sys, anchor);
  const detail::SystemSpec spec{k, anchor};
  auto numer = detail::run(sys, spec, bases, {detail::kPalm}, times, opts);
  std::vector<TestFunction> ones(bases.size(), TestFunction::constant(sys.size(), 1.0));
  auto denom = detail::run(sys, spec, ones, {detail::kPalm}, times, opts);
  PalmCurve c;
  c.times = times;
  c.meta = numer.meta;
  c.meta.work += denom.meta.work;
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double F = numer.values[0][i], m = denom.values[0][i];
    double reduced = 1.0;
    if (times[i] > 0.0) {
      if (!(m > opts.tol)) throw InvariantError("moment", "m(t, y) vanishes at the anchor");
      reduced = F / m;
      worst = std::max(worst, (numer.meta.error_estimate + std::abs(reduced) * denom.meta.error_estimate) / m);
    }
    c.reduced.push_back(reduced);
    c.palm.push_back(palm_from_reduced(bases[0][anchor], reduced));
    c.moment.push_back(m);
  }
  c.meta.error_estimate = worst;
  c.meta.value = c.reduced.empty() ? 1.0 : c.reduced.back();
  return c;
}

PalmResult last(const PalmCurve& c) {
  PalmResult r;
  r.reduced = c.reduced.back();
  r.palm = c.palm.back();
  r.moment = c.moment.back();
  r.meta = c.meta;
  return r;
}

// Statement form: at fixed t the inner term is f_y(t, H(v, x)), so
// X_s = S_s / m - K sum_x c_x X_{H(s, x)} with K = int_0^t m / m(t), an
// algebraic system solved from the smallest states upward.
PalmResult palm_statement_form(const AtomicSystem& sys, double t, const TestFunction& v, std::size_t anchor,
                               const SolverOptions& opts) {
  check_anchor(sys, anchor);
  if (!sys.binary) throw InvariantError("method", "the statement form needs a finite closure ({0,1} kernel)");
  const detail::SystemSpec spec{std::nullopt, anchor};

  auto ones = detail::make_system(sys, spec, {TestFunction::constant(sys.size(), 1.0)}, opts);
  const auto m_node = ones->intern(detail::root_state(*ones, detail::kPalm));
  const auto mi_node = ones->intern(detail::root_state(*ones, detail::kPalmIntegral));
  auto mres = ones->integrate({m_node, mi_node}, {t}, opts.tol);
  const double m = mres.values[0][0], m_int = mres.values[1][0];
  if (!(m > opts.tol)) throw InvariantError("moment", "m(t, y) vanishes at the anchor");
  const double K = m_int / m;

  auto ls = detail::make_system(sys, spec, {v}, opts);
  const auto root = ls->intern(detail::root_state(*ls, detail::kPalm));
  ls->close({root});
  std::vector<std::uint32_t> palm_nodes;
  for (std::uint32_t i = 0; i < ls->size(); ++i)
    if (ls->state(i).kind == detail::kPalm) palm_nodes.push_back(i);
  std::vector<std::uint32_t> sources;
  for (auto p : palm_nodes) {
    detail::State s = ls->state(p);
    s.kind = detail::kPalmSource;
    sources.push_back(ls->intern(s));
  }
  auto sres = ls->integrate(sources, {t}, opts.tol);

  std::vector<std::size_t> order(palm_nodes.size());
  std::iota(order.begin(), order.end(), 0);
  auto mass = [&](std::uint32_t node) {
    const auto& vals = ls->values(node)[0];
    return std::accumulate(vals.begin(), vals.end(), 0.0);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mass(palm_nodes[a]) < mass(palm_nodes[b]); });
  std::vector<double> X(ls->size(), std::nan(""));
  for (std::size_t idx : order) {
    const auto node = palm_nodes[idx];
    double rhs = sres.values[idx][0] / m;
    double self = 0.0;
    for (const auto& [coef, target] : ls->successors(node)) {
      if (ls->state(target).kind != detail::kPalm) continue;
      if (target == node) {
        self += coef;
      } else {
        if (std::isnan(X[target])) throw InternalConsistencyError("statement-form ordering visited a state too early");
        rhs += K * coef * X[target];
      }
    }
    X[node] = rhs / (1.0 - K * self);
  }
  PalmResult r;
  r.reduced = X[root];
  r.palm = palm_from_reduced(v[anchor], r.reduced);
  r.moment = m;
  r.meta.method = "closure-algebraic";
  r.meta.tol = opts.tol;
  r.meta.states_or_depth = ls->size();
  r.meta.error_estimate = (sres.error_estimate + mres.error_estimate) / m;
  r.meta.work = sres.work + mres.work;
  return r;
}

}  // namespace

PalmCurve solve_palm_f_inf_curve(const AtomicSystem& sys, const std::vector<double>& times, const TestFunction& v,
                                 std::size_t anchor, const SolverOptions& opts) {
  return palm_curve(sys, std::nullopt, {v}, times, anchor, opts);
}

PalmResult solve_palm_f_inf(const AtomicSystem& sys, double t, const TestFunction& v, std::size_t anchor,
                            const SolverOptions& opts, PalmForm form) {
  if (form == PalmForm::StatementT) return palm_statement_form(sys, t, v, anchor, opts);
  return last(solve_palm_f_inf_curve(sys, {t}, v, anchor, opts));
}

PalmCurve solve_palm_g1_curve(const AtomicSystem& sys, const std::vector<double>& times, const TestFunction& v,
                              const TestFunction& u, std::size_t anchor, const SolverOptions& opts) {
  for (double x : u.values) {
    if (!(x > 0.0)) throw InvariantError("u_positive", "u must be positive everywhere");
  }
  return palm_curve(sys, 1, {v, u}, times, anchor, opts);
}

PalmResult solve_palm_g1(const AtomicSystem& sys, double t, const TestFunction& v, const TestFunction& u,
                         std::size_t anchor, const SolverOptions& opts) {
  return last(solve_palm_g1_curve(sys, {t}, v, u, anchor, opts));
}

DerivativeResidual derivative_identity_residual(const AtomicSystem& sys, MaternOrder order, double t,
                                                const TestFunction& v, const std::vector<std::size_t>& region,
                                                double s, IdentityKind kind, const SolverOptions& opts) {
  if (!order.infinite && order.k != 1) throw InvariantError("order", "identities are implemented for k = 1 and infinity");
  if (!(s > 0.0)) throw InvariantError("step", "s must be positive");
  const auto one = TestFunction::constant(sys.size(), 1.0);
  auto G = [&](const TestFunction& w) {
    return order.infinite ? solve_f_inf(sys, t, w, opts).value : solve_g_k(sys, 1, t, {w, one}, opts).value;
  };
  auto reduced_palm = [&](std::size_t x) {
    return order.infinite ? solve_palm_f_inf(sys, t, v, x, opts) : solve_palm_g1(sys, t, v, one, x, opts);
  };
  TestFunction shifted = v;
  for (std::size_t x : region) {
    if (kind == IdentityKind::Multiplicative) {
      shifted.values[x] = v[x] * std::exp(-s);
    } else {
      if (v[x] != 0.0) throw InvariantError("support", "additive identity needs v = 0 on the region");
      shifted.values[x] = std::min(1.0, v[x] + s);
    }
  }
  DerivativeResidual r;
  r.finite_difference = (G(shifted) - G(v)) / s;
  double sum = 0.0;
  for (std::size_t x : region) {
    if (!(sys.weights[x] > 0.0)) continue;
    const auto p = reduced_palm(x);
    const double weight = kind == IdentityKind::Multiplicative ? -v[x] : 1.0;
    sum += weight * sys.weights[x] * p.reduced * p.moment;
  }
  r.identity = sum;
  r.residual = std::abs(r.finite_difference - r.identity);
  return r;
}

}  // namespace packinglab
