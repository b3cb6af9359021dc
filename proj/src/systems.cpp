#include "systems.hpp"

#include <limits>
#include <memory>

namespace packinglab::detail {

namespace {

State thin(State s, std::size_t x, const std::vector<std::uint8_t>& comps, bool binary) {
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (!comps[c]) continue;
    auto& cnt = s.counts[c][x];
    if (binary) cnt = 1;
    else if (cnt < std::numeric_limits<std::uint16_t>::max()) ++cnt;
  }
  return s;
}

State with_kind(State s, std::uint8_t kind) {
  s.kind = kind;
  return s;
}

}  // namespace

std::unique_ptr<LinearSystem> make_system(const AtomicSystem& sys, const SystemSpec& spec,
                                          const std::vector<TestFunction>& bases, const SolverOptions& opts) {
  const std::size_t n = sys.size();
  const std::size_t comps = bases.size();
  const KMaternSystem km = spec.k ? index_sets(*spec.k) : KMaternSystem{};
  if (spec.k && comps != static_cast<std::size_t>(*spec.k) + 1) {
    throw InvariantError("arity", "g_k takes k + 1 test functions");
  }
  if (!spec.k && comps != 1) throw InvariantError("arity", "f_inf takes one test function");
  if (spec.anchor && spec.k && *spec.k != 1) throw InvariantError("order", "Palm joint system is implemented for k = 1");
  const std::vector<std::uint8_t> all(comps, 1);
  const bool binary = sys.binary;
  const AtomicSystem* S = &sys;
  const std::optional<std::size_t> anchor = spec.anchor;
  const std::optional<int> k = spec.k;

  LinearSystem::Rule rule = [=](const State& s, const LinearSystem::Values& val, const LinearSystem::Emit& emit) {
    switch (s.kind) {
      case kPgfl:
        if (!k) {
          for (std::size_t x = 0; x < n; ++x) {
            const double c = -S->weights[x] * (1.0 - val[0][x]);
            if (c != 0.0) emit(c, thin(s, x, all, binary));
          }
        } else {
          for (int i = 1; i <= *k + 1; ++i) {
            const int wi = km.w[static_cast<std::size_t>(i - 1)];
            const auto& thins = km.thins[static_cast<std::size_t>(i - 1)];
            for (std::size_t x = 0; x < n; ++x) {
              const double w = wi == 0 ? 1.0 : val[static_cast<std::size_t>(wi - 1)][x];
              const double c = -S->weights[x] * (w - val[static_cast<std::size_t>(i - 1)][x]);
              if (c != 0.0) emit(c, thin(s, x, thins, binary));
            }
          }
        }
        break;
      case kPalm: {
        const std::size_t y = *anchor;
        emit(1.0, thin(with_kind(s, kPgfl), y, all, binary));
        for (std::size_t x = 0; x < n; ++x) {
          const double keep = 1.0 - S->kernel(x, y);
          if (!k) {
            const double c = -S->weights[x] * (1.0 - val[0][x]) * keep;
            if (c != 0.0) emit(c, thin(s, x, all, binary));
          } else {
            const double v = val[0][x], u = val[1][x];
            const double self = -S->weights[x] * (1.0 - u);
            if (self != 0.0) emit(self, s);
            const double c = -S->weights[x] * (u - v) * keep;
            if (c != 0.0) emit(c, thin(s, x, all, binary));
          }
        }
        break;
      }
      case kPalmSource:
        emit(1.0, thin(with_kind(s, kPgfl), *anchor, all, binary));
        break;
      case kPalmIntegral:
        emit(1.0, with_kind(s, kPalm));
        break;
      default:
        break;
    }
  };
  std::vector<std::vector<double>> base_values;
  for (const auto& b : bases) base_values.push_back(b.values);
  return std::make_unique<LinearSystem>(sys, std::move(base_values), std::vector<double>{1.0, 0.0, 0.0, 0.0},
                                        std::move(rule), opts.max_states);
}

State root_state(const LinearSystem& ls, std::uint8_t kind) {
  State s;
  s.kind = kind;
  s.counts.assign(ls.component_count(), std::vector<std::uint16_t>(ls.atomic().size(), 0));
  return s;
}

bool prefer_closure(const AtomicSystem& sys, const SolverOptions& opts) {
  switch (opts.method) {
    case SolverMethod::Closure:
      return true;
    case SolverMethod::Picard:
      return false;
    case SolverMethod::Auto:
      return sys.binary && !sys.discretized;
  }
  return false;
}

RunOutput run(const AtomicSystem& sys, const SystemSpec& spec, const std::vector<TestFunction>& bases,
              const std::vector<std::uint8_t>& root_kinds, const std::vector<double>& times, const SolverOptions& opts) {
  for (const auto& b : bases) check_test_function(sys, b);
  auto attempt = [&](bool closure) {
    auto ls = make_system(sys, spec, bases, opts);
    std::vector<std::uint32_t> roots;
    for (auto kind : root_kinds) roots.push_back(ls->intern(root_state(*ls, kind)));
    RunOutput out;
    out.meta.tol = opts.tol;
    if (closure) {
      auto integ = ls->integrate(roots, times, opts.tol);
      out.values = std::move(integ.values);
      out.meta.method = "closure-ode";
      out.meta.error_estimate = integ.error_estimate;
      out.meta.states_or_depth = ls->size();
      out.meta.work = integ.work;
      out.meta.certificate = std::move(integ.differences);
    } else {
      auto series = ls->picard(roots, times, opts.tol, opts.max_depth);
      out.values = std::move(series.values);
      out.meta.method = "picard";
      out.meta.error_estimate = series.error_estimate;
      out.meta.states_or_depth = static_cast<std::size_t>(series.depth);
      out.meta.work = series.work;
      out.meta.certificate = std::move(series.ratios);
    }
    return out;
  };
  const bool closure = prefer_closure(sys, opts);
  if (closure && opts.method == SolverMethod::Auto) {
    try {
      return attempt(true);
    } catch (const BudgetError&) {
      return attempt(false);
    }
  }
  return attempt(closure);
}

}  // namespace packinglab::detail
