#pragma once

#include <optional>
#include <vector>

#include "packinglab/pgfl.hpp"

namespace packinglab {

/// Which time argument the inner Palm term carries. Volterra integrates
/// f_y(tau, H(v, x)); StatementT freezes it at f_y(t, H(v, x)) (closure only).
enum class PalmForm { Volterra, StatementT };

struct PalmResult {
  double reduced = 1.0;  // reduced Palm p.g.fl at the anchor
  double palm = 1.0;     // v(y) * reduced
  double moment = 0.0;   // m(t, y)
  SolverResult meta;
};

struct PalmCurve {
  std::vector<double> times, reduced, palm, moment;
  SolverResult meta;
};

double palm_from_reduced(double v_at_anchor, double reduced_value);

/// Index of the atom sitting exactly at `location`, if any.
std::optional<std::size_t> find_anchor(const AtomicSystem& sys, std::span<const double> location);

PalmResult solve_palm_f_inf(const AtomicSystem& sys, double t, const TestFunction& v, std::size_t anchor,
                            const SolverOptions& opts = {}, PalmForm form = PalmForm::Volterra);
PalmCurve solve_palm_f_inf_curve(const AtomicSystem& sys, const std::vector<double>& times, const TestFunction& v,
                                 std::size_t anchor, const SolverOptions& opts = {});

/// Palm version of g_1(t, v, u); u must be positive. With u = 1 this is the
/// reduced Palm p.g.fl of M_1.
PalmResult solve_palm_g1(const AtomicSystem& sys, double t, const TestFunction& v, const TestFunction& u,
                         std::size_t anchor, const SolverOptions& opts = {});
PalmCurve solve_palm_g1_curve(const AtomicSystem& sys, const std::vector<double>& times, const TestFunction& v,
                              const TestFunction& u, std::size_t anchor, const SolverOptions& opts = {});

enum class IdentityKind { Multiplicative, Additive };

struct DerivativeResidual {
  double finite_difference = 0.0;
  double identity = 0.0;
  double residual = 0.0;
};

/// Finite difference of G = f_order(t, .) in the direction of the atoms in
/// `region` against the Palm-side expression.
///   Multiplicative: [G(v e^{-s 1_B}) - G(v)] / s  vs  -sum_B lambda v G^!_x(v) m(t, x)
///   Additive (v = 0 on B): [G(v + s 1_B) - G(v)] / s  vs  sum_B lambda G^!_x(v) m(t, x)
/// `order` is infinity or 1.
DerivativeResidual derivative_identity_residual(const AtomicSystem& sys, MaternOrder order, double t,
                                                const TestFunction& v, const std::vector<std::size_t>& region,
                                                double s, IdentityKind kind, const SolverOptions& opts = {});

}  // namespace packinglab
