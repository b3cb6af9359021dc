#pragma once

// Node rules shared by the p.g.fl and Palm solvers.
//
// Kinds: 0 = p.g.fl node (f_inf or g_k), 1 = Palm numerator F = m * f_y,
// 2 = S = int_0^t (p.g.fl at H(., y)), 3 = int_0^t F.

#include <memory>
#include <optional>
#include <vector>

#include "linear_system.hpp"
#include "packinglab/pgfl.hpp"

namespace packinglab::detail {

enum Kind : std::uint8_t { kPgfl = 0, kPalm = 1, kPalmSource = 2, kPalmIntegral = 3 };

struct SystemSpec {
  std::optional<int> k;               // nullopt: f_inf; otherwise the g_k joint system
  std::optional<std::size_t> anchor;  // Palm anchor atom
};

std::unique_ptr<LinearSystem> make_system(const AtomicSystem& sys, const SystemSpec& spec,
                                          const std::vector<TestFunction>& bases, const SolverOptions& opts);

State root_state(const LinearSystem& ls, std::uint8_t kind);

/// Chooses closure or Picard per options and the model; Auto falls back to
/// Picard when the closure exceeds its budget.
struct RunOutput {
  std::vector<std::vector<double>> values;  // [output][time]
  SolverResult meta;
};
RunOutput run(const AtomicSystem& sys, const SystemSpec& spec, const std::vector<TestFunction>& bases,
              const std::vector<std::uint8_t>& root_kinds, const std::vector<double>& times, const SolverOptions& opts);

bool prefer_closure(const AtomicSystem& sys, const SolverOptions& opts);

}  // namespace packinglab::detail
