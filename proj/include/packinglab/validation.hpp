#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "packinglab/mc.hpp"
#include "packinglab/pgfl.hpp"

namespace packinglab {

/// One report entry. Non-gating entries are recorded but do not decide the
/// suite outcome (individual z-scores under an aggregate rule, for example).
struct Check {
  std::string name;
  double mc_value = std::nan("");
  double solver_value = std::nan("");
  double se = std::nan("");
  double z = std::nan("");
  bool pass = true;
  bool gating = true;
  nlohmann::json detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  nlohmann::json info = nlohmann::json::object();
  bool passed() const;
  std::vector<const Check*> failures() const;
};

/// The report array: {check, mc_value, solver_value, stderr, z_score, pass, gating[, detail]}.
nlohmann::json report_to_json(const SuiteReport& report);

struct SuiteOptions {
  std::uint64_t seed = 20240611;
  unsigned jobs = 0;
  double tol = 1e-10;                // solver tolerance
  std::optional<std::size_t> reps;   // overrides every MC replication count
  nlohmann::json params = nlohmann::json::object();
};

const std::vector<std::string>& suite_names();

/// Throws ConfigError for an unknown name.
SuiteReport run_suite(const std::string& name, const SuiteOptions& opts);

// Individual suites.
SuiteReport suite_nesting(const SuiteOptions& opts);
SuiteReport suite_sandwich(const SuiteOptions& opts);
SuiteReport suite_stabilization(const SuiteOptions& opts);
SuiteReport suite_solver_vs_mc(const SuiteOptions& opts);
SuiteReport suite_bounds(const SuiteOptions& opts);
SuiteReport suite_palm(const SuiteOptions& opts);
SuiteReport suite_renyi(const SuiteOptions& opts);
SuiteReport suite_expansion(const SuiteOptions& opts);

/// Parts of solver-vs-mc, selectable through params["parts"]:
/// "moment" (type II moment closed form), "exact" (two-atom first-arrival
/// oracle), "random" (random discrete instances).
std::vector<Check> checks_moment_closed_form(const SuiteOptions& opts);
std::vector<Check> checks_two_atom_exact(const SuiteOptions& opts);
std::vector<Check> checks_random_instances(const SuiteOptions& opts);

/// Random discrete instance used by solver-vs-mc and bounds: 2..5 atoms,
/// weights in [0.2, 2], a random symmetric {0,1} conflict matrix.
Model random_instance(std::uint64_t seed, std::size_t index);

/// The two-atom full-conflict oracle:
/// f_inf(t, v) = e^{-Lt} + (1 - e^{-Lt}) (l_a v_a + l_b v_b) / L, L = l_a + l_b.
double two_atom_first_arrival(double la, double lb, double t, double va, double vb);

/// Covered fraction of the 1-D car-parking process at time t (cars of unit
/// length, unit arrival rate): int_0^t exp(-2 int_0^s (1 - e^{-u}) / u du) ds.
double renyi_coverage(double t);

}  // namespace packinglab
