#include "packinglab/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "packinglab/matern.hpp"
#include "packinglab/model_io.hpp"
#include "packinglab/palm.hpp"
#include "packinglab/rain.hpp"
#include "packinglab/rng.hpp"

namespace packinglab {

using nlohmann::json;

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return !c.gating || c.pass; });
}

std::vector<const Check*> SuiteReport::failures() const {
  std::vector<const Check*> out;
  for (const auto& c : checks) {
    if (c.gating && !c.pass) out.push_back(&c);
  }
  return out;
}

json report_to_json(const SuiteReport& report) {
  json arr = json::array();
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  for (const auto& c : report.checks) {
    json e = {{"check", c.name},       {"mc_value", num(c.mc_value)}, {"solver_value", num(c.solver_value)},
              {"stderr", num(c.se)},   {"z_score", num(c.z)},         {"pass", c.pass},
              {"gating", c.gating}};
    if (!c.detail.is_null()) e["detail"] = c.detail;
    arr.push_back(std::move(e));
  }
  return arr;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"nesting", "sandwich", "solver-vs-mc", "palm",
                                              "bounds",  "renyi",    "expansion",    "stabilization"};
  return names;
}

SuiteReport run_suite(const std::string& name, const SuiteOptions& opts) {
  if (name == "nesting") return suite_nesting(opts);
  if (name == "sandwich") return suite_sandwich(opts);
  if (name == "stabilization") return suite_stabilization(opts);
  if (name == "solver-vs-mc") return suite_solver_vs_mc(opts);
  if (name == "bounds") return suite_bounds(opts);
  if (name == "palm") return suite_palm(opts);
  if (name == "renyi") return suite_renyi(opts);
  if (name == "expansion") return suite_expansion(opts);
  throw ConfigError("unknown suite '" + name + "'");
}

namespace {

std::size_t reps_for(const SuiteOptions& o, const char* key, std::size_t fallback) {
  return o.reps ? *o.reps : value_or<std::size_t>(o.params, key, fallback);
}

McOptions mc_options(const SuiteOptions& o) {
  McOptions m;
  m.jobs = o.jobs;
  return m;
}

SolverOptions solver_options(const SuiteOptions& o) {
  SolverOptions s;
  s.tol = o.tol;
  return s;
}

Check zcheck(std::string name, const Estimate& e, double reference, double band = 3.0) {
  Check c;
  c.name = std::move(name);
  c.mc_value = e.mean;
  c.solver_value = reference;
  c.se = e.se;
  c.z = z_score(e, reference);
  c.pass = std::abs(c.z) <= band;
  return c;
}

Check exact_check(std::string name, double value, double reference, double tolerance) {
  Check c;
  c.name = std::move(name);
  c.mc_value = value;
  c.solver_value = reference;
  c.pass = std::abs(value - reference) <= tolerance;
  c.detail = {{"abs_error", std::abs(value - reference)}, {"tolerance", tolerance}};
  return c;
}

Check count_check(std::string name, std::size_t violations, std::size_t examined) {
  Check c;
  c.name = std::move(name);
  c.mc_value = static_cast<double>(violations);
  c.solver_value = 0.0;
  c.pass = violations == 0;
  c.detail = {{"violations", violations}, {"examined", examined}};
  return c;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// ---------------------------------------------------------------------------
// Structural suites share one set of homogeneous realizations.

Model default_homogeneous() {
  Model m;
  m.space = GroundSpace(ContinuousBox{Box{{0.0, 0.0}, {8.0, 8.0}}, true});
  m.measure = Homogeneous{1.0};
  m.kernel = ConflictKernel::hard(0.5);
  return m;
}

struct StructuralSetup {
  Model model;
  std::size_t realizations;
  double t_max;
};

StructuralSetup structural_setup(const SuiteOptions& o) {
  StructuralSetup s{o.params.contains("model") ? parse_model(o.params.at("model")) : default_homogeneous(),
                    value_or<std::size_t>(o.params, "realizations", 1000), value_or(o.params, "t_max", 3.0)};
  require_valid(s.model);
  return s;
}

struct Sample {
  TimedPointPattern pattern;
  ConflictRealization conflicts;
  ConflictGraph graph;
};

Sample draw(const StructuralSetup& s, std::uint64_t seed, std::size_t i) {
  Sample out;
  const auto rs = derive_seed(seed, i);
  out.pattern = sample_rain(s.model, s.t_max, rs);
  out.conflicts = sample_conflicts(out.pattern, s.model, rs);
  out.graph = build_conflict_graph(out.pattern, out.conflicts);
  return out;
}

std::size_t max_ancestors(const std::vector<std::vector<std::uint32_t>>& A) {
  std::size_t m = 0;
  for (const auto& a : A) m = std::max(m, a.size());
  return m;
}

// vertices flagged in `sub` but not in `super`
std::size_t not_contained(const Flags& sub, const Flags& super) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < sub.size(); ++i) n += sub[i] && !super[i];
  return n;
}

std::size_t set_not_contained(const IdSet& sub, const IdSet& super) {
  std::size_t n = 0;
  for (auto id : sub) n += !std::binary_search(super.begin(), super.end(), id);
  return n;
}

IdSet layer_ids(const ConflictGraph& g, const Flags& f, double s, double t) {
  IdSet out;
  for (std::uint32_t v = 0; v < g.size(); ++v) {
    if (f[v] && g.timers[v] >= s && g.timers[v] < t) out.push_back(g.ids[v]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SuiteReport suite_nesting(const SuiteOptions& o) {
  const auto setup = structural_setup(o);
  SuiteReport rep{"nesting", {}, {}};
  std::size_t chain = 0, chain_n = 0, conflicts_inf = 0, type_I = 0, restriction = 0, restriction_n = 0;
  std::vector<double> type_II_pairs(3, 0.0);
  for (std::size_t i = 0; i < setup.realizations; ++i) {
    const auto smp = draw(setup, o.seed, i);
    const auto& g = smp.graph;
    const int K = static_cast<int>(max_ancestors(ancestor_sets(g))) + 2;
    std::vector<Flags> e;
    for (int k = 0; k <= K + 1; ++k) e.push_back(selection_k(g, k));
    const Flags einf = selection_inf(g);
    // phi_1 in phi_3 in ... in phi_inf in ... in phi_2 in phi_0
    for (int k = 0; k + 2 <= K + 1; ++k) {
      chain += k % 2 ? not_contained(e[k], e[k + 2]) : not_contained(e[k + 2], e[k]);
      chain += k % 2 ? not_contained(e[k], einf) : not_contained(einf, e[k]);
      chain_n += 2 * g.size();
    }
    conflicts_inf += conflicting_pairs_within(smp.conflicts, ids_of(g, einf));
    type_I += not_contained(selection_type_I(g), e[1]);
    for (int k = 1; k <= 3; ++k) {
      type_II_pairs[k - 1] += static_cast<double>(conflicting_pairs_within(smp.conflicts, ids_of(g, e[k])));
    }
    for (double frac : {1.0 / 3.0, 2.0 / 3.0}) {
      const double t = setup.t_max * frac;
      const auto rp = restrict(smp.pattern, 0.0, t);
      const auto rg = build_conflict_graph(rp, smp.conflicts);
      auto compare = [&](const Flags& full, const Flags& restricted) {
        const IdSet a = layer_ids(g, full, 0.0, t);
        const IdSet b = ids_of(rg, restricted);
        restriction += a != b;
        ++restriction_n;
      };
      for (int k = 1; k <= K; ++k) compare(e[k], selection_k(rg, k));
      compare(einf, selection_inf(rg));
    }
  }
  rep.checks.push_back(count_check("nesting_chain", chain, chain_n));
  rep.checks.push_back(count_check("inf_conflict_free", conflicts_inf, setup.realizations));
  rep.checks.push_back(count_check("type_I_in_type_II", type_I, setup.realizations));
  rep.checks.push_back(count_check("restriction_commutes", restriction, restriction_n));
  const double n = static_cast<double>(setup.realizations);
  rep.info["mean_conflicting_pairs_within_k"] = {{"1", type_II_pairs[0] / n}, {"2", type_II_pairs[1] / n},
                                                 {"3", type_II_pairs[2] / n}};
  rep.info["realizations"] = setup.realizations;
  return rep;
}

SuiteReport suite_sandwich(const SuiteOptions& o) {
  const auto setup = structural_setup(o);
  SuiteReport rep{"sandwich", {}, {}};
  std::size_t lower_bad = 0, upper_bad = 0, examined = 0;
  const std::vector<std::pair<double, double>> windows{{1.0 / 3.0, 2.0 / 3.0}, {0.5, 1.0}, {0.1, 0.2}};
  for (std::size_t i = 0; i < setup.realizations; ++i) {
    const auto smp = draw(setup, o.seed, i);
    const auto& g = smp.graph;
    for (auto [fs, ft] : windows) {
      const double s = fs * setup.t_max, t = ft * setup.t_max;
      for (auto j : {MaternOrder::finite(1), MaternOrder::finite(2), MaternOrder::finite(3), MaternOrder::finite(4),
                     MaternOrder::inf()}) {
        const auto layers = sandwich_layers(smp.pattern, smp.conflicts, j, s, t);
        const IdSet layer = layer_ids(g, selection(g, j), s, t);
        lower_bad += set_not_contained(layers.lower, layer);
        upper_bad += set_not_contained(layer, layers.upper);
        ++examined;
      }
    }
  }
  rep.checks.push_back(count_check("lower_layer_in_thinning", lower_bad, examined));
  rep.checks.push_back(count_check("thinning_in_upper_layer", upper_bad, examined));
  rep.info["realizations"] = setup.realizations;
  return rep;
}

SuiteReport suite_stabilization(const SuiteOptions& o) {
  const auto setup = structural_setup(o);
  SuiteReport rep{"stabilization", {}, {}};
  std::size_t bad = 0, examined = 0, oracle_bad = 0;
  double a_sum = 0.0, a_count = 0.0;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < setup.realizations; ++i) {
    const auto smp = draw(setup, o.seed, i);
    const auto& g = smp.graph;
    const auto A = ancestor_sets(g);
    const std::size_t m = max_ancestors(A);
    worst = std::max(worst, m);
    for (std::uint32_t v = 0; v < g.size(); ++v) {
      a_sum += static_cast<double>(A[v].size());
      a_count += 1.0;
      if (i < 50) oracle_bad += A[v] != ancestors_by_search(g, v);
    }
    const Flags einf = selection_inf(g);
    for (std::size_t k = m + 1; k <= m + 3; ++k) {
      bad += selection_k(g, static_cast<int>(k)) != einf;
      ++examined;
    }
  }
  rep.checks.push_back(count_check("e_k_equals_e_inf_beyond_max_ancestors", bad, examined));
  rep.checks.push_back(count_check("ancestor_recursion_matches_search", oracle_bad, std::min<std::size_t>(50, setup.realizations)));
  const double mean_a = a_count > 0 ? a_sum / a_count : 0.0;
  const double nbar = validate_model(setup.model).mass_bound;
  const double bound = std::exp(setup.t_max * nbar);
  Check c;
  c.name = "mean_ancestor_count_bound";
  c.mc_value = mean_a;
  c.solver_value = bound;
  c.pass = mean_a <= bound;
  c.detail = {{"mass_bound", nbar}, {"t_max", setup.t_max}, {"max_ancestors", worst}};
  rep.checks.push_back(c);
  rep.info["realizations"] = setup.realizations;
  return rep;
}

// ---------------------------------------------------------------------------

double two_atom_first_arrival(double la, double lb, double t, double va, double vb) {
  const double L = la + lb, e = std::exp(-L * t);
  return e + (1.0 - e) * (la * va + lb * vb) / L;
}

Model random_instance(std::uint64_t seed, std::size_t index) {
  CounterRng rng(derive_seed(seed, 0x1000 + index), 7);
  const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
  DiscreteSites sites{1, {}};
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) {
    sites.coords.push_back(static_cast<double>(i));
    w.push_back(0.2 + 1.8 * rng.uniform());
  }
  std::vector<double> h(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) h[i * n + j] = h[j * n + i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  Model m;
  m.space = GroundSpace(std::move(sites));
  m.measure = Atomic{std::move(w)};
  m.kernel = ConflictKernel::matrix(n, std::move(h));
  return m;
}

namespace {

std::vector<TestFunction> random_test_functions(std::uint64_t seed, std::size_t index, std::size_t n, std::size_t count) {
  CounterRng rng(derive_seed(seed, 0x2000 + index), 9);
  std::vector<TestFunction> out;
  for (std::size_t c = 0; c < count; ++c) {
    TestFunction v = TestFunction::constant(n, 1.0);
    for (auto& x : v.values) x = rng.uniform();
    out.push_back(std::move(v));
  }
  return out;
}

const std::vector<double> kInstanceTimes{0.5, 1.0, 2.0};

}  // namespace

std::vector<Check> checks_moment_closed_form(const SuiteOptions& o) {
  Model m;
  const double L = value_or(o.params, "moment_length", 20.0);
  m.space = GroundSpace(ContinuousBox{Box{{0.0}, {L}}, true});
  m.measure = Homogeneous{1.0};
  m.kernel = ConflictKernel::hard(0.5);
  const std::size_t reps = reps_for(o, "moment_reps", 10000);
  std::vector<Check> out;
  const std::vector<double> x{L / 2};
  for (double t : {0.5, 1.0, 2.0, 5.0}) {
    const double exact = 1.0 - std::exp(-t);
    const auto r = moment_density(m, MaternOrder::finite(1), t, x, solver_options(o));
    out.push_back(exact_check("moment_k1_closed_form/t=" + fmt(t), r.value, exact, 1e-6));
    auto e = estimate_moment(m, MaternOrder::finite(1), t, constant_function(1.0), reps,
                             derive_seed(o.seed, static_cast<std::uint64_t>(t * 1000)), mc_options(o));
    e.mean /= L;
    e.se /= L;
    out.push_back(zcheck("moment_k1_mc/t=" + fmt(t), e, r.value));
  }
  return out;
}

std::vector<Check> checks_two_atom_exact(const SuiteOptions& o) {
  const double la = 0.7, lb = 1.3;
  Model m;
  m.space = GroundSpace(DiscreteSites{1, {0.0, 1.0}});
  m.measure = Atomic{{la, lb}};
  m.kernel = ConflictKernel::matrix(2, {1, 1, 1, 1});
  const auto sys = atomic_system(m);
  const std::vector<double> ts{0.25, 0.5, 1.0, 2.0, 4.0}, cs{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<PgflQuery> queries;
  std::vector<double> exact;
  std::vector<std::string> names;
  std::vector<Check> out;
  for (double t : ts) {
    for (double c : cs) {
      const TestFunction v{{c, 1.0 - 0.5 * c}};
      const double ex = two_atom_first_arrival(la, lb, t, v[0], v[1]);
      const auto r = solve_f_inf(sys, t, v, solver_options(o));
      const std::string tag = "t=" + fmt(t) + "/v=(" + fmt(v[0]) + "," + fmt(v[1]) + ")";
      out.push_back(exact_check("two_atom_solver/" + tag, r.value, ex, 1e-8));
      queries.push_back({MaternOrder::inf(), t, {site_function(v)}});
      exact.push_back(ex);
      names.push_back("two_atom_mc/" + tag);
    }
  }
  const auto est = estimate_pgfl_batch(m, queries, reps_for(o, "exact_reps", 1000000), derive_seed(o.seed, 3),
                                       mc_options(o));
  for (std::size_t i = 0; i < est.size(); ++i) out.push_back(zcheck(names[i], est[i], exact[i]));
  return out;
}

std::vector<Check> checks_random_instances(const SuiteOptions& o) {
  const std::size_t instances = value_or<std::size_t>(o.params, "instances", 10);
  const std::size_t reps = reps_for(o, "instance_reps", 100000);
  const double required = value_or(o.params, "required_fraction", 0.95);
  std::vector<Check> out;
  std::size_t within = 0, total = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const Model m = random_instance(o.seed, i);
    const auto sys = atomic_system(m);
    const auto vs = random_test_functions(o.seed, i, sys.size(), 2);
    std::vector<PgflQuery> queries;
    std::vector<double> solved;
    std::vector<std::string> names;
    for (auto order : {MaternOrder::inf(), MaternOrder::finite(1)}) {
      for (double t : kInstanceTimes) {
        for (std::size_t vi = 0; vi < vs.size(); ++vi) {
          const auto r = order.infinite ? solve_f_inf(sys, t, vs[vi], solver_options(o))
                                        : f_k(sys, 1, t, vs[vi], solver_options(o));
          solved.push_back(r.value);
          queries.push_back({order, t, {site_function(vs[vi])}});
          names.push_back("instance" + std::to_string(i) + "/order=" + order.label() + "/t=" + fmt(t) + "/v" +
                          std::to_string(vi));
        }
      }
    }
    const auto est = estimate_pgfl_batch(m, queries, reps, derive_seed(o.seed, 0x3000 + i), mc_options(o));
    for (std::size_t q = 0; q < est.size(); ++q) {
      Check c = zcheck(names[q], est[q], solved[q]);
      c.gating = false;
      within += c.pass;
      ++total;
      out.push_back(std::move(c));
    }
  }
  Check agg;
  agg.name = "random_instances_fraction_within_3se";
  agg.mc_value = total ? static_cast<double>(within) / static_cast<double>(total) : 1.0;
  agg.solver_value = required;
  agg.pass = agg.mc_value >= required;
  agg.detail = {{"within", within}, {"comparisons", total}};
  out.push_back(agg);
  return out;
}

SuiteReport suite_solver_vs_mc(const SuiteOptions& o) {
  SuiteReport rep{"solver-vs-mc", {}, {}};
  std::vector<std::string> parts{"moment", "exact", "random"};
  if (o.params.contains("parts")) parts = o.params.at("parts").get<std::vector<std::string>>();
  for (const auto& p : parts) {
    std::vector<Check> c;
    if (p == "moment") c = checks_moment_closed_form(o);
    else if (p == "exact") c = checks_two_atom_exact(o);
    else if (p == "random") c = checks_random_instances(o);
    else throw ConfigError("unknown solver-vs-mc part '" + p + "'");
    rep.checks.insert(rep.checks.end(), c.begin(), c.end());
  }
  rep.info["note"] = "3-SE bands per comparison; with many comparisons a few excursions are expected by chance";
  return rep;
}

SuiteReport suite_bounds(const SuiteOptions& o) {
  SuiteReport rep{"bounds", {}, {}};
  const std::size_t instances = value_or<std::size_t>(o.params, "instances", 10);
  // The bound is attained exactly on full-conflict instances, so a margin
  // can come out negative by the solver error; allow that much.
  const double margin_tol = value_or(o.params, "margin_tol", 1e-10);
  double min_lower = INFINITY, min_upper = INFINITY, max_lower = -INFINITY, max_upper = -INFINITY;
  for (std::size_t i = 0; i < instances; ++i) {
    const Model m = random_instance(o.seed, i);
    const auto sys = atomic_system(m);
    const auto vs = random_test_functions(o.seed, i, sys.size(), 2);
    for (double t : kInstanceTimes) {
      for (std::size_t vi = 0; vi < vs.size(); ++vi) {
        const double f = solve_f_inf(sys, t, vs[vi], solver_options(o)).value;
        const auto b = f_inf_bounds(sys, t, vs[vi]);
        Check c;
        c.name = "instance" + std::to_string(i) + "/t=" + fmt(t) + "/v" + std::to_string(vi);
        c.solver_value = f;
        const double lm = f - b.lower, um = b.upper - f;
        c.pass = lm >= -margin_tol && um >= -margin_tol;
        c.detail = {{"lower", b.lower}, {"upper", b.upper}, {"lower_margin", lm}, {"upper_margin", um}};
        min_lower = std::min(min_lower, lm);
        min_upper = std::min(min_upper, um);
        max_lower = std::max(max_lower, lm);
        max_upper = std::max(max_upper, um);
        rep.checks.push_back(std::move(c));
      }
    }
  }
  rep.info = {{"min_lower_margin", min_lower}, {"max_lower_margin", max_lower}, {"min_upper_margin", min_upper},
              {"max_upper_margin", max_upper}, {"margin_tol", margin_tol}};
  return rep;
}

// ---------------------------------------------------------------------------
// Palm fixtures

namespace {

struct PalmFixture {
  std::string name;
  Model model;
  TestFunction v;
  std::vector<std::size_t> additive_region;  // v is set to 0 here for the additive identity
};

std::vector<PalmFixture> palm_fixtures() {
  std::vector<PalmFixture> out;
  {
    Model m;
    m.space = GroundSpace(DiscreteSites{1, {0.0, 1.0}});
    m.measure = Atomic{{0.7, 1.3}};
    m.kernel = ConflictKernel::matrix(2, {1, 1, 1, 1});
    out.push_back({"two_atom", m, TestFunction{{0.4, 0.6}}, {0}});
  }
  {
    Model m;
    m.space = GroundSpace(DiscreteSites{1, {0.0, 1.0, 2.0}});
    m.measure = Atomic{{0.7, 1.3, 0.9}};
    m.kernel = ConflictKernel::matrix(3, {1, 1, 0, 1, 1, 1, 0, 1, 1});
    out.push_back({"three_atom", m, TestFunction{{0.4, 0.8, 0.3}}, {0, 2}});
  }
  return out;
}

}  // namespace

SuiteReport suite_palm(const SuiteOptions& o) {
  SuiteReport rep{"palm", {}, {}};
  const std::size_t reps = reps_for(o, "palm_reps", 100000);
  const std::vector<double> ts{0.5, 2.0};
  SolverOptions sopts = solver_options(o);
  std::size_t fixture_index = 0;
  for (const auto& fx : palm_fixtures()) {
    const auto sys = atomic_system(fx.model);
    const auto one = TestFunction::constant(sys.size(), 1.0);
    std::vector<PalmQuery> queries;
    std::vector<PalmResult> solved;
    std::vector<std::string> names;
    for (std::size_t y = 0; y < sys.size(); ++y) {
      for (double t : ts) {
        const std::string tag = fx.name + "/y=" + std::to_string(y) + "/t=" + fmt(t);
        const auto inf = solve_palm_f_inf(sys, t, fx.v, y, sopts);
        const auto g1 = solve_palm_g1(sys, t, fx.v, one, y, sopts);
        queries.push_back({MaternOrder::inf(), t, site_function(fx.v), site_indicator({y})});
        queries.push_back({MaternOrder::finite(1), t, site_function(fx.v), site_indicator({y})});
        solved.push_back(inf);
        solved.push_back(g1);
        names.push_back("palm_inf_mc/" + tag);
        names.push_back("palm_g1_mc/" + tag);
        for (const auto* r : {&inf, &g1}) {
          Check c;
          c.name = std::string(r == &inf ? "palm_inf" : "palm_g1") + "_reduced_identity/" + tag;
          c.solver_value = r->palm;
          c.mc_value = palm_from_reduced(fx.v[y], r->reduced);
          c.pass = c.mc_value == c.solver_value;
          rep.checks.push_back(std::move(c));
        }
      }
    }
    const auto est = estimate_palm_pgfl_batch(fx.model, queries, reps, derive_seed(o.seed, 0x4000 + fixture_index),
                                              mc_options(o));
    for (std::size_t q = 0; q < est.size(); ++q) rep.checks.push_back(zcheck(names[q], est[q], solved[q].reduced));
    ++fixture_index;
  }

  // derivative identities: residual should fall about tenfold per decade of s.
  // When G is affine along the direction (one self-conflicting atom) the
  // difference quotient is already exact and the residual sits at roundoff.
  const double lo = value_or(o.params, "ratio_low", 8.0), hi = value_or(o.params, "ratio_high", 12.5);
  const double floor = value_or(o.params, "residual_floor", 1e-9);
  SolverOptions fine = sopts;
  fine.tol = std::min(sopts.tol, 1e-13);
  for (const auto& fx : palm_fixtures()) {
    const auto sys = atomic_system(fx.model);
    for (auto order : {MaternOrder::inf(), MaternOrder::finite(1)}) {
      for (auto kind : {IdentityKind::Multiplicative, IdentityKind::Additive}) {
        TestFunction v = fx.v;
        std::vector<std::size_t> region{0};
        if (kind == IdentityKind::Additive) {
          region = fx.additive_region;
          for (auto x : region) v.values[x] = 0.0;
        }
        std::vector<double> residuals;
        json rows = json::array();
        for (double s : {1e-2, 1e-3, 1e-4}) {
          const auto d = derivative_identity_residual(sys, order, 1.0, v, region, s, kind, fine);
          residuals.push_back(d.residual);
          rows.push_back({{"s", s}, {"finite_difference", d.finite_difference}, {"identity", d.identity},
                          {"residual", d.residual}});
        }
        const bool exact = *std::max_element(residuals.begin(), residuals.end()) <= floor;
        for (std::size_t i = 0; i + 1 < residuals.size(); ++i) {
          Check c;
          c.name = "identity_" + std::string(kind == IdentityKind::Multiplicative ? "multiplicative" : "additive") +
                   "/" + fx.name + "/order=" + order.label() + "/decade" + std::to_string(i + 1);
          const double ratio = residuals[i + 1] > 0.0 ? residuals[i] / residuals[i + 1] : INFINITY;
          c.mc_value = ratio;
          c.solver_value = 10.0;
          c.pass = exact || (ratio >= lo && ratio <= hi);
          c.detail = {{"steps", rows}, {"band", {lo, hi}}, {"exact_difference_quotient", exact}};
          rep.checks.push_back(std::move(c));
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

double renyi_coverage(double t) {
  if (!(t > 0.0)) return 0.0;
  constexpr double gamma = std::numbers::egamma;
  // int_0^s (1 - e^{-u}) / u du: series near zero, exponential integral beyond
  auto ein = [&](double s) {
    if (s <= 0.0) return 0.0;
    if (s < 1.0) {
      double term = s, sum = 0.0;
      for (int n = 1; n < 40; ++n) {
        sum += term / n;
        term *= -s / (n + 1);
      }
      return sum;
    }
    return gamma + std::log(s) - std::expint(-s);
  };
  auto integrand = [&](double s) { return std::exp(-2.0 * ein(s)); };
  double prev = NAN;
  for (std::size_t n = 64;; n *= 2) {
    const double h = t / static_cast<double>(n);
    double sum = integrand(0.0) + integrand(t);
    for (std::size_t i = 1; i < n; ++i) sum += integrand(static_cast<double>(i) * h) * (i % 2 ? 4.0 : 2.0);
    const double val = sum * h / 3.0;
    if (std::abs(val - prev) < 1e-12 || n > (1u << 22)) return val;
    prev = val;
  }
}

SuiteReport suite_renyi(const SuiteOptions& o) {
  SuiteReport rep{"renyi", {}, {}};
  const double L = value_or(o.params, "length", 1e4), lambda = value_or(o.params, "lambda", 1.0);
  const double r = value_or(o.params, "radius", 1.0), t_max = value_or(o.params, "t_max", 30.0);
  const double target = value_or(o.params, "target", 0.74759), band = value_or(o.params, "band", 0.005);
  const double change = value_or(o.params, "saturation_change", 0.001);
  const std::size_t reps = reps_for(o, "renyi_reps", 20);

  const auto curve = renyi_curve(L, lambda, r, {t_max, 2.0 * t_max}, reps, o.seed, o.jobs);
  const auto& d = curve.density[0];
  Check inband;
  inband.name = "density_band/t=" + fmt(t_max);
  inband.mc_value = d.mean;
  inband.solver_value = target;
  inband.se = d.se;
  inband.z = z_score(d, target);
  inband.pass = std::abs(d.mean - target) <= band;
  inband.detail = {{"band", band}};
  rep.checks.push_back(inband);

  Check doubling;
  doubling.name = "doubling_change/t=" + fmt(t_max);
  doubling.mc_value = std::abs(curve.density[1].mean - d.mean);
  doubling.solver_value = change;
  doubling.pass = doubling.mc_value < change;
  doubling.detail = {{"density_at_2t", curve.density[1].mean}};
  rep.checks.push_back(doubling);

  // time scaled to unit car length and unit rate
  const double exact = renyi_coverage(lambda * r * t_max);
  rep.checks.push_back(zcheck("mc_vs_coverage_curve/t=" + fmt(t_max), d, exact));

  const auto sat = renyi_saturate(L, lambda, r, t_max, change, reps, o.seed, 8, o.jobs);
  Check s;
  s.name = "saturated_run";
  s.gating = false;
  s.mc_value = sat.density.mean;
  s.solver_value = target;
  s.se = sat.density.se;
  s.z = z_score(sat.density, target);
  s.pass = sat.reached && std::abs(sat.density.mean - target) <= band;
  s.detail = {{"t", sat.t}, {"last_change", sat.last_change}, {"reached", sat.reached}};
  rep.checks.push_back(s);
  rep.info = {{"coverage_curve_at_t", exact}, {"coverage_curve_at_2t", renyi_coverage(2.0 * lambda * r * t_max)}};
  return rep;
}

SuiteReport suite_expansion(const SuiteOptions& o) {
  SuiteReport rep{"expansion", {}, {}};
  const std::size_t patterns = value_or<std::size_t>(o.params, "patterns", 100);
  const std::size_t max_points = value_or<std::size_t>(o.params, "max_points", 10);
  const double tolerance = value_or(o.params, "tolerance", 1e-12);
  // random patterns from a rain on a unit square; v is a random smooth bump
  Model m;
  m.space = GroundSpace(ContinuousBox{Box{{0.0, 0.0}, {1.0, 1.0}}, false});
  m.measure = Homogeneous{static_cast<double>(max_points) / 2.0};
  double worst = 0.0;
  std::size_t bad = 0, sizes = 0;
  for (std::size_t i = 0; i < patterns; ++i) {
    const auto seed = derive_seed(o.seed, 0x5000 + i);
    auto p = sample_rain(m, 1.0, seed);
    CounterRng rng(seed, 11);
    const double cx = rng.uniform(), cy = rng.uniform(), w = 0.1 + rng.uniform();
    std::vector<double> v;
    for (std::size_t k = 0; k < std::min(p.size(), max_points); ++k) {
      const auto x = p.location(k);
      const double d2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy);
      v.push_back(1.0 - std::exp(-d2 / (w * w)));
    }
    sizes += v.size();
    const auto e = expansion_check(v);
    const double err = std::abs(e.lhs - e.rhs);
    worst = std::max(worst, err);
    bad += !(err <= tolerance);
  }
  Check c = count_check("expansion_identity", bad, patterns);
  c.detail["max_abs_error"] = worst;
  c.detail["tolerance"] = tolerance;
  c.detail["mean_points"] = static_cast<double>(sizes) / static_cast<double>(std::max<std::size_t>(patterns, 1));
  rep.checks.push_back(c);
  return rep;
}

}  // namespace packinglab
