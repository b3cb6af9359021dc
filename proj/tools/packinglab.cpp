// packinglab command-line front end.
//
// Exit codes: 0 success, 1 failing checks or solver failure, 2 invalid
// configuration or precondition, 3 memory budget refusal.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "packinglab/core.hpp"
#include "packinglab/matern.hpp"
#include "packinglab/mc.hpp"
#include "packinglab/model_io.hpp"
#include "packinglab/palm.hpp"
#include "packinglab/pgfl.hpp"
#include "packinglab/rain.hpp"
#include "packinglab/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace packinglab;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  std::optional<double> tol;
  std::optional<std::size_t> reps;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "JSON config file");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "seed, overrides seed_policy.seed");
  cmd->add_option("--jobs", c.jobs, "worker threads (0: all cores); results do not depend on it");
  cmd->add_option("--tol", c.tol, "solver tolerance");
  cmd->add_option("--reps", c.reps, "Monte Carlo replications");
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw ConfigError("cannot write " + (dir / name).string());
  return f;
}

void write_json(const fs::path& dir, const std::string& name, const json& j) {
  auto f = open_out(dir, name);
  f << j.dump(2) << '\n';
}

json section(const json& cfg, const char* key) {
  return cfg.contains(key) ? cfg.at(key) : json::object();
}

Model model_of(const json& cfg) { return parse_model(cfg.contains("model") ? cfg.at("model") : cfg); }

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c) {
  const json cfg = load_json(c.config);
  Model model = model_of(cfg);
  require_valid(model);
  const json sim = section(cfg, "simulate");
  const double t_max = value_or(sim, "t_max", 1.0);
  const std::uint64_t seed = c.seed.value_or(model.seed_policy.seed);
  std::vector<MaternOrder> orders{MaternOrder::finite(1), MaternOrder::inf()};
  if (sim.contains("orders")) {
    orders.clear();
    for (const auto& o : sim.at("orders")) orders.push_back(parse_order(o));
  }
  const Box window = sim.contains("window") ? parse_box(sim.at("window")) : space_window(model);

  const auto pattern = sample_rain(model, window, t_max, seed);
  ConflictSamplingReport rep;
  const auto conflicts = sample_conflicts(pattern, model, seed, &rep);
  if (!rep.warning.empty()) std::cerr << "warning: " << rep.warning << '\n';
  const fs::path out(c.out);
  {
    auto f = open_out(out, "pattern.csv");
    write_pattern_csv(f, pattern);
  }
  {
    auto f = open_out(out, "conflicts.csv");
    write_conflicts_csv(f, conflicts);
  }
  const auto graph = build_conflict_graph(pattern, conflicts);
  for (const auto& o : orders) {
    auto f = open_out(out, "thinning_" + (o.infinite ? std::string("inf") : "k" + o.label()) + ".csv");
    write_thinning_csv(f, pattern, ids_of(graph, selection(graph, o)));
  }
  std::cout << "points " << pattern.size() << ", conflicts " << conflicts.size() << ", tie events "
            << pattern.tie_events() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

json solver_report(const SolverResult& r) {
  return {{"value", r.value}, {"method", r.method},           {"tol", r.tol},
          {"error_estimate", r.error_estimate}, {"states_or_depth", r.states_or_depth}, {"work", r.work}};
}

std::string csv_num(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

struct Curve {
  std::vector<double> times, values, lower, upper;
  SolverResult meta;
};

Curve solve_curve(const json& q, const Model& model, const AtomicSystem& sys, const std::vector<double>& times,
                  const SolverOptions& sopts) {
  const auto target = value_or<std::string>(q, "target", "f_inf");
  Curve out;
  out.times = times;
  auto fill = [&](const SolverCurve& sc) {
    out.values = sc.values;
    out.meta = sc.meta;
    out.lower.assign(times.size(), NAN);
    out.upper.assign(times.size(), NAN);
  };
  if (target == "f_inf") {
    const auto v = parse_test_function(q.at("v"), sys);
    fill(solve_f_inf_curve(sys, times, v, sopts));
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto b = f_inf_bounds(sys, times[i], v);
      out.lower[i] = b.lower;
      out.upper[i] = b.upper;
    }
  } else if (target == "f_k") {
    const int k = value_or(q, "k", 1);
    fill(f_k_curve(sys, k, times, parse_test_function(q.at("v"), sys), sopts));
  } else if (target == "g_k") {
    const int k = value_or(q, "k", 1);
    std::vector<TestFunction> vs;
    for (const auto& vj : q.at("v")) vs.push_back(parse_test_function(vj, sys));
    fill(solve_g_k_curve(sys, k, times, vs, sopts));
  } else if (target == "moment") {
    const auto order = parse_order(q.contains("order") ? q.at("order") : json(1));
    const auto x = q.at("x").get<std::vector<double>>();
    const std::size_t cells = value_or<std::size_t>(q, "resolution", 16);
    out.lower.assign(times.size(), NAN);
    out.upper.assign(times.size(), NAN);
    for (double t : times) {
      if (t == 0.0) {
        out.values.push_back(0.0);
        continue;
      }
      out.meta = moment_density(model, order, t, x, sopts, cells);
      out.values.push_back(out.meta.value);
    }
  } else {
    throw ConfigError("unknown solve target '" + target + "'");
  }
  return out;
}

int cmd_solve(const Common& c) {
  const json cfg = load_json(c.config);
  const Model model = model_of(cfg);
  require_valid(model);
  const json q = section(cfg, "solve");
  SolverOptions sopts;
  sopts.tol = c.tol.value_or(value_or(q, "tol", sopts.tol));
  sopts.method = parse_method(value_or<std::string>(q, "method", "auto"));
  const auto times = parse_time_grid(q.contains("t") ? q.at("t") : json(1.0));
  const std::size_t resolution = value_or<std::size_t>(q, "resolution", 16);
  const auto target = value_or<std::string>(q, "target", "f_inf");
  const fs::path out(c.out);

  if (target == "palm") {
    const auto sys = to_atomic(model, resolution);
    const auto y = q.at("anchor").get<std::vector<double>>();
    const auto anchor = find_anchor(sys, y);
    if (!anchor) throw InvariantError("anchor", "palm anchor must be an atom of the (discretized) measure");
    const auto v = parse_test_function(q.at("v"), sys);
    const auto order = parse_order(q.contains("order") ? q.at("order") : json("inf"));
    PalmCurve pc;
    if (order.infinite) {
      pc = solve_palm_f_inf_curve(sys, times, v, *anchor, sopts);
    } else if (order.k == 1) {
      const auto u = q.contains("u") ? parse_test_function(q.at("u"), sys) : TestFunction::constant(sys.size(), 1.0);
      pc = solve_palm_g1_curve(sys, times, v, u, *anchor, sopts);
    } else {
      throw ConfigError("palm queries support order 1 or inf");
    }
    auto f = open_out(out, "palm_curve.csv");
    f << "t,palm,reduced,m\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
      f << format_double(times[i]) << ',' << format_double(pc.palm[i]) << ',' << format_double(pc.reduced[i]) << ','
        << format_double(pc.moment[i]) << '\n';
    }
    json rep = {{"anchor", y},         {"t", times.back()}, {"value", pc.palm.back()},
                {"reduced_value", pc.reduced.back()}, {"method", pc.meta.method}, {"tol", pc.meta.tol},
                {"error_estimate", pc.meta.error_estimate}};
    write_json(out, "palm_report.json", rep);
    std::cout << rep.dump() << '\n';
    return 0;
  }

  const auto sys = to_atomic(model, resolution);
  const Curve curve = solve_curve(q, model, sys, times, sopts);
  {
    auto f = open_out(out, "curve.csv");
    f << "t,value,lower,upper\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
      f << format_double(times[i]) << ',' << format_double(curve.values[i]) << ',' << csv_num(curve.lower[i]) << ','
        << csv_num(curve.upper[i]) << '\n';
    }
  }
  SolverResult last = curve.meta;
  last.value = curve.values.back();
  json rep = solver_report(last);
  rep["target"] = target;
  rep["t"] = times.back();
  if (sys.discretized && target != "moment") {
    // refinement study: the same query on cells half as wide
    const auto fine = to_atomic(model, 2 * resolution);
    const Curve fc = solve_curve(q, model, fine, {times.back()}, sopts);
    rep["refinement"] = {{"resolution", resolution},
                         {"value", last.value},
                         {"resolution_halved_cells", 2 * resolution},
                         {"value_halved_cells", fc.values.back()},
                         {"difference", fc.values.back() - last.value}};
  }
  write_json(out, "solver_report.json", rep);
  std::cout << rep.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Common& c, std::string suite) {
  json cfg = json::object();
  if (!c.config.empty()) cfg = load_json(c.config);
  const json v = section(cfg, "validate");
  if (suite.empty()) suite = value_or<std::string>(v, "suite", "");
  if (suite.empty()) throw ConfigError("no suite given (--suite or validate.suite)");
  SuiteOptions so;
  so.seed = c.seed.value_or(value_or<std::uint64_t>(v, "seed", so.seed));
  so.jobs = c.jobs;
  so.tol = c.tol.value_or(value_or(v, "tol", so.tol));
  so.reps = c.reps;
  if (v.contains("params")) so.params = v.at("params");
  const auto report = run_suite(suite, so);
  write_json(c.out, suite + "_report.json", report_to_json(report));
  std::size_t gating = 0;
  for (const auto& ch : report.checks) gating += ch.gating;
  std::cout << "suite " << suite << ": " << (report.passed() ? "pass" : "FAIL") << " (" << gating
            << " gating checks, " << report.checks.size() << " entries)\n";
  if (!report.info.empty()) std::cout << "info " << report.info.dump() << '\n';
  for (const auto* f : report.failures()) {
    std::cout << "failed " << f->name << " mc=" << f->mc_value << " solver=" << f->solver_value << " z=" << f->z
              << '\n';
  }
  return report.passed() ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct RenyiArgs {
  double length = 1e4, lambda = 1.0, radius = 1.0, t_max = 30.0, change = 0.001;
  bool saturate = false;
};

int cmd_renyi(const Common& c, const RenyiArgs& a) {
  const std::uint64_t seed = c.seed.value_or(1);
  const std::size_t reps = c.reps.value_or(20);
  json rep;
  if (a.saturate) {
    const auto s = renyi_saturate(a.length, a.lambda, a.radius, a.t_max, a.change, reps, seed, 8, c.jobs);
    rep = {{"t", s.t}, {"density", s.density.mean}, {"stderr", s.density.se}, {"reached", s.reached},
           {"last_change", s.last_change}};
  } else {
    const auto curve = renyi_curve(a.length, a.lambda, a.radius, {a.t_max, 2.0 * a.t_max}, reps, seed, c.jobs);
    rep = {{"t", a.t_max},
           {"density", curve.density[0].mean},
           {"stderr", curve.density[0].se},
           {"density_2t", curve.density[1].mean},
           {"doubling_change", std::abs(curve.density[1].mean - curve.density[0].mean)},
           {"coverage_curve", renyi_coverage(a.lambda * a.radius * a.t_max)}};
  }
  rep["length"] = a.length;
  rep["lambda"] = a.lambda;
  rep["radius"] = a.radius;
  rep["reps"] = reps;
  rep["seed"] = seed;
  write_json(c.out, "renyi.json", rep);
  std::cout << rep.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matern-type packing processes: simulation, p.g.fl solvers and Monte Carlo checks"};
  app.require_subcommand(1);
  Common sim, solve, val, ren;
  std::string suite;
  RenyiArgs ra;

  auto* s1 = app.add_subcommand("simulate", "sample a rain, its conflicts and thinnings");
  add_common(s1, sim, true);
  auto* s2 = app.add_subcommand("solve", "solve f_inf, f_k, g_k, moment or palm on a time grid");
  add_common(s2, solve, true);
  auto* s3 = app.add_subcommand("validate", "run a validation suite and write its JSON report");
  add_common(s3, val, false);
  s3->add_option("--suite", suite, "suite name")->check(CLI::IsMember(suite_names()));
  auto* s4 = app.add_subcommand("renyi", "random sequential adsorption density on a circle");
  add_common(s4, ren, false);
  s4->add_option("--length", ra.length, "circumference")->capture_default_str();
  s4->add_option("--lambda", ra.lambda, "arrival rate per unit length")->capture_default_str();
  s4->add_option("--radius", ra.radius, "exclusion distance")->capture_default_str();
  s4->add_option("--t-max", ra.t_max, "horizon")->capture_default_str();
  s4->add_flag("--saturate", ra.saturate, "double t until the density moves less than --change");
  s4->add_option("--change", ra.change, "saturation threshold")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s1) return cmd_simulate(sim);
    if (*s2) return cmd_solve(solve);
    if (*s3) return cmd_validate(val, suite);
    if (*s4) return cmd_renyi(ren, ra);
  } catch (const BudgetError& e) {
    std::cerr << "budget: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    json diag = {{"error", e.what()}, {"last_increment", e.last_increment()}};
    std::cerr << diag.dump() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
