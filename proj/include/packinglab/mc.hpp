#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "packinglab/matern.hpp"
#include "packinglab/pgfl.hpp"

namespace packinglab {

/// A test function evaluated on sampled points. `site` is -1 off discrete spaces.
using PointFunction = std::function<double(std::span<const double> x, std::int64_t site)>;

PointFunction constant_function(double c);
/// Site-indexed values; only valid on discrete spaces.
PointFunction site_function(const TestFunction& v);
PointFunction box_indicator(const Box& box);
PointFunction site_indicator(const std::vector<std::size_t>& sites);

struct TypeI {};
/// Joint selector over Q_1..Q_k and R_k; takes k + 1 functions.
struct JointQR {
  int k = 1;
};
using ProcessSelector = std::variant<MaternOrder, TypeI, JointQR>;

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
};

double z_score(const Estimate& e, double reference);

struct McOptions {
  std::optional<Box> window;  // default: the whole space
  unsigned jobs = 0;          // 0: hardware concurrency
};

struct PgflQuery {
  ProcessSelector selector;
  double t = 1.0;
  std::vector<PointFunction> v;  // one function, or k + 1 for JointQR
};

/// Every query is evaluated on the same reps realizations. Each rep is
/// sampled once at the largest t and restricted per query, which equals
/// thinning the restricted rain.
std::vector<Estimate> estimate_pgfl_batch(const Model& model, const std::vector<PgflQuery>& queries,
                                          std::size_t reps, std::uint64_t seed, const McOptions& opts = {});

Estimate estimate_pgfl(const Model& model, const ProcessSelector& selector, double t,
                       const std::vector<PointFunction>& v, std::size_t reps, std::uint64_t seed,
                       const McOptions& opts = {});

/// Mean number of points of the order-k thinning in the region at time t.
Estimate estimate_moment(const Model& model, MaternOrder order, double t, const PointFunction& region,
                         std::size_t reps, std::uint64_t seed, const McOptions& opts = {});

struct PalmQuery {
  MaternOrder order;
  double t = 1.0;
  PointFunction v;
  PointFunction region;  // anchor region B, as an indicator
};

/// Ratio of mean sum over x in B of prod_{z != x} v(z) to mean N(B); delta-method
/// standard error. Throws InvariantError when no rep has a point in B.
std::vector<Estimate> estimate_palm_pgfl_batch(const Model& model, const std::vector<PalmQuery>& queries,
                                               std::size_t reps, std::uint64_t seed, const McOptions& opts = {});
Estimate estimate_palm_pgfl(const Model& model, MaternOrder order, double t, const PointFunction& v,
                            const PointFunction& region, std::size_t reps, std::uint64_t seed,
                            const McOptions& opts = {});

struct Expansion {
  double lhs = 1.0;
  double rhs = 1.0;
};

/// prod v against 1 + sum_i (-1)^i sum over i-subsets of prod (1 - v).
Expansion expansion_check(const std::vector<double>& v_at_points, std::size_t cap = 12);

/// Covered fraction |M_inf| r / L of RSA on a circle of circumference L with
/// h = 1{|x - y| < r}. One entry per time; the times share sample paths.
struct RenyiCurve {
  std::vector<double> times;
  std::vector<Estimate> density;
};
RenyiCurve renyi_curve(double length, double lambda, double radius, const std::vector<double>& times,
                       std::size_t reps, std::uint64_t seed, unsigned jobs = 0);
Estimate renyi_density(double length, double lambda, double radius, double t_max, std::size_t reps,
                       std::uint64_t seed, unsigned jobs = 0);

/// Doubles t from t_start until the mean moves by less than `change`.
struct Saturation {
  double t = 0.0;
  Estimate density;
  double last_change = 0.0;
  bool reached = false;
};
Saturation renyi_saturate(double length, double lambda, double radius, double t_start, double change,
                          std::size_t reps, std::uint64_t seed, int max_doublings = 8, unsigned jobs = 0);

}  // namespace packinglab
