#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace packinglab {

/// Raised when a model or argument violates a documented invariant.
class InvariantError : public std::runtime_error {
 public:
  InvariantError(std::string invariant, const std::string& what)
      : std::runtime_error(invariant + ": " + what), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// Raised when a memory-heavy operation would exceed the configured budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a deterministic quadrature cannot reach its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double previous, double last)
      : std::runtime_error(what), previous_(previous), last_(last) {}
  double previous_estimate() const noexcept { return previous_; }
  double last_estimate() const noexcept { return last_; }

 private:
  double previous_;
  double last_;
};

/// Bug trap: two independent computations that must agree did not.
class InternalConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Ground space

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dimension() const { return lower.size(); }
  double volume() const;
  double side(std::size_t axis) const { return upper[axis] - lower[axis]; }
  bool contains(std::span<const double> x) const;
};

struct ContinuousBox {
  Box bounds;
  bool periodic = true;
};

struct DiscreteSites {
  std::size_t dimension = 1;
  std::vector<double> coords;  // site-major, dimension values per site

  std::size_t count() const { return dimension == 0 ? 0 : coords.size() / dimension; }
  std::span<const double> site(std::size_t i) const {
    return {coords.data() + i * dimension, dimension};
  }
};

class GroundSpace {
 public:
  GroundSpace() = default;
  explicit GroundSpace(ContinuousBox box) : repr_(std::move(box)) {}
  explicit GroundSpace(DiscreteSites sites) : repr_(std::move(sites)) {}

  std::size_t dimension() const;
  bool is_discrete() const { return std::holds_alternative<DiscreteSites>(repr_); }
  bool is_periodic() const;

  const ContinuousBox& box() const { return std::get<ContinuousBox>(repr_); }
  const DiscreteSites& sites() const { return std::get<DiscreteSites>(repr_); }

  /// Euclidean distance, minimum-image on periodic boxes.
  double distance(std::span<const double> a, std::span<const double> b) const;

  /// Index of the site with exactly these coordinates, if any.
  std::optional<std::size_t> find_site(std::span<const double> x) const;

 private:
  std::variant<ContinuousBox, DiscreteSites> repr_;
};

// ---------------------------------------------------------------------------
// Intensity measure

struct Homogeneous {
  double density = 0.0;
};

struct Atomic {
  std::vector<double> weights;  // one per discrete site
};

/// Cell densities on a regular grid covering the space box, row-major with
/// axis 0 varying slowest.
struct PiecewiseGrid {
  std::vector<std::size_t> cells;
  std::vector<double> densities;

  std::size_t cell_count() const;
  Box cell_box(const Box& domain, std::size_t flat) const;
};

using IntensityMeasure = std::variant<Homogeneous, Atomic, PiecewiseGrid>;

// ---------------------------------------------------------------------------
// Conflict kernel

enum class KernelShape {
  Zero,                 // h == 0
  HardIndicator,        // h = 1 for distance <= range (or < range when strict)
  ConstantWithinRange,  // h = probability for distance <= range
  TruncatedGaussian,    // h = probability * exp(-d^2 / (2 scale^2)) for d <= range
  SiteMatrix,           // explicit table on discrete sites
};

struct ConflictKernel {
  KernelShape shape = KernelShape::Zero;
  double range = 0.0;
  double probability = 1.0;
  double scale = 1.0;
  bool strict = false;
  std::size_t table_size = 0;
  std::vector<double> table;  // table_size x table_size, SiteMatrix only

  static ConflictKernel zero();
  static ConflictKernel hard(double radius, bool strict = false);
  static ConflictKernel constant(double probability, double range);
  static ConflictKernel gaussian(double amplitude, double scale, double range);
  static ConflictKernel matrix(std::size_t n, std::vector<double> values);

  /// Value as a function of distance; not meaningful for SiteMatrix.
  double profile(double distance) const;

  /// Finite interaction range, if the kernel has one.
  std::optional<double> interaction_range() const;

  /// True when every value the kernel can take is 0 or 1.
  bool is_binary() const;
};

// ---------------------------------------------------------------------------
// Model

struct SeedPolicy {
  std::uint64_t seed = 0;
};

struct Model {
  GroundSpace space;
  IntensityMeasure measure;
  ConflictKernel kernel;
  SeedPolicy seed_policy;

  /// Conflict probability between two locations; site indices are used by
  /// SiteMatrix kernels and ignored otherwise (pass -1 for continuous).
  double conflict(std::span<const double> a, std::int64_t site_a, std::span<const double> b,
                  std::int64_t site_b) const;

  /// Total intensity mass over the whole space.
  double total_mass() const;
};

struct ModelDiagnostics {
  bool ok = true;
  std::vector<std::string> failures;  // names of violated invariants
  std::vector<std::string> messages;
  double mass_bound = 0.0;            // N-bar estimate: max probed kernel mass
};

/// Integral of h(x, .) against the intensity measure.
double kernel_mass_at(const Model& model, std::span<const double> x, std::int64_t site = -1);

ModelDiagnostics validate_model(const Model& model);

/// Throws InvariantError naming the first failure.
void require_valid(const Model& model);

// ---------------------------------------------------------------------------
// Point patterns

struct TimedPoint {
  std::uint32_t id = 0;
  std::int64_t site = -1;
  std::vector<double> location;
  double timer = 0.0;
};

class TimedPointPattern {
 public:
  TimedPointPattern() = default;
  TimedPointPattern(std::size_t dimension, Box window, double t_max, std::uint64_t seed)
      : dimension_(dimension), window_(std::move(window)), t_max_(t_max), seed_(seed) {}

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dimension() const { return dimension_; }
  const Box& window() const { return window_; }
  double t_max() const { return t_max_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t tie_events() const { return tie_events_; }

  std::uint32_t id(std::size_t i) const { return ids_[i]; }
  std::int64_t site(std::size_t i) const { return sites_.empty() ? -1 : sites_[i]; }
  double timer(std::size_t i) const { return timers_[i]; }
  std::span<const double> location(std::size_t i) const {
    return {coords_.data() + i * dimension_, dimension_};
  }
  TimedPoint point(std::size_t i) const;

  const std::vector<std::uint32_t>& ids() const { return ids_; }
  const std::vector<double>& timers() const { return timers_; }

  void push_back(std::uint32_t id, std::span<const double> location, double timer,
                 std::int64_t site = -1);
  void set_timer(std::size_t i, double timer) { timers_[i] = timer; }
  void note_tie() { ++tie_events_; }
  void set_t_max(double t_max) { t_max_ = t_max; }

  /// Index of a point id, or nullopt.
  std::optional<std::size_t> index_of(std::uint32_t id) const;

 private:
  std::size_t dimension_ = 0;
  Box window_;
  double t_max_ = 0.0;
  std::uint64_t seed_ = 0;
  std::size_t tie_events_ = 0;
  std::vector<std::uint32_t> ids_;
  std::vector<std::int64_t> sites_;
  std::vector<double> coords_;
  std::vector<double> timers_;
};

/// Symmetric, non-reflexive conflict relation keyed by unordered id pairs.
class ConflictRealization {
 public:
  /// Adds the pair {a, b}; self-pairs are rejected.
  void add(std::uint32_t a, std::uint32_t b);
  bool contains(std::uint32_t a, std::uint32_t b) const;
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  /// Sorted (low, high) pairs.
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs() const;

 private:
  mutable std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
  mutable bool sorted_ = true;
};

}  // namespace packinglab
