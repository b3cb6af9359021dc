#include "packinglab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace packinglab {

// ---------------------------------------------------------------------------
// Box / space

double Box::volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < lower.size(); ++a) v *= upper[a] - lower[a];
  return v;
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t a = 0; a < lower.size(); ++a) {
    if (x[a] < lower[a] || x[a] >= upper[a]) return false;
  }
  return true;
}

std::size_t GroundSpace::dimension() const {
  if (is_discrete()) return sites().dimension;
  return box().bounds.dimension();
}

bool GroundSpace::is_periodic() const { return !is_discrete() && box().periodic; }

double GroundSpace::distance(std::span<const double> a, std::span<const double> b) const {
  double sum = 0.0;
  const bool wrap = is_periodic();
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]);
    if (wrap) {
      const double side = box().bounds.side(i);
      d = std::fmod(d, side);
      d = std::min(d, side - d);
    }
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::optional<std::size_t> GroundSpace::find_site(std::span<const double> x) const {
  if (!is_discrete()) return std::nullopt;
  const auto& s = sites();
  for (std::size_t i = 0; i < s.count(); ++i) {
    if (std::equal(x.begin(), x.end(), s.site(i).begin())) return i;
  }
  return std::nullopt;
}

std::size_t PiecewiseGrid::cell_count() const {
  std::size_t n = 1;
  for (auto c : cells) n *= c;
  return cells.empty() ? 0 : n;
}

Box PiecewiseGrid::cell_box(const Box& domain, std::size_t flat) const {
  Box b{domain.lower, domain.upper};
  for (std::size_t a = cells.size(); a-- > 0;) {
    const std::size_t idx = flat % cells[a];
    flat /= cells[a];
    const double w = domain.side(a) / static_cast<double>(cells[a]);
    b.lower[a] = domain.lower[a] + w * static_cast<double>(idx);
    b.upper[a] = b.lower[a] + w;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Kernel

ConflictKernel ConflictKernel::zero() { return {}; }

ConflictKernel ConflictKernel::hard(double radius, bool strict) {
  ConflictKernel k;
  k.shape = KernelShape::HardIndicator;
  k.range = radius;
  k.strict = strict;
  return k;
}

ConflictKernel ConflictKernel::constant(double probability, double range) {
  ConflictKernel k;
  k.shape = KernelShape::ConstantWithinRange;
  k.probability = probability;
  k.range = range;
  return k;
}

ConflictKernel ConflictKernel::gaussian(double amplitude, double scale, double range) {
  ConflictKernel k;
  k.shape = KernelShape::TruncatedGaussian;
  k.probability = amplitude;
  k.scale = scale;
  k.range = range;
  return k;
}

ConflictKernel ConflictKernel::matrix(std::size_t n, std::vector<double> values) {
  ConflictKernel k;
  k.shape = KernelShape::SiteMatrix;
  k.table_size = n;
  k.table = std::move(values);
  return k;
}

double ConflictKernel::profile(double d) const {
  switch (shape) {
    case KernelShape::Zero:
    case KernelShape::SiteMatrix:
      return 0.0;
    case KernelShape::HardIndicator:
      return (strict ? d < range : d <= range) ? 1.0 : 0.0;
    case KernelShape::ConstantWithinRange:
      return d <= range ? probability : 0.0;
    case KernelShape::TruncatedGaussian:
      return d <= range ? probability * std::exp(-d * d / (2.0 * scale * scale)) : 0.0;
  }
  return 0.0;
}

std::optional<double> ConflictKernel::interaction_range() const {
  switch (shape) {
    case KernelShape::Zero:
      return 0.0;
    case KernelShape::SiteMatrix:
      return std::nullopt;
    default:
      return range;
  }
}

bool ConflictKernel::is_binary() const {
  switch (shape) {
    case KernelShape::Zero:
    case KernelShape::HardIndicator:
      return true;
    case KernelShape::ConstantWithinRange:
      return probability == 0.0 || probability == 1.0;
    case KernelShape::TruncatedGaussian:
      return probability == 0.0;
    case KernelShape::SiteMatrix:
      return std::all_of(table.begin(), table.end(), [](double h) { return h == 0.0 || h == 1.0; });
  }
  return false;
}

// ---------------------------------------------------------------------------
// Model

double Model::conflict(std::span<const double> a, std::int64_t site_a, std::span<const double> b,
                       std::int64_t site_b) const {
  if (kernel.shape == KernelShape::SiteMatrix) {
    if (site_a < 0 || site_b < 0) return 0.0;
    return kernel.table[static_cast<std::size_t>(site_a) * kernel.table_size +
                        static_cast<std::size_t>(site_b)];
  }
  if (kernel.shape == KernelShape::Zero) return 0.0;
  return kernel.profile(space.distance(a, b));
}

double Model::total_mass() const {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Homogeneous>) {
          return m.density * space.box().bounds.volume();
        } else if constexpr (std::is_same_v<M, Atomic>) {
          double s = 0.0;
          for (double w : m.weights) s += w;
          return s;
        } else {
          const Box& dom = space.box().bounds;
          const double cell_vol = dom.volume() / static_cast<double>(m.cell_count());
          double s = 0.0;
          for (double d : m.densities) s += d * cell_vol;
          return s;
        }
      },
      measure);
}

namespace {

double unit_ball_volume(std::size_t d) {
  const double dd = static_cast<double>(d);
  return std::pow(std::numbers::pi, dd / 2.0) / std::tgamma(dd / 2.0 + 1.0);
}

// Adaptive Simpson on [a, b].
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth) {
  auto simpson = [&](double lo, double hi, double flo, double fmid, double fhi) {
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  };
  struct Rec {
    F& f;
    decltype(simpson)& s;
    double run(double lo, double hi, double flo, double fmid, double fhi, double whole, double eps,
               int left) {
      const double mid = 0.5 * (lo + hi);
      const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
      const double flm = f(lm), frm = f(rm);
      const double l = s(lo, mid, flo, flm, fmid), r = s(mid, hi, fmid, frm, fhi);
      if (left <= 0 || std::abs(l + r - whole) <= 15.0 * eps) return l + r + (l + r - whole) / 15.0;
      return run(lo, mid, flo, flm, fmid, l, eps / 2, left - 1) +
             run(mid, hi, fmid, frm, fhi, r, eps / 2, left - 1);
    }
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  Rec rec{f, simpson};
  return rec.run(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth);
}

// Integral of the radial profile over the full ball of its range in R^d.
double radial_integral(const ConflictKernel& k, std::size_t d) {
  const double vol = unit_ball_volume(d) * std::pow(k.range, static_cast<double>(d));
  switch (k.shape) {
    case KernelShape::HardIndicator:
      return vol;
    case KernelShape::ConstantWithinRange:
      return k.probability * vol;
    case KernelShape::TruncatedGaussian: {
      const double surface = static_cast<double>(d) * unit_ball_volume(d);
      auto f = [&](double r) {
        return k.profile(r) * surface * std::pow(r, static_cast<double>(d) - 1.0);
      };
      return adaptive_simpson(f, 0.0, k.range, 1e-13, 40);
    }
    default:
      return 0.0;
  }
}

// Per-axis min / max of |x - y| over y in [lo, hi], min-image when side > 0.
std::pair<double, double> axis_distance_range(double x, double lo, double hi, double side) {
  if (side <= 0.0) {
    const double dmin = (x < lo) ? lo - x : (x > hi ? x - hi : 0.0);
    const double dmax = std::max(std::abs(x - lo), std::abs(x - hi));
    return {dmin, dmax};
  }
  auto img = [side](double d) {
    d = std::fmod(std::abs(d), side);
    return std::min(d, side - d);
  };
  // the image distance is piecewise linear; extremes at endpoints or at the
  // points y = x (distance 0) and y = x + side/2 (distance side/2) mod side
  double dmin = std::min(img(x - lo), img(x - hi));
  double dmax = std::max(img(x - lo), img(x - hi));
  auto inside = [&](double y) {
    // is some y + m*side in [lo, hi]?
    const double m = std::ceil((lo - y) / side);
    return y + m * side <= hi;
  };
  if (inside(x)) dmin = 0.0;
  if (inside(x + side / 2.0)) dmax = side / 2.0;
  return {dmin, dmax};
}

struct CellIntegrator {
  const Model& model;
  std::span<const double> x;
  double range;
  double hmax;
  std::vector<double> sides;  // per axis period or 0

  // Returns (estimate, undecided volume bound * hmax).
  std::pair<double, double> run(const Box& cell, int depth) const {
    const std::size_t d = cell.dimension();
    double min2 = 0.0, max2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      auto [lo, hi] = axis_distance_range(x[a], cell.lower[a], cell.upper[a], sides[a]);
      min2 += lo * lo;
      max2 += hi * hi;
    }
    const double vol = cell.volume();
    if (std::sqrt(min2) > range) return {0.0, 0.0};
    const bool smooth_inside = std::sqrt(max2) < range;
    const KernelShape shape = model.kernel.shape;
    if (smooth_inside && shape != KernelShape::TruncatedGaussian) {
      return {model.kernel.profile(0.0) * vol, 0.0};
    }
    if (smooth_inside || depth == 0) {
      // tensor 3-point Gauss-Legendre on the cell
      static const double nodes[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
      static const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      std::size_t total = 1;
      for (std::size_t a = 0; a < d; ++a) total *= 3;
      std::vector<double> y(d);
      double acc = 0.0;
      for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t f = flat;
        double w = 1.0;
        for (std::size_t a = 0; a < d; ++a) {
          const std::size_t i = f % 3;
          f /= 3;
          const double half = 0.5 * cell.side(a);
          y[a] = cell.lower[a] + half * (1.0 + nodes[i]);
          w *= weights[i] * 0.5;
        }
        acc += w * model.kernel.profile(model.space.distance(x, y));
      }
      return {acc * vol, smooth_inside ? 0.0 : vol * hmax};
    }
    // split along every axis
    std::pair<double, double> sum{0.0, 0.0};
    const std::size_t children = std::size_t{1} << d;
    for (std::size_t c = 0; c < children; ++c) {
      Box sub = cell;
      for (std::size_t a = 0; a < d; ++a) {
        const double mid = 0.5 * (cell.lower[a] + cell.upper[a]);
        if (c & (std::size_t{1} << a)) sub.lower[a] = mid;
        else sub.upper[a] = mid;
      }
      auto r = run(sub, depth - 1);
      sum.first += r.first;
      sum.second += r.second;
    }
    return sum;
  }
};

constexpr double kQuadratureTol = 1e-9;
constexpr int kQuadratureMaxDepth = 22;

// Integral of h(x, y) dy over a box, refined until two successive depths agree.
double integrate_kernel_over_box(const Model& model, std::span<const double> x, const Box& cell) {
  const auto& k = model.kernel;
  if (k.shape == KernelShape::Zero) return 0.0;
  const std::size_t d = cell.dimension();
  std::vector<double> sides(d, 0.0);
  if (model.space.is_periodic()) {
    for (std::size_t a = 0; a < d; ++a) sides[a] = model.space.box().bounds.side(a);
  }
  if (d == 1 && k.shape != KernelShape::TruncatedGaussian) {
    // exact: length of {y in cell : |x - y| <= range}, min-image aware
    double len = 0.0;
    const double lo = x[0] - k.range, hi = x[0] + k.range;
    if (sides[0] > 0.0) {
      for (int m = -2; m <= 2; ++m) {
        const double sh = m * sides[0];
        len += std::max(0.0, std::min(hi, cell.upper[0] + sh) - std::max(lo, cell.lower[0] + sh));
      }
      len = std::min(len, cell.side(0));
    } else {
      len = std::max(0.0, std::min(hi, cell.upper[0]) - std::max(lo, cell.lower[0]));
    }
    return k.profile(0.0) * len;
  }
  CellIntegrator integ{model, x, k.range, k.profile(0.0), sides};
  double previous = std::nan("");
  for (int depth = std::min<int>(2, kQuadratureMaxDepth); depth <= kQuadratureMaxDepth; ++depth) {
    auto [est, undecided] = integ.run(cell, depth);
    if (undecided <= kQuadratureTol * std::max(1.0, est)) return est;
    if (!std::isnan(previous) && std::abs(est - previous) <= kQuadratureTol * std::max(1.0, est)) {
      return est;
    }
    previous = est;
    if (depth * static_cast<int>(d) > 26) {
      throw QuadratureError("kernel mass quadrature did not converge", previous, est);
    }
  }
  throw QuadratureError("kernel mass quadrature did not converge", previous, previous);
}

}  // namespace

double kernel_mass_at(const Model& model, std::span<const double> x, std::int64_t site) {
  const auto& k = model.kernel;
  if (k.shape == KernelShape::Zero) return 0.0;
  if (const auto* atomic = std::get_if<Atomic>(&model.measure)) {
    const auto& sites = model.space.sites();
    double sum = 0.0;
    for (std::size_t j = 0; j < atomic->weights.size(); ++j) {
      sum += atomic->weights[j] * model.conflict(x, site, sites.site(j), static_cast<std::int64_t>(j));
    }
    return sum;
  }
  const Box& dom = model.space.box().bounds;
  if (const auto* hom = std::get_if<Homogeneous>(&model.measure)) {
    if (hom->density == 0.0) return 0.0;
    bool ball_inside = model.space.is_periodic();
    if (!ball_inside) {
      ball_inside = true;
      for (std::size_t a = 0; a < dom.dimension(); ++a) {
        if (x[a] - k.range < dom.lower[a] || x[a] + k.range > dom.upper[a]) ball_inside = false;
      }
    }
    if (ball_inside) return hom->density * radial_integral(k, dom.dimension());
    return hom->density * integrate_kernel_over_box(model, x, dom);
  }
  const auto& grid = std::get<PiecewiseGrid>(model.measure);
  double sum = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (grid.densities[c] == 0.0) continue;
    sum += grid.densities[c] * integrate_kernel_over_box(model, x, grid.cell_box(dom, c));
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void fail(ModelDiagnostics& diag, const std::string& invariant, const std::string& message) {
  diag.ok = false;
  diag.failures.push_back(invariant);
  diag.messages.push_back(invariant + ": " + message);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

// Deterministic low-discrepancy probe points in a box.
std::vector<std::vector<double>> probe_points(const Box& box, std::size_t per_axis) {
  const std::size_t d = box.dimension();
  std::size_t total = 1;
  for (std::size_t a = 0; a < d; ++a) total *= per_axis;
  std::vector<std::vector<double>> pts;
  pts.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t f = flat;
    std::vector<double> p(d);
    for (std::size_t a = 0; a < d; ++a) {
      const std::size_t i = f % per_axis;
      f /= per_axis;
      p[a] = box.lower[a] + box.side(a) * (static_cast<double>(i) + 0.5) / static_cast<double>(per_axis);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace

ModelDiagnostics validate_model(const Model& model) {
  ModelDiagnostics diag;
  const auto& space = model.space;
  const auto& kernel = model.kernel;
  const std::size_t d = space.dimension();

  if (d == 0) fail(diag, "dimension", "dimension must be >= 1");

  if (space.is_discrete()) {
    const auto& s = space.sites();
    if (s.coords.size() % std::max<std::size_t>(1, s.dimension) != 0) {
      fail(diag, "dimension", "site coordinates not a multiple of the dimension");
    }
    for (std::size_t i = 0; i < s.count(); ++i) {
      for (std::size_t j = i + 1; j < s.count(); ++j) {
        if (std::equal(s.site(i).begin(), s.site(i).end(), s.site(j).begin())) {
          fail(diag, "distinct_sites", "sites " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
        }
      }
    }
    const auto* atomic = std::get_if<Atomic>(&model.measure);
    if (!atomic) {
      fail(diag, "measure_shape", "discrete sites require an atomic measure");
    } else {
      if (atomic->weights.size() != s.count()) {
        fail(diag, "measure_shape", "one weight per site required");
      }
      for (double w : atomic->weights) {
        if (!finite_nonneg(w)) {
          fail(diag, "local_finiteness", "atomic weights must be finite and >= 0");
          break;
        }
      }
    }
  } else {
    const Box& b = space.box().bounds;
    if (b.upper.size() != b.lower.size()) fail(diag, "dimension", "bounds length mismatch");
    for (std::size_t a = 0; a < b.dimension(); ++a) {
      if (!(b.upper[a] > b.lower[a]) || !std::isfinite(b.side(a))) {
        fail(diag, "box_volume", "box bounds must have positive finite extent");
        break;
      }
    }
    if (std::holds_alternative<Atomic>(model.measure)) {
      fail(diag, "measure_shape", "atomic measures require discrete sites");
    } else if (const auto* hom = std::get_if<Homogeneous>(&model.measure)) {
      if (!finite_nonneg(hom->density)) fail(diag, "local_finiteness", "density must be finite and >= 0");
    } else {
      const auto& g = std::get<PiecewiseGrid>(model.measure);
      if (g.cells.size() != d || g.densities.size() != g.cell_count()) {
        fail(diag, "measure_shape", "grid cells must match dimension and density count");
      }
      for (double v : g.densities) {
        if (!finite_nonneg(v)) {
          fail(diag, "local_finiteness", "grid densities must be finite and >= 0");
          break;
        }
      }
    }
  }

  // kernel
  if (kernel.shape == KernelShape::SiteMatrix) {
    if (!space.is_discrete() || kernel.table_size != space.sites().count() ||
        kernel.table.size() != kernel.table_size * kernel.table_size) {
      fail(diag, "kernel_shape", "site matrix must be n x n over the discrete sites");
    } else {
      const std::size_t n = kernel.table_size;
      for (std::size_t i = 0; i < n && diag.ok; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double hij = kernel.table[i * n + j];
          if (!(hij >= 0.0 && hij <= 1.0)) {
            fail(diag, "range", "h must lie in [0, 1]");
            break;
          }
          if (hij != kernel.table[j * n + i]) {
            fail(diag, "symmetry", "h(" + std::to_string(i) + "," + std::to_string(j) + ") != h(" +
                                       std::to_string(j) + "," + std::to_string(i) + ")");
            break;
          }
        }
      }
    }
  } else if (kernel.shape != KernelShape::Zero) {
    if (!(kernel.range >= 0.0) || !std::isfinite(kernel.range)) {
      fail(diag, "range", "kernel range must be finite and >= 0");
    }
    if (!(kernel.probability >= 0.0 && kernel.probability <= 1.0)) {
      fail(diag, "range", "kernel amplitude must lie in [0, 1]");
    }
    if (kernel.shape == KernelShape::TruncatedGaussian && !(kernel.scale > 0.0)) {
      fail(diag, "range", "gaussian scale must be positive");
    }
    if (space.is_periodic()) {
      const Box& b = space.box().bounds;
      for (std::size_t a = 0; a < b.dimension(); ++a) {
        if (kernel.range >= 0.5 * b.side(a)) {
          fail(diag, "periodic_range", "kernel range must be below half the torus side");
          break;
        }
      }
    }
  }

  if (!diag.ok) return diag;

  // symmetry probes on sampled pairs
  std::vector<std::vector<double>> probes;
  std::vector<std::int64_t> probe_sites;
  if (space.is_discrete()) {
    for (std::size_t i = 0; i < space.sites().count(); ++i) {
      auto p = space.sites().site(i);
      probes.emplace_back(p.begin(), p.end());
      probe_sites.push_back(static_cast<std::int64_t>(i));
    }
  } else {
    const std::size_t per_axis = d == 1 ? 33 : (d == 2 ? 9 : 4);
    probes = probe_points(space.box().bounds, per_axis);
    probe_sites.assign(probes.size(), -1);
  }
  for (std::size_t i = 0; i < probes.size() && diag.ok; ++i) {
    const std::size_t j = (i * 7 + 3) % probes.size();
    const double hij = model.conflict(probes[i], probe_sites[i], probes[j], probe_sites[j]);
    const double hji = model.conflict(probes[j], probe_sites[j], probes[i], probe_sites[i]);
    if (hij != hji) fail(diag, "symmetry", "asymmetric kernel probe");
    if (!(hij >= 0.0 && hij <= 1.0)) fail(diag, "range", "h outside [0, 1]");
  }
  if (!diag.ok) return diag;

  try {
    double bound = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      bound = std::max(bound, kernel_mass_at(model, probes[i], probe_sites[i]));
    }
    if (!std::isfinite(bound)) fail(diag, "finite_mass_bound", "N-bar is not finite");
    diag.mass_bound = bound;
  } catch (const QuadratureError& e) {
    std::ostringstream os;
    os << e.what() << " (estimates " << e.previous_estimate() << ", " << e.last_estimate() << ")";
    fail(diag, "finite_mass_bound", os.str());
  }
  return diag;
}

void require_valid(const Model& model) {
  auto diag = validate_model(model);
  if (!diag.ok) throw InvariantError(diag.failures.front(), diag.messages.front());
}

// ---------------------------------------------------------------------------
// Patterns

TimedPoint TimedPointPattern::point(std::size_t i) const {
  auto loc = location(i);
  return TimedPoint{ids_[i], site(i), {loc.begin(), loc.end()}, timers_[i]};
}

void TimedPointPattern::push_back(std::uint32_t id, std::span<const double> location, double timer,
                                  std::int64_t site) {
  if (location.size() != dimension_) throw InvariantError("dimension", "location dimension mismatch");
  if (!(timer >= 0.0)) throw InvariantError("timer", "timers must be >= 0");
  if (site >= 0 && sites_.size() != ids_.size()) {
    throw InvariantError("site", "mixing located and site-indexed points");
  }
  if (site >= 0 || !sites_.empty()) sites_.push_back(site);
  ids_.push_back(id);
  coords_.insert(coords_.end(), location.begin(), location.end());
  timers_.push_back(timer);
}

std::optional<std::size_t> TimedPointPattern::index_of(std::uint32_t id) const {
  // ids are increasing for sampled patterns and their restrictions
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it != ids_.end() && *it == id) return static_cast<std::size_t>(it - ids_.begin());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return i;
  }
  return std::nullopt;
}

void ConflictRealization::add(std::uint32_t a, std::uint32_t b) {
  if (a == b) throw InvariantError("non_reflexive", "conflict relation cannot contain self-pairs");
  const auto p = std::make_pair(std::min(a, b), std::max(a, b));
  if (sorted_ && !pairs_.empty() && pairs_.back() >= p) sorted_ = false;
  pairs_.push_back(p);
}

const std::vector<std::pair<std::uint32_t, std::uint32_t>>& ConflictRealization::pairs() const {
  if (!sorted_) {
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
    sorted_ = true;
  }
  return pairs_;
}

bool ConflictRealization::contains(std::uint32_t a, std::uint32_t b) const {
  if (a == b) return false;
  const auto& p = pairs();
  return std::binary_search(p.begin(), p.end(), std::make_pair(std::min(a, b), std::max(a, b)));
}

}  // namespace packinglab
