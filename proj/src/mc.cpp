#include "packinglab/mc.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <thread>
#include <unordered_map>

#include "packinglab/rain.hpp"
#include "packinglab/rng.hpp"

namespace packinglab {

PointFunction constant_function(double c) {
  return [c](std::span<const double>, std::int64_t) { return c; };
}

PointFunction site_function(const TestFunction& v) {
  return [values = v.values](std::span<const double>, std::int64_t site) {
    if (site < 0 || static_cast<std::size_t>(site) >= values.size()) {
      throw InvariantError("site", "site-indexed function evaluated off the sites");
    }
    return values[static_cast<std::size_t>(site)];
  };
}

PointFunction box_indicator(const Box& box) {
  return [box](std::span<const double> x, std::int64_t) { return box.contains(x) ? 1.0 : 0.0; };
}

PointFunction site_indicator(const std::vector<std::size_t>& sites) {
  return [sites](std::span<const double>, std::int64_t site) {
    return std::find(sites.begin(), sites.end(), static_cast<std::size_t>(site)) != sites.end() ? 1.0 : 0.0;
  };
}

double z_score(const Estimate& e, double reference) {
  const double diff = e.mean - reference;
  if (e.se > 0.0) return diff / e.se;
  return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
}

namespace {

constexpr std::size_t kChunk = 256;

// Runs body(rep, rep_seed, acc) over all reps. Chunks of consecutive reps own
// their accumulators and are summed in chunk order, so the result does not
// depend on the thread count.
template <class Body>
std::vector<double> run_reps(std::size_t reps, std::uint64_t seed, std::size_t width, unsigned jobs, Body body) {
  const std::size_t chunks = (reps + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(width, 0.0));
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(chunks, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    try {
      for (std::size_t c = next++; c < chunks && !failed; c = next++) {
        const std::size_t end = std::min(reps, (c + 1) * kChunk);
        for (std::size_t r = c * kChunk; r < end; ++r) body(r, derive_seed(seed, r), partial[c]);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  // pairwise reduction over chunks
  while (partial.size() > 1) {
    std::vector<std::vector<double>> merged;
    for (std::size_t i = 0; i + 1 < partial.size(); i += 2) {
      auto s = partial[i];
      for (std::size_t w = 0; w < width; ++w) s[w] += partial[i + 1][w];
      merged.push_back(std::move(s));
    }
    if (partial.size() % 2 == 1) merged.push_back(std::move(partial.back()));
    partial = std::move(merged);
  }
  return partial.empty() ? std::vector<double>(width, 0.0) : partial[0];
}

Estimate from_sums(double sum, double sum_sq, std::size_t reps) {
  Estimate e;
  e.reps = reps;
  const double n = static_cast<double>(reps);
  e.mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * e.mean * e.mean) / (n - 1.0));
  e.se = std::sqrt(var / n);
  return e;
}

struct Realization {
  TimedPointPattern pattern;
  ConflictGraph graph;
};

Realization realize(const Model& model, const Box& window, double t_max, std::uint64_t seed) {
  Realization r;
  r.pattern = sample_rain(model, window, t_max, seed);
  const auto conflicts = sample_conflicts(r.pattern, model, seed);
  r.graph = build_conflict_graph(r.pattern, conflicts);
  return r;
}

// Per-vertex label for the joint selector: 0..k-1 for Q_1..Q_k, k for R_k.
std::vector<std::uint32_t> qr_labels(const ConflictGraph& g, int k) {
  const auto part = partition_QR(g, k);
  std::unordered_map<std::uint32_t, std::uint32_t> vertex;
  for (std::uint32_t i = 0; i < g.size(); ++i) vertex[g.ids[i]] = i;
  std::vector<std::uint32_t> label(g.size(), 0);
  for (std::size_t q = 0; q < part.Q.size(); ++q) {
    for (auto id : part.Q[q]) label[vertex.at(id)] = static_cast<std::uint32_t>(q);
  }
  for (auto id : part.R) label[vertex.at(id)] = static_cast<std::uint32_t>(k);
  return label;
}

std::size_t arity(const ProcessSelector& s) {
  if (const auto* j = std::get_if<JointQR>(&s)) return static_cast<std::size_t>(j->k) + 1;
  return 1;
}

void check_reps(std::size_t reps) {
  if (reps < 2) throw InvariantError("reps", "at least two replications are needed");
}

Box window_of(const Model& model, const McOptions& opts) {
  return opts.window ? *opts.window : space_window(model);
}

// Cached per-rep selections, keyed by selector.
class Selections {
 public:
  explicit Selections(const ConflictGraph& g) : g_(g) {}

  const Flags& order(MaternOrder o) {
    const int key = o.infinite ? -1 : o.k;
    auto it = orders_.find(key);
    if (it == orders_.end()) it = orders_.emplace(key, selection(g_, o)).first;
    return it->second;
  }
  const std::vector<std::uint32_t>& joint(int k) {
    auto it = joints_.find(k);
    if (it == joints_.end()) it = joints_.emplace(k, qr_labels(g_, k)).first;
    return it->second;
  }
  // Type I does not commute with restriction: a later conflictor counts only
  // if it arrived before t.
  bool type_I(std::uint32_t v, double t) const {
    if (!g_.parents[v].empty()) return false;
    for (auto c : g_.children[v]) {
      if (g_.timers[c] < t) return false;
    }
    return true;
  }

 private:
  const ConflictGraph& g_;
  std::map<int, Flags> orders_;
  std::map<int, std::vector<std::uint32_t>> joints_;
};

// Multiplier of vertex v under the query, or 1 when v is not selected.
double factor(const PgflQuery& q, Selections& sel, const TimedPointPattern& p, std::uint32_t v) {
  const auto loc = p.location(v);
  const auto site = p.site(v);
  if (const auto* o = std::get_if<MaternOrder>(&q.selector)) {
    return sel.order(*o)[v] ? q.v[0](loc, site) : 1.0;
  }
  if (std::holds_alternative<TypeI>(q.selector)) {
    return sel.type_I(v, q.t) ? q.v[0](loc, site) : 1.0;
  }
  const auto& labels = sel.joint(std::get<JointQR>(q.selector).k);
  return q.v[labels[v]](loc, site);
}

}  // namespace

std::vector<Estimate> estimate_pgfl_batch(const Model& model, const std::vector<PgflQuery>& queries,
                                          std::size_t reps, std::uint64_t seed, const McOptions& opts) {
  check_reps(reps);
  double t_max = 0.0;
  for (const auto& q : queries) {
    if (!(q.t > 0.0)) throw InvariantError("t", "t must be positive");
    if (q.v.size() != arity(q.selector)) throw InvariantError("arity", "wrong number of test functions for selector");
    if (const auto* j = std::get_if<JointQR>(&q.selector); j && j->k < 1) throw InvariantError("order", "k must be >= 1");
    t_max = std::max(t_max, q.t);
  }
  if (queries.empty()) return {};
  const Box window = window_of(model, opts);
  const auto sums = run_reps(reps, seed, 2 * queries.size(), opts.jobs,
                             [&](std::size_t, std::uint64_t s, std::vector<double>& acc) {
                               const auto r = realize(model, window, t_max, s);
                               Selections sel(r.graph);
                               for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                                 const auto& q = queries[qi];
                                 double prod = 1.0;
                                 for (std::uint32_t v = 0; v < r.graph.size() && prod != 0.0; ++v) {
                                   if (r.graph.timers[v] < q.t) prod *= factor(q, sel, r.pattern, v);
                                 }
                                 acc[2 * qi] += prod;
                                 acc[2 * qi + 1] += prod * prod;
                               }
                             });
  std::vector<Estimate> out;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) out.push_back(from_sums(sums[2 * qi], sums[2 * qi + 1], reps));
  return out;
}

Estimate estimate_pgfl(const Model& model, const ProcessSelector& selector, double t,
                       const std::vector<PointFunction>& v, std::size_t reps, std::uint64_t seed,
                       const McOptions& opts) {
  return estimate_pgfl_batch(model, {PgflQuery{selector, t, v}}, reps, seed, opts)[0];
}

Estimate estimate_moment(const Model& model, MaternOrder order, double t, const PointFunction& region,
                         std::size_t reps, std::uint64_t seed, const McOptions& opts) {
  check_reps(reps);
  if (!(t > 0.0)) throw InvariantError("t", "t must be positive");
  const Box window = window_of(model, opts);
  const auto sums = run_reps(reps, seed, 2, opts.jobs, [&](std::size_t, std::uint64_t s, std::vector<double>& acc) {
    const auto r = realize(model, window, t, s);
    const Flags f = selection(r.graph, order);
    double count = 0.0;
    for (std::uint32_t v = 0; v < r.graph.size(); ++v) {
      if (f[v] && region(r.pattern.location(v), r.pattern.site(v)) != 0.0) count += 1.0;
    }
    acc[0] += count;
    acc[1] += count * count;
  });
  return from_sums(sums[0], sums[1], reps);
}

std::vector<Estimate> estimate_palm_pgfl_batch(const Model& model, const std::vector<PalmQuery>& queries,
                                               std::size_t reps, std::uint64_t seed, const McOptions& opts) {
  check_reps(reps);
  double t_max = 0.0;
  for (const auto& q : queries) {
    if (!(q.t > 0.0)) throw InvariantError("t", "t must be positive");
    t_max = std::max(t_max, q.t);
  }
  if (queries.empty()) return {};
  const Box window = window_of(model, opts);
  constexpr std::size_t W = 5;  // sums of a, b, a^2, b^2, ab
  const auto sums = run_reps(reps, seed, W * queries.size(), opts.jobs,
                             [&](std::size_t, std::uint64_t s, std::vector<double>& acc) {
                               const auto r = realize(model, window, t_max, s);
                               Selections sel(r.graph);
                               std::vector<double> vals;
                               std::vector<std::uint8_t> in_b;
                               for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                                 const auto& q = queries[qi];
                                 const Flags& f = sel.order(q.order);
                                 vals.clear();
                                 in_b.clear();
                                 for (std::uint32_t v = 0; v < r.graph.size(); ++v) {
                                   if (!f[v] || !(r.graph.timers[v] < q.t)) continue;
                                   const auto loc = r.pattern.location(v);
                                   vals.push_back(q.v(loc, r.pattern.site(v)));
                                   in_b.push_back(q.region(loc, r.pattern.site(v)) != 0.0);
                                 }
                                 // products excluding one factor, via prefix and suffix products
                                 const std::size_t n = vals.size();
                                 std::vector<double> suffix(n + 1, 1.0);
                                 for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * vals[i];
                                 double a = 0.0, b = 0.0, prefix = 1.0;
                                 for (std::size_t i = 0; i < n; ++i) {
                                   if (in_b[i]) {
                                     a += prefix * suffix[i + 1];
                                     b += 1.0;
                                   }
                                   prefix *= vals[i];
                                 }
                                 double* slot = acc.data() + W * qi;
                                 slot[0] += a;
                                 slot[1] += b;
                                 slot[2] += a * a;
                                 slot[3] += b * b;
                                 slot[4] += a * b;
                               }
                             });
  std::vector<Estimate> out;
  const double n = static_cast<double>(reps);
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const double* s = sums.data() + W * qi;
    if (s[1] == 0.0) throw InvariantError("palm", "no replication had a point in the anchor region");
    const double ma = s[0] / n, mb = s[1] / n;
    const double ratio = ma / mb;
    // delta method on a - ratio * b
    const double saa = (s[2] - n * ma * ma) / (n - 1.0);
    const double sbb = (s[3] - n * mb * mb) / (n - 1.0);
    const double sab = (s[4] - n * ma * mb) / (n - 1.0);
    const double var = std::max(0.0, saa - 2.0 * ratio * sab + ratio * ratio * sbb) / (mb * mb);
    out.push_back({ratio, std::sqrt(var / n), reps});
  }
  return out;
}

Estimate estimate_palm_pgfl(const Model& model, MaternOrder order, double t, const PointFunction& v,
                            const PointFunction& region, std::size_t reps, std::uint64_t seed,
                            const McOptions& opts) {
  return estimate_palm_pgfl_batch(model, {PalmQuery{order, t, v, region}}, reps, seed, opts)[0];
}

Expansion expansion_check(const std::vector<double>& v, std::size_t cap) {
  if (v.size() > cap) throw InvariantError("size", "pattern exceeds the expansion size cap");
  Expansion e;
  long double lhs = 1.0L;
  for (double x : v) lhs *= x;
  e.lhs = static_cast<double>(lhs);
  // enumerate subsets explicitly; the sign is (-1)^{|S|}
  const std::size_t n = v.size();
  long double rhs = 0.0L;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    long double term = 1.0L;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) term *= 1.0L - v[i];
    }
    rhs += (std::popcount(mask) % 2 ? -term : term);
  }
  e.rhs = static_cast<double>(rhs);
  return e;
}

namespace {

constexpr std::uint64_t kCountStream = 2, kPlaceStream = 3;

// One RSA path on the circle; returns the accepted count after each
// cumulative arrival count in `counts`.
class CircleRsa {
 public:
  CircleRsa(double length, double radius) : L_(length), r_(radius) {
    cells_ = static_cast<std::size_t>(std::floor(length / radius));
    if (cells_ < 3) cells_ = 0;  // brute force on tiny circles
    width_ = cells_ ? length / static_cast<double>(cells_) : length;
    grid_.assign(cells_ * 2, kEmpty);
  }

  bool offer(double x) {
    if (cells_ == 0) {
      for (double y : all_) {
        if (dist(x, y) < r_) return false;
      }
      all_.push_back(x);
      return true;
    }
    std::size_t c = std::min(static_cast<std::size_t>(x / width_), cells_ - 1);
    for (std::size_t k : {c + cells_ - 1, c, c + 1}) {
      const std::size_t cell = k % cells_;
      for (int s = 0; s < 2; ++s) {
        const double y = grid_[2 * cell + s];
        if (y != kEmpty && dist(x, y) < r_) return false;
      }
    }
    // width < 2r, so a cell never holds more than two centres
    auto& slot = grid_[2 * c] == kEmpty ? grid_[2 * c] : grid_[2 * c + 1];
    if (slot != kEmpty) throw InternalConsistencyError("circle RSA cell overflow");
    slot = x;
    return true;
  }

 private:
  static constexpr double kEmpty = -1.0;
  double dist(double a, double b) const {
    const double d = std::abs(a - b);
    return std::min(d, L_ - d);
  }
  double L_, r_, width_;
  std::size_t cells_;
  std::vector<double> grid_;
  std::vector<double> all_;
};

}  // namespace

RenyiCurve renyi_curve(double length, double lambda, double radius, const std::vector<double>& times,
                       std::size_t reps, std::uint64_t seed, unsigned jobs) {
  check_reps(reps);
  if (!(length > 0.0) || !(radius > 0.0) || !(lambda >= 0.0)) {
    throw InvariantError("argument", "length and radius must be positive, lambda nonnegative");
  }
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && !(times.front() > 0.0))) {
    throw InvariantError("times", "times must be positive and sorted");
  }
  const std::size_t m = times.size();
  const auto sums = run_reps(reps, seed, 2 * m, jobs, [&](std::size_t, std::uint64_t s, std::vector<double>& acc) {
    CounterRng counts(s, kCountStream), place(s, kPlaceStream);
    CircleRsa rsa(length, radius);
    double prev_t = 0.0;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < m; ++i) {
      // arrivals in [prev_t, t_i) come in time order with iid uniform positions
      const double mean = lambda * length * (times[i] - prev_t);
      std::uint64_t n = 0;
      if (mean > 0.0) n = std::poisson_distribution<std::uint64_t>(mean)(counts);
      for (std::uint64_t j = 0; j < n; ++j) {
        double x = place.uniform() * length;
        if (x >= length) x = 0.0;
        if (rsa.offer(x)) ++accepted;
      }
      prev_t = times[i];
      const double density = static_cast<double>(accepted) * radius / length;
      acc[2 * i] += density;
      acc[2 * i + 1] += density * density;
    }
  });
  RenyiCurve c;
  c.times = times;
  for (std::size_t i = 0; i < m; ++i) c.density.push_back(from_sums(sums[2 * i], sums[2 * i + 1], reps));
  return c;
}

Estimate renyi_density(double length, double lambda, double radius, double t_max, std::size_t reps,
                       std::uint64_t seed, unsigned jobs) {
  return renyi_curve(length, lambda, radius, {t_max}, reps, seed, jobs).density[0];
}

Saturation renyi_saturate(double length, double lambda, double radius, double t_start, double change,
                          std::size_t reps, std::uint64_t seed, int max_doublings, unsigned jobs) {
  Saturation s;
  double t = t_start;
  for (int i = 0; i < max_doublings; ++i, t *= 2.0) {
    const auto curve = renyi_curve(length, lambda, radius, {t, 2.0 * t}, reps, seed, jobs);
    s.t = t;
    s.density = curve.density[0];
    s.last_change = std::abs(curve.density[1].mean - curve.density[0].mean);
    if (s.last_change < change) {
      s.reached = true;
      break;
    }
  }
  return s;
}

}  // namespace packinglab
