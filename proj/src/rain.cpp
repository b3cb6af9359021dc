#include "packinglab/rain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "packinglab/rng.hpp"

namespace packinglab {

std::size_t memory_budget_bytes() {
  if (const char* env = std::getenv("PACKINGLAB_BUDGET_MB")) {
    char* end = nullptr;
    const double mb = std::strtod(env, &end);
    if (end != env && mb > 0.0) return static_cast<std::size_t>(mb * 1024.0 * 1024.0);
  }
  return std::size_t{2048} * 1024 * 1024;
}

Box space_window(const Model& model) {
  if (!model.space.is_discrete()) return model.space.box().bounds;
  const auto& s = model.space.sites();
  Box b{std::vector<double>(s.dimension, 0.0), std::vector<double>(s.dimension, 0.0)};
  if (s.count() == 0) return b;
  for (std::size_t a = 0; a < s.dimension; ++a) {
    double lo = s.site(0)[a], hi = lo;
    for (std::size_t i = 1; i < s.count(); ++i) {
      lo = std::min(lo, s.site(i)[a]);
      hi = std::max(hi, s.site(i)[a]);
    }
    b.lower[a] = lo;
    b.upper[a] = std::nextafter(hi, std::numeric_limits<double>::infinity());
  }
  return b;
}

namespace {

constexpr std::uint64_t kRainStream = 1;

void check_budget(double expected_points, std::size_t dimension) {
  const double bytes_per_point = 8.0 * static_cast<double>(dimension) + 8.0 + 4.0 + 8.0;
  // allow for Poisson fluctuation above the mean
  const double bound = (expected_points + 6.0 * std::sqrt(expected_points) + 16.0) * bytes_per_point;
  const double budget = static_cast<double>(memory_budget_bytes());
  if (bound > budget) {
    std::ostringstream os;
    os << "expected " << expected_points << " points needs about " << bound / (1024.0 * 1024.0)
       << " MB, budget is " << budget / (1024.0 * 1024.0) << " MB";
    throw BudgetError(os.str());
  }
}

std::uint32_t draw_count(CounterRng& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> pois(mean);
  const auto n = pois(rng);
  if (n > std::numeric_limits<std::uint32_t>::max()) throw BudgetError("point count overflows 32-bit ids");
  return static_cast<std::uint32_t>(n);
}

// Ties are measure-zero; if one shows up, nudge the later-sampled point.
void break_ties(TimedPointPattern& p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return p.timer(a) < p.timer(b) || (p.timer(a) == p.timer(b) && a < b);
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (p.timer(order[i]) == p.timer(order[i - 1])) {
        const std::size_t later = std::max(order[i], order[i - 1]);
        p.set_timer(later, std::nextafter(p.timer(later), std::numeric_limits<double>::infinity()));
        p.note_tie();
        changed = true;
      }
    }
  }
}

}  // namespace

TimedPointPattern sample_rain(const Model& model, const Box& window, double t_max, std::uint64_t seed) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvariantError("t_max", "t_max must be positive and finite");
  const std::size_t d = model.space.dimension();
  if (window.dimension() != d) throw InvariantError("dimension", "window dimension mismatch");
  TimedPointPattern pattern(d, window, t_max, seed);
  CounterRng rng(seed, kRainStream);
  std::uint32_t next_id = 0;
  auto timer = [&] {
    double t = rng.uniform() * t_max;
    return t < t_max ? t : std::nextafter(t_max, 0.0);
  };

  if (const auto* atomic = std::get_if<Atomic>(&model.measure)) {
    const auto& sites = model.space.sites();
    double expected = 0.0;
    for (std::size_t i = 0; i < sites.count(); ++i) {
      if (window.contains(sites.site(i))) expected += atomic->weights[i] * t_max;
    }
    check_budget(expected, d);
    for (std::size_t i = 0; i < sites.count(); ++i) {
      if (!window.contains(sites.site(i))) continue;
      const std::uint32_t n = draw_count(rng, atomic->weights[i] * t_max);
      for (std::uint32_t j = 0; j < n; ++j) {
        pattern.push_back(next_id++, sites.site(i), timer(), static_cast<std::int64_t>(i));
      }
    }
  } else {
    // collect (box, density) pieces intersected with the window
    std::vector<std::pair<Box, double>> pieces;
    const Box& dom = model.space.box().bounds;
    auto clip = [&](const Box& b) -> std::optional<Box> {
      Box c = b;
      for (std::size_t a = 0; a < d; ++a) {
        c.lower[a] = std::max(b.lower[a], window.lower[a]);
        c.upper[a] = std::min(b.upper[a], window.upper[a]);
        if (!(c.upper[a] > c.lower[a])) return std::nullopt;
      }
      return c;
    };
    if (const auto* hom = std::get_if<Homogeneous>(&model.measure)) {
      if (auto c = clip(dom)) pieces.emplace_back(*c, hom->density);
    } else {
      const auto& grid = std::get<PiecewiseGrid>(model.measure);
      for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        if (auto b = clip(grid.cell_box(dom, c))) pieces.emplace_back(*b, grid.densities[c]);
      }
    }
    double expected = 0.0;
    for (const auto& [b, rho] : pieces) expected += rho * b.volume() * t_max;
    check_budget(expected, d);
    std::vector<double> loc(d);
    for (const auto& [b, rho] : pieces) {
      const std::uint32_t n = draw_count(rng, rho * b.volume() * t_max);
      for (std::uint32_t j = 0; j < n; ++j) {
        for (std::size_t a = 0; a < d; ++a) {
          loc[a] = b.lower[a] + rng.uniform() * b.side(a);
          if (loc[a] >= b.upper[a]) loc[a] = std::nextafter(b.upper[a], b.lower[a]);
        }
        pattern.push_back(next_id++, loc, timer());
      }
    }
  }
  break_ties(pattern);
  return pattern;
}

TimedPointPattern sample_rain(const Model& model, double t_max, std::uint64_t seed) {
  return sample_rain(model, space_window(model), t_max, seed);
}

bool conflict_indicator(std::uint64_t seed, std::uint32_t a, std::uint32_t b, double h) {
  if (h <= 0.0) return false;
  if (h >= 1.0) return true;
  return keyed_uniform(seed, 0xC0Fu, std::min(a, b), std::max(a, b)) < h;
}

ConflictRealization sample_conflicts(const TimedPointPattern& pattern, const Model& model,
                                     std::uint64_t seed, ConflictSamplingReport* report) {
  ConflictRealization out;
  ConflictSamplingReport local;
  ConflictSamplingReport& rep = report ? *report : local;
  const std::size_t n = pattern.size();
  if (n < 2 || model.kernel.shape == KernelShape::Zero) return out;

  auto consider = [&](std::size_t i, std::size_t j) {
    ++rep.pairs_examined;
    const double h = model.conflict(pattern.location(i), pattern.site(i), pattern.location(j), pattern.site(j));
    if (conflict_indicator(seed, pattern.id(i), pattern.id(j), h)) out.add(pattern.id(i), pattern.id(j));
  };

  if (model.kernel.shape == KernelShape::SiteMatrix) {
    // bucket points by site, visit only site pairs with h > 0
    const std::size_t ns = model.kernel.table_size;
    std::vector<std::vector<std::size_t>> by_site(ns);
    for (std::size_t i = 0; i < n; ++i) by_site[static_cast<std::size_t>(pattern.site(i))].push_back(i);
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t u = s; u < ns; ++u) {
        if (model.kernel.table[s * ns + u] <= 0.0) continue;
        for (std::size_t a = 0; a < by_site[s].size(); ++a) {
          for (std::size_t b = (s == u ? a + 1 : 0); b < by_site[u].size(); ++b) consider(by_site[s][a], by_site[u][b]);
        }
      }
    }
    return out;
  }

  const auto range = model.kernel.interaction_range();
  const std::size_t d = pattern.dimension();
  const Box& win = pattern.window();
  if (!range || *range <= 0.0 || d > 6) {
    rep.all_pairs_fallback = true;
    rep.warning = "all-pairs conflict enumeration: O(n^2) = " + std::to_string(n * (n - 1) / 2) + " pairs";
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) consider(i, j);
    return out;
  }

  // uniform grid hash with cell side >= range
  const bool periodic = model.space.is_periodic();
  const Box& extent = periodic ? model.space.box().bounds : win;
  std::vector<std::int64_t> cells(d);
  std::vector<double> width(d);
  for (std::size_t a = 0; a < d; ++a) {
    const double side = extent.side(a);
    std::int64_t c = static_cast<std::int64_t>(std::floor(side / *range));
    c = std::clamp<std::int64_t>(c, 1, 1 << 20);
    cells[a] = c;
    width[a] = side / static_cast<double>(c);
  }
  auto cell_of = [&](std::size_t i, std::size_t a) {
    auto c = static_cast<std::int64_t>(std::floor((pattern.location(i)[a] - extent.lower[a]) / width[a]));
    return std::clamp<std::int64_t>(c, 0, cells[a] - 1);
  };
  auto flat = [&](const std::vector<std::int64_t>& c) {
    std::int64_t f = 0;
    for (std::size_t a = 0; a < d; ++a) f = f * cells[a] + c[a];
    return f;
  };
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;
  std::vector<std::int64_t> home(n);
  std::vector<std::int64_t> c(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) c[a] = cell_of(i, a);
    home[i] = flat(c);
    buckets[home[i]].push_back(i);
  }
  std::size_t offsets = 1;
  for (std::size_t a = 0; a < d; ++a) offsets *= 3;
  std::vector<std::int64_t> neighbours;
  std::vector<std::int64_t> nc(d);
  // visit buckets in key order so the work counter is scheduling-independent
  std::map<std::int64_t, const std::vector<std::size_t>*> ordered;
  for (const auto& [key, members] : buckets) ordered.emplace(key, &members);
  for (const auto& [key, members] : ordered) {
    std::int64_t rest = key;
    for (std::size_t a = d; a-- > 0;) {
      c[a] = rest % cells[a];
      rest /= cells[a];
    }
    neighbours.clear();
    for (std::size_t o = 0; o < offsets; ++o) {
      std::size_t f = o;
      bool valid = true;
      for (std::size_t a = 0; a < d; ++a) {
        const std::int64_t delta = static_cast<std::int64_t>(f % 3) - 1;
        f /= 3;
        std::int64_t v = c[a] + delta;
        if (periodic) v = (v % cells[a] + cells[a]) % cells[a];
        else if (v < 0 || v >= cells[a]) valid = false;
        nc[a] = v;
      }
      if (valid) neighbours.push_back(flat(nc));
    }
    std::sort(neighbours.begin(), neighbours.end());
    neighbours.erase(std::unique(neighbours.begin(), neighbours.end()), neighbours.end());
    for (std::int64_t nb : neighbours) {
      if (nb < key) continue;  // each bucket pair once
      auto it = buckets.find(nb);
      if (it == buckets.end()) continue;
      for (std::size_t a = 0; a < members->size(); ++a) {
        const std::size_t i = (*members)[a];
        const std::size_t start = nb == key ? a + 1 : 0;
        for (std::size_t b = start; b < it->second.size(); ++b) consider(i, it->second[b]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvariantError("csv", "bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_pattern_csv(std::ostream& out, const TimedPointPattern& pattern) {
  out << "id";
  for (std::size_t a = 0; a < pattern.dimension(); ++a) out << ",x" << a;
  out << ",timer\n";
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    out << pattern.id(i);
    for (double x : pattern.location(i)) out << ',' << format_double(x);
    out << ',' << format_double(pattern.timer(i)) << '\n';
  }
}

void write_conflicts_csv(std::ostream& out, const ConflictRealization& conflicts) {
  out << "id_a,id_b\n";
  for (const auto& [a, b] : conflicts.pairs()) out << a << ',' << b << '\n';
}

TimedPointPattern read_pattern_csv(std::istream& in, const Box& window, double t_max, const Model* model) {
  std::string line;
  if (!std::getline(in, line)) throw InvariantError("csv", "missing header");
  strip_cr(line);
  const auto header = split(line);
  if (header.size() < 3 || header.front() != "id" || header.back() != "timer") {
    throw InvariantError("csv", "unexpected pattern header");
  }
  const std::size_t d = header.size() - 2;
  TimedPointPattern p(d, window, t_max, 0);
  std::vector<double> loc(d);
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != d + 2) throw InvariantError("csv", "row width mismatch");
    for (std::size_t a = 0; a < d; ++a) loc[a] = parse_double(f[a + 1]);
    std::int64_t site = -1;
    if (model && model->space.is_discrete()) {
      auto s = model->space.find_site(loc);
      if (!s) throw InvariantError("csv", "location is not a site of the model");
      site = static_cast<std::int64_t>(*s);
    }
    p.push_back(static_cast<std::uint32_t>(std::stoul(f[0])), loc, parse_double(f[d + 1]), site);
  }
  return p;
}

ConflictRealization read_conflicts_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvariantError("csv", "missing header");
  strip_cr(line);
  if (line != "id_a,id_b") throw InvariantError("csv", "unexpected conflict header");
  ConflictRealization c;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 2) throw InvariantError("csv", "row width mismatch");
    c.add(static_cast<std::uint32_t>(std::stoul(f[0])), static_cast<std::uint32_t>(std::stoul(f[1])));
  }
  return c;
}

}  // namespace packinglab
