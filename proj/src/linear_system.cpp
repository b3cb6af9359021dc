#include "linear_system.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "packinglab/rain.hpp"

namespace packinglab::detail {

std::size_t LinearSystem::KeyHash::operator()(const std::vector<std::uint64_t>& k) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint64_t w : k) {
    h ^= w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h *= 0x100000001b3ull;
  }
  return static_cast<std::size_t>(h);
}

LinearSystem::LinearSystem(const AtomicSystem& sys, std::vector<std::vector<double>> bases,
                           std::vector<double> kind_init, Rule rule, std::size_t max_states)
    : sys_(sys), bases_(std::move(bases)), kind_init_(std::move(kind_init)), rule_(std::move(rule)),
      max_states_(max_states) {}

std::uint32_t LinearSystem::intern(const State& s) {
  const std::size_t n = sys_.size();
  Values vals(bases_.size(), std::vector<double>(n));
  std::vector<std::uint64_t> key;
  key.reserve(1 + bases_.size() * n);
  key.push_back(s.kind);
  for (std::size_t c = 0; c < bases_.size(); ++c) {
    const auto& counts = s.counts[c];
    for (std::size_t y = 0; y < n; ++y) {
      double v = bases_[c][y];
      for (std::size_t x = 0; x < n && v != 0.0; ++x) {
        if (counts[x] == 0) continue;
        const double keep = 1.0 - sys_.kernel(x, y);
        v *= counts[x] == 1 ? keep : std::pow(keep, counts[x]);
      }
      if (v == 0.0) v = 0.0;  // no negative zero in keys
      vals[c][y] = v;
      key.push_back(std::bit_cast<std::uint64_t>(v));
    }
  }
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  if (nodes_.size() >= max_states_) {
    std::ostringstream os;
    os << "state closure exceeds " << max_states_ << " states; use the Picard method or a coarser model";
    throw BudgetError(os.str());
  }
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{s, std::move(vals), false, {}});
  index_.emplace(std::move(key), id);
  if ((id & 0xFFF) == 0) check_budget();
  return id;
}

void LinearSystem::check_budget() const {
  const std::size_t n = sys_.size();
  const std::size_t per_node = bases_.size() * n * (sizeof(double) * 2 + sizeof(std::uint16_t)) + 96 +
                               bases_.size() * n * 12;
  if (nodes_.size() * per_node > memory_budget_bytes()) {
    throw BudgetError("state closure exceeds the memory budget (PACKINGLAB_BUDGET_MB)");
  }
}

void LinearSystem::expand(std::uint32_t node) {
  if (nodes_[node].expanded) return;
  std::vector<std::pair<double, std::uint32_t>> succ;
  // copy: interning may reallocate nodes_
  const State state = nodes_[node].state;
  const Values values = nodes_[node].values;
  rule_(state, values, [&](double coef, State target) {
    if (coef == 0.0) return;
    succ.emplace_back(coef, intern(target));
  });
  // merge duplicate targets
  std::sort(succ.begin(), succ.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<std::pair<double, std::uint32_t>> merged;
  for (const auto& e : succ) {
    if (!merged.empty() && merged.back().second == e.second) merged.back().first += e.first;
    else merged.push_back(e);
  }
  nodes_[node].succ = std::move(merged);
  nodes_[node].expanded = true;
}

const std::vector<std::pair<double, std::uint32_t>>& LinearSystem::successors(std::uint32_t node) {
  expand(node);
  return nodes_[node].succ;
}

void LinearSystem::close(const std::vector<std::uint32_t>& roots) {
  std::deque<std::uint32_t> queue(roots.begin(), roots.end());
  while (!queue.empty()) {
    const std::uint32_t v = queue.front();
    queue.pop_front();
    if (nodes_[v].expanded) continue;
    expand(v);
    for (const auto& [c, u] : nodes_[v].succ) {
      if (!nodes_[u].expanded) queue.push_back(u);
    }
  }
}

LinearSystem::Integration LinearSystem::integrate(const std::vector<std::uint32_t>& outputs,
                                                  const std::vector<double>& times, double tol) {
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0)) {
    throw InvariantError("time_grid", "times must be non-negative and sorted");
  }
  close(outputs);
  const std::size_t S = nodes_.size();
  // CSR copy of the closed system
  std::vector<std::size_t> row(S + 1, 0);
  std::vector<double> coef;
  std::vector<std::uint32_t> col;
  double rate = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    double r = 0.0;
    for (const auto& [c, u] : nodes_[i].succ) {
      coef.push_back(c);
      col.push_back(u);
      r += std::abs(c);
    }
    rate = std::max(rate, r);
    row[i + 1] = coef.size();
  }
  std::vector<double> y0(S);
  for (std::size_t i = 0; i < S; ++i) y0[i] = kind_init_[nodes_[i].state.kind];

  Integration result;
  const double t_end = times.empty() ? 0.0 : times.back();
  auto apply = [&](const std::vector<double>& y, std::vector<double>& dy) {
    for (std::size_t i = 0; i < S; ++i) {
      double s = 0.0;
      for (std::size_t e = row[i]; e < row[i + 1]; ++e) s += coef[e] * y[col[e]];
      dy[i] = s;
    }
  };
  auto run = [&](std::size_t total_steps, std::size_t& steps_taken) {
    std::vector<std::vector<double>> out(outputs.size(), std::vector<double>(times.size()));
    std::vector<double> y = y0, k1(S), k2(S), k3(S), k4(S), tmp(S);
    double t = 0.0;
    steps_taken = 0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double gap = times[ti] - t;
      if (gap > 0.0) {
        const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(total_steps * gap / t_end)));
        const double h = gap / static_cast<double>(m);
        for (std::size_t step = 0; step < m; ++step) {
          apply(y, k1);
          for (std::size_t i = 0; i < S; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
          apply(tmp, k2);
          for (std::size_t i = 0; i < S; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
          apply(tmp, k3);
          for (std::size_t i = 0; i < S; ++i) tmp[i] = y[i] + h * k3[i];
          apply(tmp, k4);
          for (std::size_t i = 0; i < S; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        steps_taken += m;
        t = times[ti];
      }
      for (std::size_t o = 0; o < outputs.size(); ++o) out[o][ti] = y[outputs[o]];
    }
    return out;
  };

  if (t_end == 0.0) {
    std::size_t dummy = 0;
    result.values = run(1, dummy);
    return result;
  }
  std::size_t N = static_cast<std::size_t>(std::max(16.0, std::ceil(2.0 * rate * t_end)));
  std::size_t taken = 0;
  auto previous = run(N, taken);
  result.work += taken * (coef.size() + S) * 4;
  constexpr std::size_t kMaxSteps = std::size_t{1} << 24;
  while (true) {
    N *= 2;
    auto current = run(N, taken);
    result.work += taken * (coef.size() + S) * 4;
    double diff = 0.0;
    for (std::size_t o = 0; o < outputs.size(); ++o)
      for (std::size_t ti = 0; ti < times.size(); ++ti) diff = std::max(diff, std::abs(current[o][ti] - previous[o][ti]));
    result.differences.push_back(diff);
    if (diff < tol / 2.0) {
      result.values = std::move(current);
      result.error_estimate = diff / 15.0;
      result.steps = taken;
      return result;
    }
    if (N > kMaxSteps) {
      std::ostringstream os;
      os << "RK4 step doubling did not reach tolerance " << tol << " (last change " << diff << ")";
      throw SolverError(os.str(), diff);
    }
    previous = std::move(current);
  }
}

LinearSystem::Series LinearSystem::picard(const std::vector<std::uint32_t>& outputs, const std::vector<double>& times,
                                          double tol, int max_depth) {
  Series result;
  const double t_end = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
  // layers[d] = nodes first reached at depth d; coeff[j][node] = Taylor coefficient of order j
  std::vector<std::vector<std::uint32_t>> layers(1);
  std::vector<int> depth;
  auto note_depth = [&](std::uint32_t node, int d) {
    if (depth.size() <= node) depth.resize(static_cast<std::size_t>(node) + 1, -1);
    if (depth[node] >= 0) return false;
    depth[node] = d;
    return true;
  };
  for (std::uint32_t r : outputs)
    if (note_depth(r, 0)) layers[0].push_back(r);
  std::vector<std::vector<double>> coeff(1);
  auto ensure = [&](std::size_t j) {
    if (coeff.size() <= j) coeff.resize(j + 1);
    coeff[j].resize(nodes_.size(), std::numeric_limits<double>::quiet_NaN());
  };
  ensure(0);
  for (std::uint32_t r : layers[0]) coeff[0][r] = kind_init_[nodes_[r].state.kind];

  result.values.assign(outputs.size(), std::vector<double>(times.size(), 0.0));
  std::vector<double> powers(times.size(), 1.0);
  auto accumulate = [&](int j) {
    double term = 0.0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      for (std::size_t o = 0; o < outputs.size(); ++o) {
        const double inc = coeff[static_cast<std::size_t>(j)][outputs[o]] * powers[ti];
        result.values[o][ti] += inc;
      }
    }
    for (std::size_t o = 0; o < outputs.size(); ++o) {
      term = std::max(term, std::abs(coeff[static_cast<std::size_t>(j)][outputs[o]]) * std::pow(t_end, j));
    }
    for (std::size_t ti = 0; ti < times.size(); ++ti) powers[ti] *= times[ti];
    return term;
  };
  double last_term = accumulate(0);
  double largest = last_term;
  double prev_term = std::numeric_limits<double>::infinity();

  for (int D = 1; D <= max_depth; ++D) {
    // discover depth D
    layers.emplace_back();
    for (std::uint32_t v : layers[static_cast<std::size_t>(D - 1)]) {
      expand(v);
      for (const auto& [c, u] : nodes_[v].succ)
        if (note_depth(u, D)) layers[static_cast<std::size_t>(D)].push_back(u);
    }
    const double bytes = static_cast<double>(nodes_.size()) * static_cast<double>(D + 1) * 8.0;
    if (bytes > static_cast<double>(memory_budget_bytes())) {
      throw BudgetError("Picard coefficient table exceeds the memory budget");
    }
    ensure(0);
    for (std::uint32_t v : layers[static_cast<std::size_t>(D)]) coeff[0][v] = kind_init_[nodes_[v].state.kind];
    // anti-diagonal: order j on layer D - j
    for (int j = 1; j <= D; ++j) {
      ensure(static_cast<std::size_t>(j));
      auto& aj = coeff[static_cast<std::size_t>(j)];
      const auto& prev = coeff[static_cast<std::size_t>(j - 1)];
      for (std::uint32_t v : layers[static_cast<std::size_t>(D - j)]) {
        double s = 0.0;
        for (const auto& [c, u] : nodes_[v].succ) s += c * prev[u];
        aj[v] = s / j;
        result.work += nodes_[v].succ.size();
      }
    }
    const double term = accumulate(D);
    largest = std::max(largest, term);
    result.ratios.push_back(last_term > 0.0 ? term / last_term : 0.0);
    prev_term = last_term;
    last_term = term;
    result.depth = D;
    if (largest * 1e-15 > tol) {
      std::ostringstream os;
      os << "Picard series loses precision: largest term " << largest << " at t=" << t_end
         << " swamps tolerance " << tol << "; use the closure method";
      throw SolverError(os.str(), term);
    }
    if (term < tol * 0.1 && prev_term < tol) {
      result.error_estimate = 2.0 * term;
      return result;
    }
  }
  std::ostringstream os;
  os << "Picard iteration did not converge within depth " << max_depth << " (last increment " << last_term << ")";
  throw SolverError(os.str(), last_term);
}

}  // namespace packinglab::detail
