#include "packinglab/matern.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <ostream>

namespace packinglab {

std::uint32_t ConflictGraph::max_depth() const {
  std::uint32_t m = 0;
  for (auto d : depth) m = std::max(m, d);
  return m;
}

ConflictGraph build_conflict_graph(const TimedPointPattern& pattern, const ConflictRealization& conflicts) {
  ConflictGraph g;
  const std::size_t n = pattern.size();
  g.ids = pattern.ids();
  g.timers = pattern.timers();
  g.parents.resize(n);
  g.children.resize(n);
  for (const auto& [a, b] : conflicts.pairs()) {
    const auto ia = pattern.index_of(a);
    const auto ib = pattern.index_of(b);
    if (!ia || !ib) continue;
    const double ta = g.timers[*ia], tb = g.timers[*ib];
    if (ta == tb) throw InvariantError("distinct_timers", "ids " + std::to_string(a) + " and " + std::to_string(b) + " share a timer");
    const auto early = static_cast<std::uint32_t>(ta < tb ? *ia : *ib);
    const auto late = static_cast<std::uint32_t>(ta < tb ? *ib : *ia);
    g.parents[late].push_back(early);
    g.children[early].push_back(late);
    ++g.edge_count;
  }
  g.order.resize(n);
  std::iota(g.order.begin(), g.order.end(), 0u);
  std::sort(g.order.begin(), g.order.end(), [&](std::uint32_t a, std::uint32_t b) { return g.timers[a] < g.timers[b]; });
  g.depth.assign(n, 0);
  for (std::uint32_t v : g.order) {
    for (std::uint32_t p : g.parents[v]) g.depth[v] = std::max(g.depth[v], g.depth[p] + 1);
  }
  return g;
}

std::vector<std::vector<std::uint32_t>> ancestor_sets(const ConflictGraph& g) {
  std::vector<std::vector<std::uint32_t>> A(g.size());
  std::vector<std::uint32_t> merged;
  for (std::uint32_t v : g.order) {
    auto& out = A[v];
    for (std::uint32_t p : g.parents[v]) {
      merged.clear();
      std::set_union(out.begin(), out.end(), A[p].begin(), A[p].end(), std::back_inserter(merged));
      out.swap(merged);
      auto it = std::lower_bound(out.begin(), out.end(), p);
      if (it == out.end() || *it != p) out.insert(it, p);
    }
  }
  return A;
}

std::vector<std::uint32_t> ancestors_by_search(const ConflictGraph& g, std::uint32_t v) {
  std::vector<std::uint8_t> seen(g.size(), 0);
  std::deque<std::uint32_t> queue(g.parents[v].begin(), g.parents[v].end());
  std::vector<std::uint32_t> out;
  while (!queue.empty()) {
    const std::uint32_t u = queue.front();
    queue.pop_front();
    if (seen[u]) continue;
    seen[u] = 1;
    out.push_back(u);
    for (std::uint32_t p : g.parents[u]) queue.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Flags selection_k(const ConflictGraph& g, int k) {
  if (k < 0) throw InvariantError("order", "k must be >= 0");
  Flags e(g.size(), 1), next(g.size());
  for (int round = 0; round < k; ++round) {
    for (std::size_t v = 0; v < g.size(); ++v) {
      std::uint8_t keep = 1;
      for (std::uint32_t p : g.parents[v]) {
        if (e[p]) {
          keep = 0;
          break;
        }
      }
      next[v] = keep;
    }
    e.swap(next);
  }
  return e;
}

Flags selection_inf_greedy(const ConflictGraph& g) {
  Flags accepted(g.size(), 0);
  for (std::uint32_t v : g.order) {
    bool blocked = false;
    for (std::uint32_t u : g.parents[v]) blocked = blocked || accepted[u];
    for (std::uint32_t u : g.children[v]) blocked = blocked || accepted[u];
    accepted[v] = blocked ? 0 : 1;
  }
  return accepted;
}

Flags selection_inf_recursive(const ConflictGraph& g) {
  constexpr std::uint8_t unknown = 2;
  Flags e(g.size(), unknown);
  std::vector<std::pair<std::uint32_t, std::size_t>> stack;
  for (std::uint32_t root = 0; root < g.size(); ++root) {
    if (e[root] != unknown) continue;
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
      auto& [v, next_parent] = stack.back();
      const auto& ps = g.parents[v];
      // short-circuit: one selected parent decides
      bool decided = false;
      while (next_parent < ps.size()) {
        const std::uint32_t p = ps[next_parent];
        if (e[p] == unknown) break;
        if (e[p] == 1) {
          decided = true;
          break;
        }
        ++next_parent;
      }
      if (decided) {
        e[v] = 0;
        stack.pop_back();
      } else if (next_parent == ps.size()) {
        e[v] = 1;
        stack.pop_back();
      } else {
        stack.emplace_back(ps[next_parent], 0);
      }
    }
  }
  return e;
}

Flags selection_inf(const ConflictGraph& g) {
  Flags greedy = selection_inf_greedy(g);
  Flags recursive = selection_inf_recursive(g);
  if (greedy != recursive) {
    throw InternalConsistencyError("greedy and recursive infinite-order selections disagree");
  }
  return greedy;
}

Flags selection(const ConflictGraph& g, MaternOrder order) {
  return order.infinite ? selection_inf(g) : selection_k(g, order.k);
}

Flags selection_type_I(const ConflictGraph& g) {
  Flags e(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) e[v] = g.parents[v].empty() && g.children[v].empty();
  return e;
}

IdSet ids_of(const ConflictGraph& g, const Flags& flags) {
  IdSet out;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (flags[v]) out.push_back(g.ids[v]);
  std::sort(out.begin(), out.end());
  return out;
}

IdSet matern_type_I(const TimedPointPattern& pattern, const ConflictRealization& conflicts) {
  const auto g = build_conflict_graph(pattern, conflicts);
  return ids_of(g, selection_type_I(g));
}

IdSet matern_k(const TimedPointPattern& pattern, const ConflictRealization& conflicts, int k) {
  if (k < 1) throw InvariantError("order", "k must be >= 1");
  const auto g = build_conflict_graph(pattern, conflicts);
  return ids_of(g, selection_k(g, k));
}

IdSet matern_inf(const TimedPointPattern& pattern, const ConflictRealization& conflicts) {
  const auto g = build_conflict_graph(pattern, conflicts);
  return ids_of(g, selection_inf(g));
}

TimedPointPattern restrict(const TimedPointPattern& pattern, double s, double t) {
  if (!(s >= 0.0) || !(s < t)) throw InvariantError("argument", "restrict needs 0 <= s < t");
  TimedPointPattern out(pattern.dimension(), pattern.window(), std::min(t, pattern.t_max()), pattern.seed());
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const double ti = pattern.timer(i);
    if (ti >= s && ti < t) out.push_back(pattern.id(i), pattern.location(i), ti, pattern.site(i));
  }
  return out;
}

namespace {

IdSet difference(const IdSet& a, const IdSet& b) {
  IdSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

QRPartition partition_QR(const ConflictGraph& g, int k) {
  if (k < 1) throw InvariantError("order", "k must be >= 1");
  // M[j + 1] holds M_j for j = -1..k
  std::vector<IdSet> M(static_cast<std::size_t>(k) + 2);
  Flags e(g.size(), 1);
  M[1] = ids_of(g, e);
  for (int j = 1; j <= k; ++j) {
    e = selection_k(g, j);
    M[static_cast<std::size_t>(j) + 1] = ids_of(g, e);
  }
  auto m = [&](int j) -> const IdSet& { return M[static_cast<std::size_t>(j + 1)]; };
  QRPartition out;
  for (int i = 1; i <= k; ++i) {
    out.Q.push_back(i % 2 == 0 ? difference(m(i - 2), m(i)) : difference(m(i), m(i - 2)));
  }
  out.R = k % 2 == 0 ? difference(m(k), m(k - 1)) : difference(m(k - 1), m(k));

  IdSet all;
  std::size_t total = out.R.size();
  for (const auto& q : out.Q) total += q.size();
  for (const auto& q : out.Q) all.insert(all.end(), q.begin(), q.end());
  all.insert(all.end(), out.R.begin(), out.R.end());
  std::sort(all.begin(), all.end());
  const bool disjoint = std::adjacent_find(all.begin(), all.end()) == all.end();
  if (!disjoint || total != g.size() || all != m(0)) {
    throw InternalConsistencyError("Q/R sets do not partition the pattern");
  }
  return out;
}

QRPartition partition_QR(const TimedPointPattern& pattern, const ConflictRealization& conflicts, int k) {
  return partition_QR(build_conflict_graph(pattern, conflicts), k);
}

SandwichLayers sandwich_layers(const TimedPointPattern& pattern, const ConflictRealization& conflicts,
                               MaternOrder j, double s, double t) {
  if (!(s > 0.0) || !(s < t)) throw InvariantError("argument", "sandwich layers need 0 < s < t");
  if (!j.infinite && j.k < 1) throw InvariantError("order", "k must be >= 1");
  const auto g = build_conflict_graph(pattern, conflicts);
  const Flags before = j.infinite ? selection_inf(g) : selection_k(g, j.k - 1);
  auto in_layer = [&](std::uint32_t v) { return g.timers[v] >= s && g.timers[v] < t; };
  SandwichLayers out;
  for (std::uint32_t v = 0; v < g.size(); ++v) {
    if (!in_layer(v)) continue;
    bool hits_history = false, hits_layer = false;
    auto visit = [&](std::uint32_t u) {
      if (g.timers[u] < s && before[u]) hits_history = true;
      if (in_layer(u)) hits_layer = true;
    };
    for (std::uint32_t u : g.parents[v]) visit(u);
    for (std::uint32_t u : g.children[v]) visit(u);
    if (!hits_history) {
      out.upper.push_back(g.ids[v]);
      if (!hits_layer) out.lower.push_back(g.ids[v]);
    }
  }
  std::sort(out.lower.begin(), out.lower.end());
  std::sort(out.upper.begin(), out.upper.end());
  return out;
}

std::size_t conflicting_pairs_within(const ConflictRealization& conflicts, const IdSet& set) {
  std::size_t n = 0;
  for (const auto& [a, b] : conflicts.pairs()) {
    if (std::binary_search(set.begin(), set.end(), a) && std::binary_search(set.begin(), set.end(), b)) ++n;
  }
  return n;
}

void write_thinning_csv(std::ostream& out, const TimedPointPattern& pattern, const IdSet& kept) {
  out << "id,kept_flag\n";
  for (std::uint32_t id : pattern.ids()) {
    out << id << ',' << (std::binary_search(kept.begin(), kept.end(), id) ? 1 : 0) << '\n';
  }
}

void write_graph_csv(std::ostream& out, const ConflictGraph& g) {
  out << "id_from,id_to\n";
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::uint32_t p : g.parents[v]) edges.emplace_back(g.ids[p], g.ids[v]);
  std::sort(edges.begin(), edges.end());
  for (const auto& [a, b] : edges) out << a << ',' << b << '\n';
}

}  // namespace packinglab
