#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "packinglab/core.hpp"

namespace packinglab {

using IdSet = std::vector<std::uint32_t>;  // sorted ids
using Flags = std::vector<std::uint8_t>;   // one entry per pattern index

/// Directed conflict graph: edge from the earlier to the later point of every
/// conflicting pair. Vertices are pattern indices.
struct ConflictGraph {
  std::vector<std::uint32_t> ids;
  std::vector<double> timers;
  std::vector<std::vector<std::uint32_t>> parents;   // earlier conflicting neighbours
  std::vector<std::vector<std::uint32_t>> children;  // later conflicting neighbours
  std::vector<std::uint32_t> order;                  // indices by increasing timer
  std::vector<std::uint32_t> depth;                  // longest incoming chain length
  std::size_t edge_count = 0;

  std::size_t size() const { return ids.size(); }
  std::uint32_t max_depth() const;
};

/// k >= 0, or the infinite order.
struct MaternOrder {
  int k = 1;
  bool infinite = false;

  static MaternOrder finite(int k) { return {k, false}; }
  static MaternOrder inf() { return {0, true}; }
  std::string label() const { return infinite ? "inf" : std::to_string(k); }
};

/// Conflict pairs whose ids are not both in the pattern are ignored, so a
/// realization sampled on a pattern also serves its restrictions.
ConflictGraph build_conflict_graph(const TimedPointPattern& pattern, const ConflictRealization& conflicts);

/// A(x) for every vertex via the union recursion, sorted vertex indices.
std::vector<std::vector<std::uint32_t>> ancestor_sets(const ConflictGraph& graph);

/// A(v) by reverse breadth-first search; the test oracle for ancestor_sets.
std::vector<std::uint32_t> ancestors_by_search(const ConflictGraph& graph, std::uint32_t v);

/// e_k flags by k synchronous rounds starting from e_0 = 1.
Flags selection_k(const ConflictGraph& graph, int k);

/// e_inf flags. Greedy timer-order acceptance and the memoized ancestor
/// recursion are both run; a mismatch throws InternalConsistencyError.
Flags selection_inf(const ConflictGraph& graph);
Flags selection_inf_greedy(const ConflictGraph& graph);
Flags selection_inf_recursive(const ConflictGraph& graph);

Flags selection(const ConflictGraph& graph, MaternOrder order);
Flags selection_type_I(const ConflictGraph& graph);

IdSet ids_of(const ConflictGraph& graph, const Flags& flags);

IdSet matern_type_I(const TimedPointPattern& pattern, const ConflictRealization& conflicts);
IdSet matern_k(const TimedPointPattern& pattern, const ConflictRealization& conflicts, int k);
IdSet matern_inf(const TimedPointPattern& pattern, const ConflictRealization& conflicts);

/// Points with timers in [s, t); ids preserved.
TimedPointPattern restrict(const TimedPointPattern& pattern, double s, double t);

struct QRPartition {
  std::vector<IdSet> Q;  // Q[0] holds Q_1
  IdSet R;
};

/// Q_1..Q_k and R_k; throws InternalConsistencyError unless they partition the pattern.
QRPartition partition_QR(const ConflictGraph& graph, int k);
QRPartition partition_QR(const TimedPointPattern& pattern, const ConflictRealization& conflicts, int k);

struct SandwichLayers {
  IdSet lower;  // Delta_down
  IdSet upper;  // Delta_up
};

/// Layer bounds for T_{s,t}(M_j). For finite j the conditioning set is
/// T_s(M_{j-1}); for the infinite order it is T_s(M_inf).
SandwichLayers sandwich_layers(const TimedPointPattern& pattern, const ConflictRealization& conflicts,
                               MaternOrder j, double s, double t);

/// Number of conflicting pairs with both ends in the set.
std::size_t conflicting_pairs_within(const ConflictRealization& conflicts, const IdSet& set);

void write_thinning_csv(std::ostream& out, const TimedPointPattern& pattern, const IdSet& kept);
void write_graph_csv(std::ostream& out, const ConflictGraph& graph);

}  // namespace packinglab
