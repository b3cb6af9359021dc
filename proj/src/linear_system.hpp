#pragma once

// Linear functional systems over H-transformed test-function states.
//
// A node is a tuple of test functions obtained from fixed base vectors by
// counted H-transforms, plus a kind tag. Its unknown y(t) obeys
//   y'(t) = sum coef * y_target(t),  y(0) = init(kind).
// Nodes are interned by the bit pattern of their values, so transforms that
// land on the same vectors share a node.

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "packinglab/pgfl.hpp"

namespace packinglab::detail {

struct State {
  std::uint8_t kind = 0;
  std::vector<std::vector<std::uint16_t>> counts;  // per component, thinning count per atom
};

class LinearSystem {
 public:
  using Values = std::vector<std::vector<double>>;
  using Emit = std::function<void(double coef, State target)>;
  using Rule = std::function<void(const State&, const Values&, const Emit&)>;

  LinearSystem(const AtomicSystem& sys, std::vector<std::vector<double>> bases, std::vector<double> kind_init,
               Rule rule, std::size_t max_states);

  /// Adds a state, returning its node index.
  std::uint32_t intern(const State& s);

  std::size_t size() const { return nodes_.size(); }
  const Values& values(std::uint32_t node) const { return nodes_[node].values; }
  const State& state(std::uint32_t node) const { return nodes_[node].state; }
  std::size_t component_count() const { return bases_.size(); }

  /// Expands every node reachable from the roots. Throws BudgetError past max_states.
  void close(const std::vector<std::uint32_t>& roots);

  /// Fixed-step RK4 over the closed system with step doubling until the
  /// outputs at every requested time move by less than tol / 2.
  struct Integration {
    std::vector<std::vector<double>> values;  // [output][time]
    double error_estimate = 0.0;
    std::size_t steps = 0;
    std::size_t work = 0;
    std::vector<double> differences;
  };
  Integration integrate(const std::vector<std::uint32_t>& outputs, const std::vector<double>& times, double tol);

  /// Power-series (Picard) evaluation: iterate D is the degree-D partial sum.
  struct Series {
    std::vector<std::vector<double>> values;  // [output][time]
    int depth = 0;
    double error_estimate = 0.0;
    std::size_t work = 0;
    std::vector<double> ratios;
  };
  Series picard(const std::vector<std::uint32_t>& outputs, const std::vector<double>& times, double tol, int max_depth);

  /// Successors of an expanded node.
  const std::vector<std::pair<double, std::uint32_t>>& successors(std::uint32_t node);

  const AtomicSystem& atomic() const { return sys_; }

 private:
  struct Node {
    State state;
    Values values;
    bool expanded = false;
    std::vector<std::pair<double, std::uint32_t>> succ;
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& k) const noexcept;
  };

  void expand(std::uint32_t node);
  void check_budget() const;

  const AtomicSystem& sys_;
  std::vector<std::vector<double>> bases_;
  std::vector<double> kind_init_;
  Rule rule_;
  std::size_t max_states_;
  std::vector<Node> nodes_;
  std::unordered_map<std::vector<std::uint64_t>, std::uint32_t, KeyHash> index_;
};

}  // namespace packinglab::detail
