#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "packinglab/core.hpp"

namespace packinglab {

/// Memory budget in bytes: PACKINGLAB_BUDGET_MB if set, else 2048 MB.
std::size_t memory_budget_bytes();

/// Samples the rain on `window` x [0, t_max). For discrete spaces the window
/// selects the sites it contains. Throws BudgetError when the expected count
/// would not fit the budget.
TimedPointPattern sample_rain(const Model& model, const Box& window, double t_max, std::uint64_t seed);

/// Same, on the whole space (bounding box of the sites when discrete).
TimedPointPattern sample_rain(const Model& model, double t_max, std::uint64_t seed);

/// Smallest box holding the whole space.
Box space_window(const Model& model);

struct ConflictSamplingReport {
  std::size_t pairs_examined = 0;
  bool all_pairs_fallback = false;
  std::string warning;
};

/// Independent Bernoulli(h) per unordered pair, drawn from a counter-based
/// stream keyed by (seed, min id, max id).
ConflictRealization sample_conflicts(const TimedPointPattern& pattern, const Model& model,
                                     std::uint64_t seed, ConflictSamplingReport* report = nullptr);

/// Single pair draw, exposed so tests can replay the keyed stream.
bool conflict_indicator(std::uint64_t seed, std::uint32_t a, std::uint32_t b, double h);

// CSV round trip; floats are written with 17 significant digits.
std::string format_double(double v);
void write_pattern_csv(std::ostream& out, const TimedPointPattern& pattern);
void write_conflicts_csv(std::ostream& out, const ConflictRealization& conflicts);

/// Reads a pattern dump. When a discrete model is given, site indices are
/// recovered from coordinates.
TimedPointPattern read_pattern_csv(std::istream& in, const Box& window, double t_max,
                                   const Model* model = nullptr);
ConflictRealization read_conflicts_csv(std::istream& in);

}  // namespace packinglab
