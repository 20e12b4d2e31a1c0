#pragma once

#include <cstdint>

#include "wfopt/types.hpp"

namespace wfopt {

struct ConstrainedLhsStats {
  std::size_t expansion_rounds = 0;
  std::size_t total_generated = 0;  // every point drawn, feasible or not
};

// Stratified design over the box: one point per axis bin, uniform placement
// within each bin, independent axis pairing.
SampleBatch standard_lhs(const DesignSpace& space, std::size_t n, std::uint64_t seed);

// Add k points to an existing design so the union stays close to an LHS of
// size |existing|+k: per axis, new points occupy currently-empty bins of the
// refined partition.
SampleBatch expanded_lhs(const SampleBatch& existing, std::size_t k, const DesignSpace& space,
                         std::uint64_t seed);

// Oversampled LHS filtered by the feasibility predicate, expanded by the
// shortfall until n feasible points exist, truncated to the earliest n.
SampleBatch constrained_lhs(const DesignSpace& space, std::size_t n, std::size_t oversample,
                            std::uint64_t seed, ConstrainedLhsStats* stats = nullptr);

inline std::size_t default_oversample(std::size_t n) { return 20 * n; }

constexpr std::size_t kExpansionRoundCap = 1000;

}  // namespace wfopt
