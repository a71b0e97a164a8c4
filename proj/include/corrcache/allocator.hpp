#pragma once

// Cache allocation across commonness levels for correlation-aware coded
// caching: minimize the summed per-level envelope rates subject to the
// per-user capacity constraint.

#include <string>
#include <vector>

#include "corrcache/closed_form.hpp"
#include "corrcache/library_model.hpp"

namespace corrcache {

enum class AllocationMethod { greedy_marginal, exhaustive };

std::string to_string(AllocationMethod method);

struct AllocationProblem {
  LibraryConfig config;
  std::vector<LevelRateCurve> curves;  // entry l-1 for level l

  static AllocationProblem from_config(const LibraryConfig& config);
};

struct AllocationSolution {
  CacheAllocation alloc;
  double rate = 0.0;
  AllocationMethod method = AllocationMethod::greedy_marginal;
};

/// Greedy over envelope segments, steepest rate decrease per cached bit
/// first. Exact because every level's envelope is convex in t.
AllocationSolution optimize_allocation(const LibraryConfig& config);

/// Brute-force minimum of cacc_rate over the feasible grid
/// t_l in {0, step, 2 step, ..., K}^N. Throws when the grid exceeds
/// `max_points`.
AllocationSolution exhaustive_allocation_oracle(const LibraryConfig& config, double grid_step,
                                                std::size_t max_points = 10'000'000);

}  // namespace corrcache
