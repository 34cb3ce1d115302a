#pragma once

#include <span>
#include <vector>

#include "relaycache/delivery.hpp"

namespace relaycache {

struct CacheResult {
  /// Smallest horizon at which every scenario completes with one shared cache.
  int horizon = 0;
  CacheAllocation cache;
  SearchTrace trace;
  /// Summed throughput over scenarios at the returned horizon, in bits.
  double bits = 0.0;
  Solution solution;
};

/// Worst-case delivery time over a scenario set with the cache optimized
/// jointly: the outer search runs on the coupled program with c free and
/// the set counts as complete only when every scenario is.
CacheResult optimize_cache(std::span<const Scenario> scenarios, const SystemConfig& config,
                           const DeliveryOptions& options = {});

/// Greedy fill per relay in descending popularity, ties to the lower file.
CacheAllocation preference_caching(const Popularity& popularity, std::span<const double> file_sizes,
                                   std::span<const double> cache_capacity);

/// Each file gets (1/N) min(C_max, sum V) bits, capped at the whole file.
/// Capacity freed by the cap is left unused.
CacheAllocation uniform_caching(std::span<const double> file_sizes, std::span<const double> cache_capacity);

/// Clips to [0, 1] and rounds fractions down onto a 2^-40 grid, then
/// shaves the largest entry until C1 holds exactly in floating point.
CacheAllocation round_down_cache(const CacheAllocation& cache, std::span<const double> file_sizes,
                                 std::span<const double> cache_capacity);

/// C_max minus cached bits, per relay.
std::vector<double> unused_capacity(const CacheAllocation& cache, std::span<const double> file_sizes,
                                    std::span<const double> cache_capacity);

}  // namespace relaycache
