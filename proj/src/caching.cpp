#include "relaycache/caching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include <fmt/format.h>

namespace relaycache {

namespace {

void check_sizes(std::span<const double> file_sizes, std::span<const double> cache_capacity) {
  if (file_sizes.empty() || cache_capacity.empty()) throw ConfigError("file sizes and cache capacities must be non-empty");
  for (double v : file_sizes) {
    if (!(v > 0.0)) throw ConfigError(fmt::format("file size must be positive, got {}", v));
  }
  for (double c : cache_capacity) {
    if (!(c >= 0.0)) throw ConfigError(fmt::format("cache capacity must be nonnegative, got {}", c));
  }
}

}  // namespace

CacheAllocation round_down_cache(const CacheAllocation& cache, std::span<const double> file_sizes,
                                 std::span<const double> cache_capacity) {
  constexpr double kGrid = 1099511627776.0;  // 2^40
  constexpr double kStep = 1.0 / kGrid;
  CacheAllocation out = cache;
  for (auto& c : out.fraction) {
    const double clipped = std::isfinite(c) ? std::clamp(c, 0.0, 1.0) : 0.0;
    c = std::floor(clipped * kGrid) / kGrid;
  }
  for (int m = 0; m < out.num_relays; ++m) {
    const double cap = cache_capacity[static_cast<std::size_t>(m)];
    while (out.cached_bits(m, file_sizes) > cap) {
      int worst = 0;
      for (int n = 1; n < out.num_files; ++n) {
        if (out.at(m, n) * file_sizes[static_cast<std::size_t>(n)] >
            out.at(m, worst) * file_sizes[static_cast<std::size_t>(worst)]) {
          worst = n;
        }
      }
      out.at(m, worst) = std::max(0.0, out.at(m, worst) - kStep);
    }
  }
  return out;
}

std::vector<double> unused_capacity(const CacheAllocation& cache, std::span<const double> file_sizes,
                                    std::span<const double> cache_capacity) {
  std::vector<double> out(static_cast<std::size_t>(cache.num_relays));
  for (int m = 0; m < cache.num_relays; ++m) {
    out[static_cast<std::size_t>(m)] = cache_capacity[static_cast<std::size_t>(m)] - cache.cached_bits(m, file_sizes);
  }
  return out;
}

CacheAllocation preference_caching(const Popularity& popularity, std::span<const double> file_sizes,
                                   std::span<const double> cache_capacity) {
  popularity.validate();
  check_sizes(file_sizes, cache_capacity);
  if (popularity.theta.size() != file_sizes.size()) {
    throw DimensionError(fmt::format("popularity has {} entries for {} files", popularity.theta.size(),
                                     file_sizes.size()));
  }
  const int N = static_cast<int>(file_sizes.size());
  const int M = static_cast<int>(cache_capacity.size());
  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return popularity.theta[static_cast<std::size_t>(a)] > popularity.theta[static_cast<std::size_t>(b)];
  });
  CacheAllocation cache = CacheAllocation::empty(M, N);
  for (int m = 0; m < M; ++m) {
    double left = cache_capacity[static_cast<std::size_t>(m)];
    for (int n : order) {
      if (left <= 0.0) break;
      const double v = file_sizes[static_cast<std::size_t>(n)];
      const double take = std::min(v, left);
      cache.at(m, n) = take >= v ? 1.0 : take / v;
      left -= take;
    }
  }
  return round_down_cache(cache, file_sizes, cache_capacity);
}

CacheAllocation uniform_caching(std::span<const double> file_sizes, std::span<const double> cache_capacity) {
  check_sizes(file_sizes, cache_capacity);
  const int N = static_cast<int>(file_sizes.size());
  const int M = static_cast<int>(cache_capacity.size());
  const double total = std::accumulate(file_sizes.begin(), file_sizes.end(), 0.0);
  CacheAllocation cache = CacheAllocation::empty(M, N);
  for (int m = 0; m < M; ++m) {
    const double share = std::min(cache_capacity[static_cast<std::size_t>(m)], total) / N;
    for (int n = 0; n < N; ++n) cache.at(m, n) = std::min(1.0, share / file_sizes[static_cast<std::size_t>(n)]);
  }
  return round_down_cache(cache, file_sizes, cache_capacity);
}

CacheResult optimize_cache(std::span<const Scenario> scenarios, const SystemConfig& config,
                           const DeliveryOptions& options) {
  if (scenarios.empty()) throw std::invalid_argument("optimize_cache needs at least one scenario");
  double required = 0.0;
  int cap = options.max_horizon;
  for (const auto& s : scenarios) {
    validate_requests(s.requests, config);
    required += requested_bits(s, config);
    cap = std::min(cap, s.channels.horizon);
  }
  const double tol = options.effective_tol();

  CacheResult result;
  struct Hit {
    int horizon;
    InnerProgram inner;
    Solution solution;
  };
  std::optional<Hit> best;
  auto probe = [&](int horizon) {
    InnerOptions io;
    io.horizon = horizon;
    io.schedule = options.schedule;
    InnerProgram inner = build_inner_program(scenarios, config, io);
    Solution sol = solve(inner.program, options.solver);
    if (!sol.optimal()) throw SolveFailure(horizon, sol.status, sol.message);
    const double bits = std::min(inner.to_bits(sol.objective), required);
    Probe p{horizon, bits, is_complete(bits, required, tol), sol.iterations};
    if (p.complete && (!best || horizon < best->horizon)) best = Hit{horizon, std::move(inner), std::move(sol)};
    return p;
  };
  result.horizon = search_min_horizon(probe, cap, required, result.trace);
  result.trace.monotone = trace_monotone(result.trace, tol * required);
  result.cache = round_down_cache(extract_cache(best->inner, best->solution.values), config.file_sizes,
                                  config.cache_capacity);
  result.bits = std::min(best->inner.to_bits(best->solution.objective), required);
  result.solution = std::move(best->solution);
  return result;
}

}  // namespace relaycache
