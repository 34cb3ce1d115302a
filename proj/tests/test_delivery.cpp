#include <doctest.h>

#include <bit>
#include <random>

#include "relaycache/delivery.hpp"
#include "support.hpp"

using namespace relaycache;
using testing_support::small_config;
using testing_support::small_scenario;

namespace {

std::vector<int> horizons(const std::vector<Probe>& probes) {
  std::vector<int> out;
  for (const auto& p : probes) out.push_back(p.horizon);
  return out;
}

// Probe whose delivered bits ramp linearly and saturate at t_star.
std::function<Probe(int)> ramp(int t_star, double required) {
  return [=](int t) {
    const double bits = required * std::min(t, t_star) / t_star;
    return Probe{t, bits, is_complete(bits, required, 1e-9), 0};
  };
}

SystemConfig delivery_config() {
  auto cfg = small_config(1, 2, 2, 2);
  cfg.file_sizes = {400e3, 250e3};
  cfg.backhaul = {6e6};
  cfg.buffer_capacity = {150e3};
  cfg.cache_capacity = {100e3};
  return cfg;
}

}  // namespace

TEST_CASE("completion test at the tolerance edge") {
  CHECK(is_complete(1000.0 * (1 - 1e-6), 1000.0, 1e-6));
  CHECK_FALSE(is_complete(1000.0 * (1 - 2e-6), 1000.0, 1e-6));
  CHECK(is_complete(1000.0, 1000.0, 0.0));
  CHECK(is_complete(0.0, 0.0, 1e-6));
}

TEST_CASE("doubling then bisection for an optimum of 13") {
  SearchTrace trace;
  const int t = search_min_horizon(ramp(13, 1e6), 64, 1e6, trace);
  CHECK(t == 13);
  CHECK(horizons(trace.doubling) == std::vector<int>{1, 2, 4, 8, 16});
  CHECK(horizons(trace.bisection) == std::vector<int>{12, 14, 13});
  CHECK(trace.inner_solves == 8);
  CHECK(trace.optimal_horizon == 13);
  REQUIRE_FALSE(trace.intervals.empty());
  CHECK(trace.intervals.front() == std::pair<int, int>{8, 16});
  CHECK(trace.intervals.back() == std::pair<int, int>{12, 13});
  CHECK(trace_monotone(trace, 0.0));
}

TEST_CASE("search agrees with a linear scan on random monotone profiles") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int cap = 1 + static_cast<int>(rng() % 80);
    const int t_star = 1 + static_cast<int>(rng() % 100);
    // random nondecreasing profile reaching the total exactly at t_star
    std::vector<double> bits(101, 1.0);
    double acc = 0;
    for (int t = 1; t < t_star; ++t) {
      acc += std::uniform_real_distribution<double>(0, 1)(rng);
      bits[t] = acc;
    }
    for (int t = 1; t < t_star; ++t) bits[t] = 0.999 * bits[t] / (acc + 1e-12);
    auto probe = [&](int t) { return Probe{t, bits[t], is_complete(bits[t], 1.0, 1e-6), 0}; };
    int scan = -1;
    for (int t = 1; t <= cap; ++t) {
      if (probe(t).complete) {
        scan = t;
        break;
      }
    }
    SearchTrace trace;
    if (scan < 0) {
      CHECK_THROWS_AS(search_min_horizon(probe, cap, 1.0, trace), NotCompletable);
    } else {
      CHECK(search_min_horizon(probe, cap, 1.0, trace) == scan);
      CHECK(trace.inner_solves <= 2 * (std::bit_width(static_cast<unsigned>(scan)) + 1));
    }
  }
}

TEST_CASE("minimum delivery time matches a linear scan of the throughput") {
  const auto cfg = delivery_config();
  const auto sc = small_scenario(cfg, 32, 3, {0.5, 0.5});
  CacheAllocation cache = CacheAllocation::empty(1, 2);
  cache.at(0, 0) = 0.1;
  DeliveryOptions opts;
  opts.max_horizon = 32;

  const DeliveryResult r = min_delivery_time(sc, cache, cfg, opts);
  CHECK_MESSAGE(r.report.feasible(), r.report.summary());
  CHECK(r.horizon > 1);
  CHECK(r.trace.monotone);

  const double required = requested_bits(sc, cfg);
  double previous = 0.0;
  int scan = -1;
  for (int t = 1; t <= r.horizon; ++t) {
    const double bits = throughput(t, sc, cache, cfg, opts).bits;
    CHECK(bits >= previous - 1e-6 * required);
    previous = bits;
    if (scan < 0 && is_complete(bits, required, opts.effective_tol())) scan = t;
  }
  CHECK(scan == r.horizon);

  // the direct feasibility form gives the same answer on either side
  CHECK(completes_directly(r.horizon, sc, cache, cfg, opts));
  CHECK_FALSE(completes_directly(r.horizon - 1, sc, cache, cfg, opts));
}

TEST_CASE("larger caches never slow delivery down") {
  const auto cfg = delivery_config();
  const auto sc = small_scenario(cfg, 32, 5, {0.5, 0.5});
  DeliveryOptions opts;
  opts.max_horizon = 32;
  int last = 1 << 20;
  for (double frac : {0.0, 0.2, 0.4}) {
    CacheAllocation cache = CacheAllocation::empty(1, 2);
    cache.at(0, 0) = frac;
    cache.at(0, 1) = frac * 0.5;
    const int t = min_delivery_time(sc, cache, cfg, opts).horizon;
    CHECK(t <= last);
    last = t;
  }
}

TEST_CASE("an unreachable cap reports not completable") {
  const auto cfg = delivery_config();
  const auto sc = small_scenario(cfg, 32, 3, {0.5, 0.5});
  DeliveryOptions opts;
  opts.max_horizon = 1;
  CHECK_THROWS_AS(min_delivery_time(sc, CacheAllocation::empty(1, 2), cfg, opts), NotCompletable);
}
