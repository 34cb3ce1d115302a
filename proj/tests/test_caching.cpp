#include <doctest.h>

#include <numeric>

#include "relaycache/caching.hpp"
#include "support.hpp"

using namespace relaycache;
using testing_support::small_config;
using testing_support::small_scenario;

namespace {

SystemConfig caching_config() {
  auto cfg = small_config(1, 2, 3, 2);
  cfg.file_sizes = {300e3, 200e3, 200e3};
  cfg.backhaul = {5e6};
  cfg.buffer_capacity = {150e3};
  cfg.cache_capacity = {200e3};
  return cfg;
}

double weighted_hits(const CacheAllocation& c, const std::vector<double>& theta, const std::vector<double>& sizes) {
  double s = 0;
  for (std::size_t n = 0; n < theta.size(); ++n) s += theta[n] * c.at(0, static_cast<int>(n)) * sizes[n];
  return s;
}

}  // namespace

TEST_CASE("preference caching fills the most popular file first") {
  const std::vector<double> sizes(5, 500e6);
  const Popularity pop{{0.57, 0.2, 0.11, 0.07, 0.05}};
  auto c = preference_caching(pop, sizes, std::vector<double>{500e6});
  CHECK(c.fraction == std::vector<double>{1, 0, 0, 0, 0});
  c = preference_caching(pop, sizes, std::vector<double>{750e6});
  CHECK(c.fraction == std::vector<double>{1, 0.5, 0, 0, 0});
  // equal popularity goes to the lower index
  c = preference_caching(Popularity{{0.25, 0.5, 0.25}}, std::vector<double>(3, 10.0), std::vector<double>{15.0});
  CHECK(c.fraction == std::vector<double>{0.5, 1, 0});
}

TEST_CASE("with equal sizes the preference cache maximizes popular bits held") {
  const std::vector<double> sizes(3, 100.0);
  const std::vector<std::vector<double>> thetas{{0.5, 0.3, 0.2}, {0.1, 0.7, 0.2}, {0.34, 0.33, 0.33}};
  for (const auto& theta : thetas) {
    for (double cap : {50.0, 125.0, 210.0, 300.0}) {
      const auto c = preference_caching(Popularity{theta}, sizes, std::vector<double>{cap});
      // grid oracle over fractions in steps of 1/20
      double best = 0;
      for (int a = 0; a <= 20; ++a) {
        for (int b = 0; b <= 20; ++b) {
          for (int d = 0; d <= 20; ++d) {
            if ((a + b + d) * 5.0 > cap + 1e-9) continue;
            best = std::max(best, 5.0 * (theta[0] * a + theta[1] * b + theta[2] * d));
          }
        }
      }
      CHECK(weighted_hits(c, theta, sizes) >= best - 1e-9);
      CHECK(c.cached_bits(0, sizes) <= cap + 1e-9);
    }
  }
}

TEST_CASE("uniform caching splits the capacity evenly") {
  const std::vector<double> sizes(5, 500e6);
  auto c = uniform_caching(sizes, std::vector<double>{100e6});
  for (double f : c.fraction) CHECK(f == doctest::Approx(0.04).epsilon(1e-9));
  // a small file is capped and the freed room is not handed on
  c = uniform_caching(std::vector<double>{10.0, 100.0}, std::vector<double>{60.0});
  CHECK(c.at(0, 0) == 1.0);
  CHECK(c.at(0, 1) == doctest::Approx(0.3).epsilon(1e-9));
  const auto left = unused_capacity(c, std::vector<double>{10.0, 100.0}, std::vector<double>{60.0});
  CHECK(left[0] == doctest::Approx(20.0).epsilon(1e-9));
  // capacity beyond the library is clipped to it before the split
  c = uniform_caching(std::vector<double>{10.0, 20.0}, std::vector<double>{100.0});
  CHECK(c.at(0, 0) == 1.0);
  CHECK(c.at(0, 1) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("rounding down keeps the capacity exactly") {
  const std::vector<double> sizes{1.0 / 3.0, 7.0, 1e6};
  CacheAllocation c = CacheAllocation::empty(1, 3);
  c.fraction = {1.0000001, 0.123456789, 2.5e-6};
  const double cap = c.cached_bits(0, sizes) * (1 - 1e-12);
  const auto r = round_down_cache(c, sizes, std::vector<double>{cap});
  CHECK(r.cached_bits(0, sizes) <= cap);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.fraction[i] >= 0.0);
    CHECK(r.fraction[i] <= 1.0);
    CHECK(r.fraction[i] <= c.fraction[i]);
  }
}

TEST_CASE("single-scenario joint cache reproduces its own delivery time") {
  const auto cfg = caching_config();
  const std::vector<Scenario> set{small_scenario(cfg, 32, 2, {0.5, 0.3, 0.2})};
  DeliveryOptions opts;
  opts.max_horizon = 32;
  const CacheResult joint = optimize_cache(set, cfg, opts);
  CHECK(check_cache(joint.cache, cfg).feasible());
  const DeliveryResult fixed = min_delivery_time(set[0], joint.cache, cfg, opts);
  CHECK(fixed.horizon == joint.horizon);

  const Popularity pop{{0.5, 0.3, 0.2}};
  const int pref = min_delivery_time(set[0], preference_caching(pop, cfg.file_sizes, cfg.cache_capacity), cfg, opts)
                       .horizon;
  const int unif = min_delivery_time(set[0], uniform_caching(cfg.file_sizes, cfg.cache_capacity), cfg, opts).horizon;
  CHECK(joint.horizon <= pref);
  CHECK(joint.horizon <= unif);
}

TEST_CASE("scenario order and duplicates do not change the joint optimum") {
  const auto cfg = caching_config();
  const auto a = small_scenario(cfg, 32, 2, {0.5, 0.3, 0.2});
  const auto b = small_scenario(cfg, 32, 8, {0.5, 0.3, 0.2});
  DeliveryOptions opts;
  opts.max_horizon = 32;
  const std::vector<Scenario> ab{a, b}, ba{b, a}, aa{a, a}, just_a{a};
  const int t_ab = optimize_cache(ab, cfg, opts).horizon;
  CHECK(optimize_cache(ba, cfg, opts).horizon == t_ab);
  CHECK(optimize_cache(aa, cfg, opts).horizon == optimize_cache(just_a, cfg, opts).horizon);
  CHECK(t_ab >= optimize_cache(just_a, cfg, opts).horizon);
}
