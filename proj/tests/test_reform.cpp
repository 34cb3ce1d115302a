#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "relaycache/reform.hpp"
#include "support.hpp"

using namespace relaycache;
using testing_support::small_config;
using testing_support::small_scenario;

namespace {

std::map<ConstraintTag, int> tag_counts(const ConvexProgram& p) {
  std::map<ConstraintTag, int> out;
  for (const auto& row : p.rows()) ++out[row.tag];
  return out;
}

// Row counts worked out by hand for a single scenario with a fixed cache,
// adaptive schedule and no rate floor.
std::map<ConstraintTag, int> expected_counts(int R, int F, int M, int relays_with_requests, int T) {
  return {{ConstraintTag::C2, R * F * T},
          {ConstraintTag::C3, 2 * R * F * T},
          {ConstraintTag::C5, M * T},
          {ConstraintTag::C6, R * T},
          {ConstraintTag::C7, F * T},
          {ConstraintTag::C8, 2 * T},
          {ConstraintTag::C9, 2 * R * T},
          {ConstraintTag::C10, R * T},
          {ConstraintTag::C11, relays_with_requests * T},
          {ConstraintTag::C12, T},
          {ConstraintTag::QueueEvolution, 3 * R * T}};
}

}  // namespace

TEST_CASE("rate transform and power recovery invert each other") {
  const auto cfg = small_config();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double mu = u(rng);
    const double p = u(rng) * cfg.tx_power_source;
    const double h = std::pow(10.0, -6.0 - 6.0 * u(rng));
    const double b = transform_rate(mu, p, h, cfg);
    CHECK(b >= 0.0);
    CHECK(recover_power(b, mu, h, cfg) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK(transform_rate(0.0, 1.0, 1e-8, cfg) == 0.0);
  CHECK(recover_power(0.0, 0.0, 1e-8, cfg) == 0.0);
  CHECK_THROWS_AS(recover_power(1.0, 0.0, 1e-8, cfg), RecoveryError);
}

TEST_CASE("perspective is jointly convex along random segments") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x1 = u(rng) + 1e-3, y1 = 4 * u(rng) - 2, x2 = u(rng) + 1e-3, y2 = 4 * u(rng) - 2;
    const double mid = perspective(0.5 * (x1 + x2), 0.5 * (y1 + y2));
    CHECK(mid <= 0.5 * (perspective(x1, y1) + perspective(x2, y2)) * (1 + 1e-12) + 1e-15);
  }
  CHECK(perspective(0.0, 0.0) == 0.0);
  CHECK(perspective(0.0, -1.0) == 0.0);
  CHECK(std::isinf(perspective(0.0, 1.0)));
}

TEST_CASE("perspective fragment reproduces the power summand") {
  const auto cfg = small_config();
  const double h = 3e-9, mu = 0.4, U = 1e4;
  const double p = 0.7 * cfg.tx_power_source;
  const double b = transform_rate(mu, p, h, cfg);
  const auto frag = perspective_fragment(h, cfg.tx_power_source, U, cfg);
  // mu exp(a x / mu) = gamma s with x = b / U; the budget row s - mu / gamma is mu p / P.
  const double s = mu * std::exp(frag.x_scale * (b / U) / mu) / frag.s_scale;
  CHECK((s + frag.mu_coef * mu) == doctest::Approx(mu * p / cfg.tx_power_source).epsilon(1e-9));
}

TEST_CASE("row counts per tag match a hand count") {
  auto cfg = small_config(2, 2, 2, 3);
  for (int T : {1, 3}) {
    const auto sc = small_scenario(cfg, T, 21, {0.5, 0.5});
    const auto cache = CacheAllocation::empty(2, 2);
    InnerOptions io;
    io.horizon = T;
    io.cache = &cache;
    const auto inner = build_inner_program(std::span(&sc, 1), cfg, io);
    CHECK(tag_counts(inner.program) == expected_counts(4, 3, 2, 2, T));
    CHECK(inner.program.num_perspectives() == 2 * 4 * 3 * T);
    CHECK(missing_tags(inner.program, false, false).empty());
  }
}

TEST_CASE("free cache and rate floor add their rows") {
  auto cfg = small_config(2, 1, 3, 2);
  cfg.min_rate = 1000;
  cfg.initial_delay = {1.0};
  const auto sc = small_scenario(cfg, 2, 4, {0.2, 0.3, 0.5});
  InnerOptions io;
  io.horizon = 2;
  const auto inner = build_inner_program(std::span(&sc, 1), cfg, io);
  auto counts = tag_counts(inner.program);
  CHECK(counts[ConstraintTag::C1] == 2);
  CHECK(counts[ConstraintTag::C13] == 2);  // only t = 2 has a positive floor
  CHECK(inner.cache_vars.size() == 6);
  CHECK(missing_tags(inner.program, true, true).empty());
}

TEST_CASE("two copies of a scenario double the shared-cache objective") {
  auto cfg = small_config(1, 2, 2, 2);
  cfg.backhaul = {2e5};
  const auto sc = small_scenario(cfg, 3, 9, {0.6, 0.4});
  InnerOptions io;
  io.horizon = 3;
  const auto one = build_inner_program(std::span(&sc, 1), cfg, io);
  const std::vector<Scenario> two{sc, sc};
  const auto dup = build_inner_program(two, cfg, io);
  CHECK(dup.program.num_variables() == 2 * one.program.num_variables() - 2);
  const Solution s1 = solve(one.program);
  const Solution s2 = solve(dup.program);
  REQUIRE(s1.optimal());
  REQUIRE(s2.optimal());
  CHECK(s2.objective == doctest::Approx(2 * s1.objective).epsilon(1e-6));
}

TEST_CASE("alternating schedule pins hop shares by slot parity") {
  const auto cfg = small_config(1, 1, 1, 2);
  const auto sc = small_scenario(cfg, 2, 1, {1.0});
  const auto cache = CacheAllocation::empty(1, 1);
  InnerOptions io;
  io.horizon = 2;
  io.cache = &cache;
  io.schedule = ScheduleMode::FixedAlternating;
  const auto inner = build_inner_program(std::span(&sc, 1), cfg, io);
  const auto& vars = inner.program.variables();
  const auto& b = inner.blocks[0];
  for (int f = 0; f < 2; ++f) {
    const auto k1 = static_cast<std::size_t>(f) * 2;  // r = 0, t = 1
    const auto k2 = k1 + 1;                           // t = 2
    CHECK(vars[b.mu_r[k1]].upper == 0.0);
    CHECK(vars[b.mu_s[k1]].upper == 1.0);
    CHECK(vars[b.mu_s[k2]].upper == 0.0);
    CHECK(vars[b.mu_r[k2]].upper == 1.0);
  }
  // nothing can be delivered in slot 1 without a cache
  const Solution s = solve(inner.program);
  REQUIRE_MESSAGE(s.optimal(), s.message);
  const auto plan = extract_plan(inner, s.values);
  for (int f = 0; f < 2; ++f) CHECK(plan.rate_relay[plan.link(0, f, 1)] == doctest::Approx(0.0));
}

TEST_CASE("extracted plan passes the independent checker") {
  auto cfg = small_config(2, 2, 3, 3);
  cfg.backhaul = {3e5};
  cfg.buffer_capacity = {4e3, 6e3};
  cfg.min_rate = 2e3;
  cfg.initial_delay = {1.0};
  const auto sc = small_scenario(cfg, 4, 12, {0.5, 0.3, 0.2});
  CacheAllocation cache = CacheAllocation::empty(2, 3);
  cache.at(0, 0) = 0.5;
  cache.at(1, 1) = 0.25;
  InnerOptions io;
  io.horizon = 4;
  io.cache = &cache;
  const auto inner = build_inner_program(std::span(&sc, 1), cfg, io);
  const Solution s = solve(inner.program);
  REQUIRE_MESSAGE(s.optimal(), s.message);
  const auto plan = extract_plan(inner, s.values);
  const auto report = check_feasibility(plan, cache, sc.requests, sc.channels, cfg, 1e-6);
  CHECK_MESSAGE(report.feasible(), report.summary());
  const auto traj = evolve_queues(plan, sc.channels, cfg);
  double delivered = 0;
  for (int r = 0; r < plan.num_requests; ++r) delivered += traj.delivered(r, 4);
  CHECK(delivered == doctest::Approx(inner.to_bits(s.objective)).epsilon(1e-6));
}

TEST_CASE("greedy assignment breaks ties towards the lower request") {
  auto plan = DeliveryPlan::zeros(1, 2, 1, 1);
  plan.sc_share[plan.link(0, 0, 1)] = 0.5;
  plan.sc_share[plan.link(1, 0, 1)] = 0.5;
  auto mask = binary_assignment(plan);
  CHECK(mask[plan.link(0, 0, 1)] == 1);
  CHECK(mask[plan.link(1, 0, 1)] == 0);

  // C6 and C7 both hold after rounding
  auto p2 = DeliveryPlan::zeros(1, 2, 2, 1);
  p2.sc_share[p2.link(0, 0, 1)] = 0.6;
  p2.sc_share[p2.link(0, 1, 1)] = 0.4;
  p2.sc_share[p2.link(1, 0, 1)] = 0.4;
  p2.sc_share[p2.link(1, 1, 1)] = 0.6;
  mask = binary_assignment(p2);
  CHECK(mask[p2.link(0, 0, 1)] == 1);
  CHECK(mask[p2.link(1, 1, 1)] == 1);
  CHECK(mask[p2.link(0, 1, 1)] == 0);
  CHECK(mask[p2.link(1, 0, 1)] == 0);
}

TEST_CASE("enumeration visits every C6/C7 assignment") {
  int count = 0;
  for_each_binary_assignment(2, 2, 1, [&](const std::vector<signed char>&) { ++count; });
  // per slot: empty, four single pairs, two perfect matchings
  CHECK(count == 7);
  count = 0;
  for_each_binary_assignment(2, 2, 2, [&](const std::vector<signed char>&) { ++count; });
  CHECK(count == 49);
}

TEST_CASE("every binary assignment delivers no more than the relaxation") {
  auto cfg = small_config(1, 2, 2, 2);
  cfg.backhaul = {5e5};
  const auto sc = small_scenario(cfg, 1, 6, {0.5, 0.5});
  const auto cache = CacheAllocation::empty(1, 2);
  InnerOptions io;
  io.horizon = 1;
  io.cache = &cache;
  const auto relaxed = build_inner_program(std::span(&sc, 1), cfg, io);
  const Solution rs = solve(relaxed.program);
  REQUIRE(rs.optimal());
  double best = 0;
  for_each_binary_assignment(2, 2, 1, [&](const std::vector<signed char>& mask) {
    InnerOptions o = io;
    o.sc_mask = mask;
    const auto inner = build_inner_program(std::span(&sc, 1), cfg, o);
    const Solution s = solve(inner.program);
    REQUIRE_MESSAGE(s.optimal(), s.message);
    CHECK(s.objective <= rs.objective * (1 + 1e-6) + 1e-9);
    best = std::max(best, s.objective);
  });
  CHECK(best > 0.0);

  const auto rounded = round_sc_assignment(extract_plan(relaxed, rs.values), relaxed.to_bits(rs.objective), sc,
                                           cache, cfg);
  CHECK(rounded.gap_bits >= -1e-6 * relaxed.to_bits(rs.objective));
  CHECK(rounded.rounded_bits <= relaxed.to_bits(best) * (1 + 1e-6));
}
