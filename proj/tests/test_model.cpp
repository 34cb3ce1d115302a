#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include "relaycache/model.hpp"
#include "support.hpp"

using namespace relaycache;
using testing_support::flat_channels;
using testing_support::small_config;

namespace {

using Key = std::tuple<int, int, int>;  // tag, request-or-relay, slot

std::set<Key> keys_for(const FeasibilityReport& report, std::initializer_list<ConstraintTag> tags) {
  std::set<Key> out;
  for (const auto& v : report.violations) {
    if (std::find(tags.begin(), tags.end(), v.tag) != tags.end()) {
      out.emplace(static_cast<int>(v.tag), v.index[1], v.index[3]);
    }
  }
  return out;
}

// Straight re-derivation of the queue constraints from per-slot increments,
// without the library's trajectory.
std::set<Key> reference_queue_violations(const DeliveryPlan& p, const CacheAllocation& cache,
                                         const std::vector<Request>& req, const SystemConfig& cfg, double tol) {
  std::set<Key> out;
  const double bt = tol * cfg.total_file_size();
  const int T = p.horizon;
  const int R = p.num_requests;
  std::vector<std::vector<double>> S(R, std::vector<double>(T + 1)), D = S, Cc = S;
  for (int r = 0; r < R; ++r) {
    for (int t = 1; t <= T; ++t) {
      double s = 0, d = 0;
      for (int f = 0; f < p.num_subcarriers; ++f) {
        s += p.rate_source[p.link(r, f, t)];
        d += p.rate_relay[p.link(r, f, t)];
      }
      S[r][t] = S[r][t - 1] + s;
      D[r][t] = D[r][t - 1] + d;
      Cc[r][t] = Cc[r][t - 1] + p.cache_rate[p.request_slot(r, t)] * cfg.slot_duration;
    }
  }
  for (int r = 0; r < R; ++r) {
    const double v = cfg.file_sizes[req[r].file];
    for (int t = 1; t <= T; ++t) {
      if (D[r][t] > S[r][t] + Cc[r][t] + bt || D[r][t] > v + bt) out.emplace(8, r, t);
      if (Cc[r][t] > cache.at(req[r].relay, req[r].file) * v + bt) out.emplace(9, r, t);
      const double floor = cfg.min_rate * cfg.slot_duration * std::max(t - cfg.initial_delay[0], 0.0);
      if (D[r][t] < floor - bt) out.emplace(12, r, t);
    }
  }
  for (int t = 1; t <= T; ++t) {
    for (int m = 0; m < cfg.num_relays; ++m) {
      double load = 0;
      for (int r = 0; r < R; ++r) {
        if (req[r].relay == m) load += S[r][t] + Cc[r][t - 1] - D[r][t - 1];
      }
      if (load > cfg.buffer_capacity[m] + bt) out.emplace(10, m, t);
    }
    double fetched = 0;
    for (int r = 0; r < R; ++r) fetched += S[r][t] - S[r][t - 1];
    if (fetched > cfg.backhaul_at(t) * cfg.slot_duration + bt) out.emplace(11, -1, t);
  }
  return out;
}

}  // namespace

TEST_CASE("zero plan yields a zero trajectory") {
  const auto cfg = small_config(1, 2, 2, 3);
  const auto plan = DeliveryPlan::zeros(4, 2, 3, 1);
  const auto traj = evolve_queues(plan, flat_channels(2, 3, 4, 1e-10), cfg);
  for (double v : traj.source) CHECK(v == 0.0);
  for (double v : traj.relay) CHECK(v == 0.0);
  for (double v : traj.cache) CHECK(v == 0.0);
}

TEST_CASE("cumulative source queue with 100 bits per slot") {
  const auto cfg = small_config();
  auto plan = DeliveryPlan::zeros(2, 1, 1, 1);
  plan.rate_source[plan.link(0, 0, 1)] = 100;
  plan.rate_source[plan.link(0, 0, 2)] = 100;
  const auto traj = evolve_queues(plan, flat_channels(1, 1, 2, 1e-10), cfg);
  CHECK(traj.source[traj.at(0, 0)] == 0.0);
  CHECK(traj.source[traj.at(0, 1)] == 100.0);
  CHECK(traj.source[traj.at(0, 2)] == 200.0);
}

TEST_CASE("random increments match a running-sum oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1000);
  const auto cfg = small_config(1, 3, 1, 2);
  auto plan = DeliveryPlan::zeros(7, 3, 2, 1);
  for (auto& x : plan.rate_source) x = u(rng);
  for (auto& x : plan.rate_relay) x = u(rng);
  for (auto& x : plan.cache_rate) x = u(rng);
  const auto traj = evolve_queues(plan, flat_channels(3, 2, 7, 1e-10), cfg);
  for (int r = 0; r < 3; ++r) {
    double s = 0, d = 0, c = 0;
    for (int t = 1; t <= 7; ++t) {
      s += plan.rate_source[plan.link(r, 0, t)] + plan.rate_source[plan.link(r, 1, t)];
      d += plan.rate_relay[plan.link(r, 0, t)] + plan.rate_relay[plan.link(r, 1, t)];
      c += plan.cache_rate[plan.request_slot(r, t)] * cfg.slot_duration;
      CHECK(traj.source[traj.at(r, t)] == doctest::Approx(s).epsilon(1e-12));
      CHECK(traj.relay[traj.at(r, t)] == doctest::Approx(d).epsilon(1e-12));
      CHECK(traj.cache[traj.at(r, t)] == doctest::Approx(c).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero plan is feasible without a rate floor") {
  auto cfg = small_config(2, 1, 2, 2);
  cfg.min_rate = 0;
  const std::vector<Request> req{{0, 0, 0}, {1, 0, 1}};
  const auto plan = [] {
    auto p = DeliveryPlan::zeros(3, 2, 2, 2);
    std::fill(p.split_source.begin(), p.split_source.end(), 0.5);
    std::fill(p.split_relay.begin(), p.split_relay.end(), 0.5);
    return p;
  }();
  const auto report = check_feasibility(plan, CacheAllocation::empty(2, 2), req, flat_channels(2, 2, 3, 1e-10), cfg);
  CHECK_MESSAGE(report.feasible(), report.summary());
}

TEST_CASE("one bit over the backhaul gives a single C12 violation") {
  auto cfg = small_config();
  cfg.backhaul = {1000.0};  // 20 bits per slot
  cfg.buffer_capacity = {1e9};
  cfg.file_sizes = {1e6};
  const std::vector<Request> req{{0, 0, 0}};
  auto plan = DeliveryPlan::zeros(1, 1, 1, 1);
  plan.split_source[0] = 1.0;
  plan.split_relay[0] = 0.0;
  plan.sc_share[0] = plan.share_source[0] = 1.0;
  plan.rate_source[0] = 21.0;
  const auto report = check_feasibility(plan, CacheAllocation::empty(1, 1), req, flat_channels(1, 1, 1, 1.0), cfg,
                                        1e-15);
  REQUIRE_MESSAGE(report.violations.size() == 1, report.summary());
  CHECK(report.violations[0].tag == ConstraintTag::C12);
  CHECK(report.violations[0].slack == doctest::Approx(-1.0));
}

TEST_CASE("completion time examples") {
  const auto cfg = small_config(1, 2, 2);
  const std::vector<Request> req{{0, 0, 0}, {0, 1, 1}};
  auto plan = DeliveryPlan::zeros(8, 2, 1, 1);
  // request 0 finishes at slot 3, request 1 at slot 5
  for (int t = 1; t <= 3; ++t) plan.rate_relay[plan.link(0, 0, t)] = cfg.file_sizes[0] / 3;
  for (int t = 1; t <= 5; ++t) plan.rate_relay[plan.link(1, 0, t)] = cfg.file_sizes[1] / 5;
  auto traj = evolve_queues(plan, flat_channels(2, 1, 8, 1.0), cfg);
  CHECK(completion_time(traj, req, cfg, 1e-6) == 5);

  plan.rate_relay[plan.link(1, 0, 5)] = 0;
  traj = evolve_queues(plan, flat_channels(2, 1, 8, 1.0), cfg);
  CHECK_FALSE(completion_time(traj, req, cfg, 1e-6).has_value());

  plan.rate_relay[plan.link(1, 0, 7)] = cfg.file_sizes[1] / 5;
  traj = evolve_queues(plan, flat_channels(2, 1, 8, 1.0), cfg);
  CHECK(completion_time(traj, req, cfg, 1e-6) == 7);
}

TEST_CASE("queue constraint checks agree with an independent checker") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> nr(1, 3), nf(1, 4), nt(1, 10);
    const int R = nr(rng), F = nf(rng), T = nt(rng);
    auto cfg = small_config(2, 3, 2, F);
    cfg.file_sizes = {3000, 2000};
    cfg.buffer_capacity = {2500, 4000};
    cfg.backhaul = {1e5};
    cfg.min_rate = 5000;
    cfg.initial_delay = {1.5};
    std::vector<Request> req;
    for (int r = 0; r < R; ++r) req.push_back({r % 2, r / 2, static_cast<int>(rng() % 2)});
    CacheAllocation cache = CacheAllocation::empty(2, 2);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& c : cache.fraction) c = 0.4 * u(rng);
    auto plan = DeliveryPlan::zeros(T, R, F, 2);
    for (auto& x : plan.rate_source) x = 300 * u(rng);
    for (auto& x : plan.rate_relay) x = 350 * u(rng);
    for (auto& x : plan.cache_rate) x = 6000 * u(rng);
    const double tol = 1e-9;
    const auto report = check_feasibility(plan, cache, req, flat_channels(R, F, T, 1.0), cfg, tol);
    const auto got = keys_for(report, {ConstraintTag::C9, ConstraintTag::C10, ConstraintTag::C11, ConstraintTag::C12,
                                       ConstraintTag::C13});
    CHECK(got == reference_queue_violations(plan, cache, req, cfg, tol));
  }
}

TEST_CASE("shape and config errors") {
  auto plan = DeliveryPlan::zeros(2, 1, 1, 1);
  plan.rate_source.pop_back();
  CHECK_THROWS_AS(plan.check_shape(), DimensionError);
  auto cfg = small_config();
  cfg.file_sizes = {-1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config(1, 1);
  const std::vector<Request> dup{{0, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(validate_requests(dup, cfg), ConfigError);
}
