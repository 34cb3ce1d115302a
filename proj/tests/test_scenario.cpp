#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "relaycache/scenario.hpp"
#include "support.hpp"

using namespace relaycache;

TEST_CASE("path loss at 1 km equals the intercept and grows by the slope per decade") {
  const PathLossParams p;
  CHECK(path_loss_db(1000.0, LinkKind::BsToRelay, p) == doctest::Approx(125.2));
  CHECK(path_loss_db(1000.0, LinkKind::RelayToUser, p) == doctest::Approx(145.4));
  CHECK(path_loss_db(100.0, LinkKind::BsToRelay, p) == doctest::Approx(125.2 - 36.3));
  CHECK(path_loss_db(100.0, LinkKind::RelayToUser, p) == doctest::Approx(145.4 - 37.5));
  CHECK(db_to_linear_gain(30.0) == doctest::Approx(1e-3));
}

TEST_CASE("unit exponential passes a Kolmogorov-Smirnov test") {
  std::mt19937_64 rng(derive_seed(99, stream::kFading));
  const int n = 20000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = unit_exponential(rng);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = 1.0 - std::exp(-xs[i]);
    d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  // 1% critical value of the one-sample KS statistic
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));
  double mean = 0;
  for (double x : xs) mean += x;
  CHECK(mean / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("topology respects distances and association") {
  const auto cfg = testing_support::small_config(3, 4, 2, 2);
  const GeometryParams g;
  const auto topo = generate_topology(cfg, g, 5);
  REQUIRE(topo.relays.size() == 3);
  REQUIRE(topo.users.size() == 12);
  for (const auto& r : topo.relays) CHECK(distance(r, topo.bs) == doctest::Approx(g.relay_distance));
  for (std::size_t k = 0; k < topo.users.size(); ++k) {
    const auto& relay = topo.relays[static_cast<std::size_t>(topo.association[k])];
    CHECK(distance(topo.users[k], relay) <= g.coverage_radius + 1e-9);
    CHECK(distance(topo.users[k], relay) >= g.min_distance - 1e-9);
    CHECK(distance(topo.users[k], topo.bs) >= g.min_distance - 1e-9);
    CHECK(topo.association[k] == static_cast<int>(k / 4));
  }
}

TEST_CASE("same seed gives identical scenarios, different seeds differ") {
  const auto cfg = testing_support::small_config(2, 2, 3, 4);
  ScenarioParams p;
  p.horizon = 16;
  p.popularity.theta = {0.5, 0.3, 0.2};
  const auto a = build_scenarios(3, cfg, p, 42);
  const auto b = build_scenarios(3, cfg, p, 42);
  const auto c = build_scenarios(3, cfg, p, 43);
  for (int i = 0; i < 3; ++i) CHECK(content_hash(a[i]) == content_hash(b[i]));
  CHECK(content_hash(a[0]) != content_hash(c[0]));
  CHECK(content_hash(a[0]) != content_hash(a[1]));
  // more scenarios never change the earlier ones
  const auto longer = build_scenarios(5, cfg, p, 42);
  for (int i = 0; i < 3; ++i) CHECK(content_hash(longer[i]) == content_hash(a[i]));
}

TEST_CASE("request frequencies follow the popularity") {
  auto cfg = testing_support::small_config(4, 50, 4, 1);
  Popularity pop{{0.57, 0.2, 0.16, 0.07}};
  const auto topo = generate_topology(cfg, GeometryParams{}, 3);
  std::vector<int> counts(4, 0);
  int total = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    for (const auto& r : sample_requests(pop, topo, cfg, derive_seed(8, stream::kRequests, s))) {
      ++counts[static_cast<std::size_t>(r.file)];
      ++total;
    }
  }
  REQUIRE(total == 100 * 200);
  for (int n = 0; n < 4; ++n) {
    const double p = pop.theta[static_cast<std::size_t>(n)];
    const double sd = std::sqrt(p * (1 - p) / total);
    CHECK(std::abs(counts[static_cast<std::size_t>(n)] / static_cast<double>(total) - p) < 4.5 * sd);
  }
}

TEST_CASE("channel gains are positive and scale with path loss") {
  const auto cfg = testing_support::small_config(1, 1, 1, 2);
  ScenarioParams p;
  p.horizon = 4;
  p.fading = false;
  p.popularity.theta = {1.0};
  const auto s = build_scenarios(1, cfg, p, 17).front();
  const auto& ch = s.channels;
  const double d_sr = distance(s.topology.bs, s.topology.relays[0]);
  const double expected = db_to_linear_gain(path_loss_db(d_sr, LinkKind::BsToRelay, p.path_loss));
  for (int t = 1; t <= 4; ++t) {
    for (int f = 0; f < 2; ++f) {
      CHECK(ch.h_source(0, f, t) == doctest::Approx(expected));
      CHECK(ch.h_relay(0, f, t) > 0.0);
    }
  }
}

TEST_CASE("invalid popularity is rejected") {
  CHECK_THROWS_AS((Popularity{{0.5, 0.6}}).validate(), ConfigError);
  CHECK_THROWS_AS((Popularity{{1.2, -0.2}}).validate(), ConfigError);
  CHECK_NOTHROW((Popularity{{0.25, 0.75}}).validate());
}
