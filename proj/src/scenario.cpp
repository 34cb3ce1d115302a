#include "relaycache/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace relaycache {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double path_loss_db(double distance_m, LinkKind kind, const PathLossParams& params) {
  if (!(distance_m > 0.0)) throw ConfigError(fmt::format("path loss needs a positive distance, got {}", distance_m));
  const bool bs = kind == LinkKind::BsToRelay;
  const double a = bs ? params.bs_relay_a : params.relay_user_a;
  const double b = bs ? params.bs_relay_b : params.relay_user_b;
  return a + b * std::log10(distance_m / 1000.0);
}

double db_to_linear_gain(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

void Popularity::validate() const {
  if (theta.empty()) throw ConfigError("popularity must list at least one file");
  double sum = 0.0;
  for (std::size_t n = 0; n < theta.size(); ++n) {
    if (!(theta[n] >= 0.0)) throw ConfigError(fmt::format("popularity[{}] is negative", n));
    sum += theta[n];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(fmt::format("popularity sums to {:.12g}, not 1", sum));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(parent) ^ stream) + index);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double unit_exponential(std::mt19937_64& rng) { return -std::log1p(-uniform01(rng)); }

Topology generate_topology(const SystemConfig& config, const GeometryParams& g, std::uint64_t seed) {
  if (!(g.min_distance > 0.0) || !(g.coverage_radius >= g.min_distance)) {
    throw ConfigError(fmt::format("coverage radius {} must be at least the minimum distance {}", g.coverage_radius,
                                  g.min_distance));
  }
  if (!(g.relay_distance + g.coverage_radius <= g.cell_radius + 1e-9)) {
    throw ConfigError("relay coverage extends beyond the cell");
  }
  if (!(g.relay_distance - g.coverage_radius >= g.min_distance)) {
    throw ConfigError("relay coverage reaches within the minimum distance of the BS");
  }
  Topology topo;
  topo.cell_radius = g.cell_radius;
  std::mt19937_64 rng(derive_seed(seed, stream::kTopology));
  const int M = config.num_relays;
  for (int m = 0; m < M; ++m) {
    const double angle = 2.0 * std::numbers::pi * m / M;
    topo.relays.push_back({g.relay_distance * std::cos(angle), g.relay_distance * std::sin(angle)});
  }
  const double r0 = g.min_distance * g.min_distance;
  const double r1 = g.coverage_radius * g.coverage_radius;
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < config.users_per_relay[static_cast<std::size_t>(m)]; ++k) {
      // Area-uniform in the annulus [min_distance, coverage_radius] around the relay.
      const double rad = std::sqrt(r0 + (r1 - r0) * uniform01(rng));
      const double phi = 2.0 * std::numbers::pi * uniform01(rng);
      topo.users.push_back({topo.relays[static_cast<std::size_t>(m)].x + rad * std::cos(phi),
                            topo.relays[static_cast<std::size_t>(m)].y + rad * std::sin(phi)});
      topo.association.push_back(m);
    }
  }
  return topo;
}

ChannelRealization sample_channels(const Topology& topology, std::span<const Request> requests, int horizon,
                                   const SystemConfig& config, const ScenarioParams& params, std::uint64_t seed) {
  if (horizon < 1) throw ConfigError("channel horizon must be at least 1");
  ChannelRealization ch;
  ch.num_requests = static_cast<int>(requests.size());
  ch.num_subcarriers = config.num_subcarriers;
  ch.horizon = horizon;
  const auto size = static_cast<std::size_t>(ch.num_requests) * ch.num_subcarriers * horizon;
  ch.source.resize(size);
  ch.relay.resize(size);
  std::mt19937_64 rng(derive_seed(seed, stream::kFading));
  for (int r = 0; r < ch.num_requests; ++r) {
    const Request& q = requests[static_cast<std::size_t>(r)];
    const int user = config.global_user(q.relay, q.user);
    const Point relay = topology.relays.at(static_cast<std::size_t>(q.relay));
    const double gs =
        db_to_linear_gain(path_loss_db(distance(topology.bs, relay), LinkKind::BsToRelay, params.path_loss));
    const double gr = db_to_linear_gain(
        path_loss_db(distance(relay, topology.users.at(static_cast<std::size_t>(user))), LinkKind::RelayToUser,
                     params.path_loss));
    for (int f = 0; f < ch.num_subcarriers; ++f) {
      for (int t = 1; t <= horizon; ++t) {
        const double fs = params.fading ? unit_exponential(rng) : 1.0;
        const double fr = params.fading ? unit_exponential(rng) : 1.0;
        // An exact zero draw has probability 2^-53; keep gains strictly positive.
        ch.source[ch.offset(r, f, t)] = gs * std::max(fs, 1e-300);
        ch.relay[ch.offset(r, f, t)] = gr * std::max(fr, 1e-300);
      }
    }
  }
  return ch;
}

std::vector<Request> sample_requests(const Popularity& popularity, const Topology& topology,
                                     const SystemConfig& config, std::uint64_t seed) {
  popularity.validate();
  if (popularity.theta.size() != static_cast<std::size_t>(config.num_files)) {
    throw ConfigError(fmt::format("popularity has {} entries for {} files", popularity.theta.size(), config.num_files));
  }
  std::mt19937_64 rng(derive_seed(seed, stream::kRequests));
  std::vector<Request> out;
  std::vector<int> next_user(static_cast<std::size_t>(config.num_relays), 0);
  for (int relay : topology.association) {
    const double u = uniform01(rng);
    int file = 0;
    double acc = popularity.theta[0];
    while (u >= acc && file + 1 < config.num_files) acc += popularity.theta[static_cast<std::size_t>(++file)];
    // Rounding in the running sum can leave u past the end; fall back to the
    // last file with positive probability.
    while (popularity.theta[static_cast<std::size_t>(file)] == 0.0 && file > 0) --file;
    out.push_back({relay, next_user[static_cast<std::size_t>(relay)]++, file});
  }
  return out;
}

std::vector<Scenario> build_scenarios(int count, const SystemConfig& config, const ScenarioParams& params,
                                      std::uint64_t seed) {
  if (count < 1) throw ConfigError("scenario count must be at least 1");
  config.validate();
  const Topology topo = generate_topology(config, params.geometry, seed);
  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) {
    Scenario sc;
    sc.seed = derive_seed(seed, stream::kScenario, static_cast<std::uint64_t>(w));
    sc.topology = topo;
    sc.requests = sample_requests(params.popularity, topo, config, sc.seed);
    sc.channels = sample_channels(topo, sc.requests, params.horizon, config, params, sc.seed);
    out.push_back(std::move(sc));
  }
  return out;
}

namespace {

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void value(T v) { bytes(&v, sizeof v); }
  void values(const std::vector<double>& v) {
    value(v.size());
    bytes(v.data(), v.size() * sizeof(double));
  }
};

}  // namespace

std::uint64_t content_hash(const Scenario& sc) {
  Fnv f;
  f.value(sc.seed);
  for (const Point& p : sc.topology.relays) { f.value(p.x); f.value(p.y); }
  for (const Point& p : sc.topology.users) { f.value(p.x); f.value(p.y); }
  for (const Request& q : sc.requests) { f.value(q.relay); f.value(q.user); f.value(q.file); }
  f.value(sc.channels.num_subcarriers);
  f.value(sc.channels.horizon);
  f.values(sc.channels.source);
  f.values(sc.channels.relay);
  return f.h;
}

}  // namespace relaycache
