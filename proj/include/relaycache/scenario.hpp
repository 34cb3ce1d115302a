#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "relaycache/model.hpp"

namespace relaycache {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct GeometryParams {
  double cell_radius = 750.0;     // m
  double relay_distance = 500.0;  // BS to RN, m
  double coverage_radius = 250.0; // RN coverage, m
  double min_distance = 50.0;     // UE to BS/RN, m
};

enum class LinkKind { BsToRelay, RelayToUser };

/// PL(dB) = a + b log10(d / 1 km). Defaults follow the 3GPP macro + outdoor
/// relay NLOS model; they are configuration, not ground truth.
struct PathLossParams {
  double bs_relay_a = 125.2;
  double bs_relay_b = 36.3;
  double relay_user_a = 145.4;
  double relay_user_b = 37.5;
};

double path_loss_db(double distance_m, LinkKind kind, const PathLossParams& params);
double db_to_linear_gain(double loss_db);

struct Topology {
  double cell_radius = 0.0;
  Point bs;
  std::vector<Point> relays;
  std::vector<Point> users;       // global user order: relay 0 users first
  std::vector<int> association;   // user -> relay
};

struct Popularity {
  std::vector<double> theta;
  /// Throws ConfigError when an entry is negative or the sum is off by more than 1e-9.
  void validate() const;
};

struct ScenarioParams {
  GeometryParams geometry;
  PathLossParams path_loss;
  Popularity popularity;
  int horizon = 64;      // T_max of the sampled channels
  bool fading = true;    // false: g = 1
};

struct Scenario {
  Topology topology;
  std::vector<Request> requests;
  ChannelRealization channels;
  std::uint64_t seed = 0;
};

/// SplitMix64 finalizer and hierarchical seed derivation. Each derived seed
/// depends only on (parent, stream, index), so adding scenarios or streams
/// never changes the existing ones.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream, std::uint64_t index = 0);

namespace stream {
inline constexpr std::uint64_t kTopology = 1;
inline constexpr std::uint64_t kScenario = 2;
inline constexpr std::uint64_t kRequests = 3;
inline constexpr std::uint64_t kFading = 4;
}  // namespace stream

/// Uniform on [0, 1) with 53 random bits; portable across standard libraries.
double uniform01(std::mt19937_64& rng);
/// Unit-mean exponential via inverse CDF.
double unit_exponential(std::mt19937_64& rng);

Topology generate_topology(const SystemConfig& config, const GeometryParams& geometry, std::uint64_t seed);

ChannelRealization sample_channels(const Topology& topology, std::span<const Request> requests, int horizon,
                                   const SystemConfig& config, const ScenarioParams& params, std::uint64_t seed);

std::vector<Request> sample_requests(const Popularity& popularity, const Topology& topology,
                                     const SystemConfig& config, std::uint64_t seed);

/// Topology fixed by the master seed; requests and fading re-sampled per
/// scenario from derive_seed(master, kScenario, omega).
std::vector<Scenario> build_scenarios(int count, const SystemConfig& config, const ScenarioParams& params,
                                      std::uint64_t seed);

/// FNV-1a over the binary contents; used for determinism checks.
std::uint64_t content_hash(const Scenario& scenario);

}  // namespace relaycache
