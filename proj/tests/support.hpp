#pragma once

#include <random>
#include <vector>

#include "relaycache/model.hpp"
#include "relaycache/scenario.hpp"

namespace testing_support {

using namespace relaycache;

// Table-1 radio parameters on a small grid.
inline SystemConfig small_config(int relays = 1, int users = 1, int files = 1, int subcarriers = 1) {
  SystemConfig c;
  c.num_relays = relays;
  c.users_per_relay.assign(static_cast<std::size_t>(relays), users);
  c.num_files = files;
  c.file_sizes.assign(static_cast<std::size_t>(files), 10e3);
  c.num_subcarriers = subcarriers;
  c.sc_bandwidth = 313e3;
  c.slot_duration = 0.02;
  c.tx_power_source = dbm_to_watts(46.0);
  c.tx_power_relay = dbm_to_watts(40.0);
  c.noise_psd = dbm_to_watts(-172.6);
  c.backhaul = {1e9};
  c.cache_capacity.assign(static_cast<std::size_t>(relays), 5e3);
  c.buffer_capacity.assign(static_cast<std::size_t>(relays), 1e9);
  c.min_rate = 0.0;
  c.initial_delay = {0.0};
  return c;
}

inline ChannelRealization flat_channels(int requests, int subcarriers, int horizon, double gain) {
  ChannelRealization ch;
  ch.num_requests = requests;
  ch.num_subcarriers = subcarriers;
  ch.horizon = horizon;
  const auto n = static_cast<std::size_t>(requests) * subcarriers * horizon;
  ch.source.assign(n, gain);
  ch.relay.assign(n, gain);
  return ch;
}

// Random scenario on the small grid with path loss and fading from the generator.
inline Scenario small_scenario(const SystemConfig& config, int horizon, std::uint64_t seed,
                               std::vector<double> theta = {}) {
  ScenarioParams p;
  p.horizon = horizon;
  if (theta.empty()) theta.assign(static_cast<std::size_t>(config.num_files), 1.0 / config.num_files);
  p.popularity.theta = theta;
  return build_scenarios(1, config, p, seed).front();
}

}  // namespace testing_support
