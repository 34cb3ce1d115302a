#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "relaycache/model.hpp"
#include "relaycache/scenario.hpp"

namespace relaycache {

using Json = nlohmann::json;

// SystemConfig schema (all SI units):
//   num_relays, users_per_relay[], num_files, file_sizes_bits[],
//   num_subcarriers, sc_bandwidth_hz, slot_duration_s,
//   tx_power_source_w | tx_power_source_dbm, tx_power_relay_w | tx_power_relay_dbm,
//   noise_psd_w_per_hz | noise_psd_dbm_per_hz,
//   backhaul_bps (number or list; the last entry repeats),
//   cache_capacity_bits (number or per-relay list), buffer_capacity_bits (same),
//   min_rate_bps, initial_delay_slots (number or per-user list).
Json to_json(const SystemConfig& config);
SystemConfig config_from_json(const Json& j);

Json to_json(const ScenarioParams& params);
ScenarioParams scenario_params_from_json(const Json& j);

Json to_json(const Scenario& scenario, const SystemConfig& config);
Scenario scenario_from_json(const Json& j);

Json to_json(const CacheAllocation& cache);
CacheAllocation cache_from_json(const Json& j);

Json to_json(const DeliveryPlan& plan);
DeliveryPlan plan_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Throws std::runtime_error when the destination cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace relaycache
