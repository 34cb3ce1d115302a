#include "relaycache/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace relaycache {

namespace {

std::vector<double> number_or_list(const Json& j, std::size_t repeat) {
  if (j.is_array()) return j.get<std::vector<double>>();
  return std::vector<double>(repeat, j.get<double>());
}

double watts(const Json& j, const char* w_key, const char* dbm_key) {
  if (j.contains(w_key)) return j.at(w_key).get<double>();
  if (j.contains(dbm_key)) return dbm_to_watts(j.at(dbm_key).get<double>());
  throw ConfigError(fmt::format("config needs {} or {}", w_key, dbm_key));
}

template <typename F>
auto field(const Json& j, const char* key, F get) {
  if (!j.contains(key)) throw ConfigError(fmt::format("config is missing {}", key));
  try {
    return get(j.at(key));
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("config field {}: {}", key, e.what()));
  }
}

}  // namespace

Json to_json(const SystemConfig& c) {
  return Json{{"num_relays", c.num_relays},
              {"users_per_relay", c.users_per_relay},
              {"num_files", c.num_files},
              {"file_sizes_bits", c.file_sizes},
              {"num_subcarriers", c.num_subcarriers},
              {"sc_bandwidth_hz", c.sc_bandwidth},
              {"slot_duration_s", c.slot_duration},
              {"tx_power_source_w", c.tx_power_source},
              {"tx_power_relay_w", c.tx_power_relay},
              {"noise_psd_w_per_hz", c.noise_psd},
              {"backhaul_bps", c.backhaul},
              {"cache_capacity_bits", c.cache_capacity},
              {"buffer_capacity_bits", c.buffer_capacity},
              {"min_rate_bps", c.min_rate},
              {"initial_delay_slots", c.initial_delay}};
}

SystemConfig config_from_json(const Json& j) {
  SystemConfig c;
  auto as_int = [](const Json& v) { return v.get<int>(); };
  auto as_double = [](const Json& v) { return v.get<double>(); };
  c.num_relays = field(j, "num_relays", as_int);
  const auto relays = static_cast<std::size_t>(std::max(c.num_relays, 0));
  c.users_per_relay = field(j, "users_per_relay", [&](const Json& v) {
    if (v.is_array()) return v.get<std::vector<int>>();
    return std::vector<int>(relays, v.get<int>());
  });
  c.num_files = field(j, "num_files", as_int);
  c.file_sizes = field(j, "file_sizes_bits",
                       [&](const Json& v) { return number_or_list(v, static_cast<std::size_t>(std::max(c.num_files, 0))); });
  c.num_subcarriers = field(j, "num_subcarriers", as_int);
  c.sc_bandwidth = field(j, "sc_bandwidth_hz", as_double);
  c.slot_duration = field(j, "slot_duration_s", as_double);
  c.tx_power_source = watts(j, "tx_power_source_w", "tx_power_source_dbm");
  c.tx_power_relay = watts(j, "tx_power_relay_w", "tx_power_relay_dbm");
  if (j.contains("noise_psd_w_per_hz")) {
    c.noise_psd = j.at("noise_psd_w_per_hz").get<double>();
  } else {
    c.noise_psd = field(j, "noise_psd_dbm_per_hz", [](const Json& v) { return dbm_to_watts(v.get<double>()); });
  }
  c.backhaul = field(j, "backhaul_bps", [](const Json& v) { return number_or_list(v, 1); });
  c.cache_capacity = field(j, "cache_capacity_bits", [&](const Json& v) { return number_or_list(v, relays); });
  c.buffer_capacity = field(j, "buffer_capacity_bits", [&](const Json& v) { return number_or_list(v, relays); });
  c.min_rate = j.value("min_rate_bps", 0.0);
  if (j.contains("initial_delay_slots")) c.initial_delay = number_or_list(j.at("initial_delay_slots"), 1);
  c.validate();
  return c;
}

Json to_json(const ScenarioParams& p) {
  return Json{{"geometry",
               {{"cell_radius_m", p.geometry.cell_radius},
                {"relay_distance_m", p.geometry.relay_distance},
                {"coverage_radius_m", p.geometry.coverage_radius},
                {"min_distance_m", p.geometry.min_distance}}},
              {"path_loss",
               {{"bs_relay_a_db", p.path_loss.bs_relay_a},
                {"bs_relay_b_db", p.path_loss.bs_relay_b},
                {"relay_user_a_db", p.path_loss.relay_user_a},
                {"relay_user_b_db", p.path_loss.relay_user_b}}},
              {"popularity", p.popularity.theta},
              {"horizon_slots", p.horizon},
              {"fading", p.fading}};
}

ScenarioParams scenario_params_from_json(const Json& j) {
  ScenarioParams p;
  if (j.contains("geometry")) {
    const Json& g = j.at("geometry");
    p.geometry.cell_radius = g.value("cell_radius_m", p.geometry.cell_radius);
    p.geometry.relay_distance = g.value("relay_distance_m", p.geometry.relay_distance);
    p.geometry.coverage_radius = g.value("coverage_radius_m", p.geometry.coverage_radius);
    p.geometry.min_distance = g.value("min_distance_m", p.geometry.min_distance);
  }
  if (j.contains("path_loss")) {
    const Json& l = j.at("path_loss");
    p.path_loss.bs_relay_a = l.value("bs_relay_a_db", p.path_loss.bs_relay_a);
    p.path_loss.bs_relay_b = l.value("bs_relay_b_db", p.path_loss.bs_relay_b);
    p.path_loss.relay_user_a = l.value("relay_user_a_db", p.path_loss.relay_user_a);
    p.path_loss.relay_user_b = l.value("relay_user_b_db", p.path_loss.relay_user_b);
  }
  p.popularity.theta = field(j, "popularity", [](const Json& v) { return v.get<std::vector<double>>(); });
  p.horizon = j.value("horizon_slots", p.horizon);
  p.fading = j.value("fading", p.fading);
  p.popularity.validate();
  return p;
}

Json to_json(const Scenario& s, const SystemConfig& config) {
  Json relays = Json::array(), users = Json::array(), requests = Json::array();
  for (const Point& p : s.topology.relays) relays.push_back({p.x, p.y});
  for (const Point& p : s.topology.users) users.push_back({p.x, p.y});
  for (const Request& q : s.requests) requests.push_back({{"relay", q.relay}, {"user", q.user}, {"file", q.file}});
  return Json{{"format", "relaycache-scenario-1"},
              {"seed", s.seed},
              {"config", to_json(config)},
              {"topology",
               {{"cell_radius_m", s.topology.cell_radius},
                {"bs", {s.topology.bs.x, s.topology.bs.y}},
                {"relays", relays},
                {"users", users},
                {"association", s.topology.association}}},
              {"requests", requests},
              {"channels",
               {{"num_requests", s.channels.num_requests},
                {"num_subcarriers", s.channels.num_subcarriers},
                {"horizon", s.channels.horizon},
                {"layout", "(request * F + subcarrier) * horizon + slot - 1"},
                {"source", s.channels.source},
                {"relay", s.channels.relay}}}};
}

Scenario scenario_from_json(const Json& j) {
  if (j.value("format", std::string{}) != "relaycache-scenario-1") throw ConfigError("not a scenario file");
  Scenario s;
  s.seed = j.at("seed").get<std::uint64_t>();
  const Json& t = j.at("topology");
  s.topology.cell_radius = t.at("cell_radius_m").get<double>();
  s.topology.bs = {t.at("bs")[0].get<double>(), t.at("bs")[1].get<double>()};
  for (const Json& p : t.at("relays")) s.topology.relays.push_back({p[0].get<double>(), p[1].get<double>()});
  for (const Json& p : t.at("users")) s.topology.users.push_back({p[0].get<double>(), p[1].get<double>()});
  s.topology.association = t.at("association").get<std::vector<int>>();
  for (const Json& q : j.at("requests")) {
    s.requests.push_back({q.at("relay").get<int>(), q.at("user").get<int>(), q.at("file").get<int>()});
  }
  const Json& c = j.at("channels");
  s.channels.num_requests = c.at("num_requests").get<int>();
  s.channels.num_subcarriers = c.at("num_subcarriers").get<int>();
  s.channels.horizon = c.at("horizon").get<int>();
  s.channels.source = c.at("source").get<std::vector<double>>();
  s.channels.relay = c.at("relay").get<std::vector<double>>();
  const auto expected = static_cast<std::size_t>(s.channels.num_requests) * s.channels.num_subcarriers * s.channels.horizon;
  if (s.channels.source.size() != expected || s.channels.relay.size() != expected) {
    throw DimensionError(fmt::format("scenario gains have {} / {} entries, expected {}", s.channels.source.size(),
                                     s.channels.relay.size(), expected));
  }
  return s;
}

Json to_json(const CacheAllocation& c) {
  Json rows = Json::array();
  for (int m = 0; m < c.num_relays; ++m) {
    Json row = Json::array();
    for (int n = 0; n < c.num_files; ++n) row.push_back(c.at(m, n));
    rows.push_back(row);
  }
  return Json{{"num_relays", c.num_relays}, {"num_files", c.num_files}, {"fraction", rows}};
}

CacheAllocation cache_from_json(const Json& j) {
  CacheAllocation c = CacheAllocation::empty(j.at("num_relays").get<int>(), j.at("num_files").get<int>());
  const Json& rows = j.at("fraction");
  if (rows.size() != static_cast<std::size_t>(c.num_relays)) throw DimensionError("cache has the wrong number of relays");
  for (int m = 0; m < c.num_relays; ++m) {
    if (rows[static_cast<std::size_t>(m)].size() != static_cast<std::size_t>(c.num_files)) {
      throw DimensionError(fmt::format("cache row {} has the wrong number of files", m));
    }
    for (int n = 0; n < c.num_files; ++n) c.at(m, n) = rows[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)].get<double>();
  }
  return c;
}

Json to_json(const DeliveryPlan& p) {
  return Json{{"horizon", p.horizon},
              {"num_requests", p.num_requests},
              {"num_subcarriers", p.num_subcarriers},
              {"num_relays", p.num_relays},
              {"sc_share", p.sc_share},
              {"hop_share_source", p.share_source},
              {"hop_share_relay", p.share_relay},
              {"rate_source_bits", p.rate_source},
              {"rate_relay_bits", p.rate_relay},
              {"time_split_source", p.split_source},
              {"time_split_relay", p.split_relay},
              {"cache_rate_bps", p.cache_rate}};
}

DeliveryPlan plan_from_json(const Json& j) {
  DeliveryPlan p;
  p.horizon = j.at("horizon").get<int>();
  p.num_requests = j.at("num_requests").get<int>();
  p.num_subcarriers = j.at("num_subcarriers").get<int>();
  p.num_relays = j.at("num_relays").get<int>();
  p.sc_share = j.at("sc_share").get<std::vector<double>>();
  p.share_source = j.at("hop_share_source").get<std::vector<double>>();
  p.share_relay = j.at("hop_share_relay").get<std::vector<double>>();
  p.rate_source = j.at("rate_source_bits").get<std::vector<double>>();
  p.rate_relay = j.at("rate_relay_bits").get<std::vector<double>>();
  p.split_source = j.at("time_split_source").get<std::vector<double>>();
  p.split_relay = j.at("time_split_relay").get<std::vector<double>>();
  p.cache_rate = j.at("cache_rate_bps").get<std::vector<double>>();
  p.check_shape();
  return p;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("error while writing {}", path.string()));
}

}  // namespace relaycache
