#include "relaycache/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace relaycache {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void check_size(std::size_t actual, std::size_t expected, const char* name) {
  if (actual != expected) {
    throw DimensionError(fmt::format("{} has {} entries, expected {}", name, actual, expected));
  }
}

}  // namespace

int SystemConfig::total_users() const {
  return std::accumulate(users_per_relay.begin(), users_per_relay.end(), 0);
}

double SystemConfig::total_file_size() const {
  return std::accumulate(file_sizes.begin(), file_sizes.end(), 0.0);
}

double SystemConfig::backhaul_at(int t) const {
  if (backhaul.empty()) return 0.0;
  const auto i = static_cast<std::size_t>(std::max(t, 1) - 1);
  return i < backhaul.size() ? backhaul[i] : backhaul.back();
}

double SystemConfig::delay_for_user(int global_user) const {
  if (initial_delay.empty()) return 0.0;
  if (initial_delay.size() == 1) return initial_delay[0];
  return initial_delay.at(static_cast<std::size_t>(global_user));
}

int SystemConfig::global_user(int relay, int user) const {
  int g = 0;
  for (int m = 0; m < relay; ++m) g += users_per_relay[static_cast<std::size_t>(m)];
  return g + user;
}

void SystemConfig::validate() const {
  require(num_relays > 0, "num_relays must be positive");
  require(users_per_relay.size() == static_cast<std::size_t>(num_relays),
          fmt::format("users_per_relay needs {} entries", num_relays));
  for (std::size_t m = 0; m < users_per_relay.size(); ++m) {
    require(users_per_relay[m] >= 0, fmt::format("users_per_relay[{}] is negative", m));
  }
  require(total_users() > 0, "there must be at least one user");
  require(num_files > 0, "num_files must be positive");
  require(file_sizes.size() == static_cast<std::size_t>(num_files),
          fmt::format("file_sizes needs {} entries", num_files));
  for (std::size_t n = 0; n < file_sizes.size(); ++n) {
    require(positive(file_sizes[n]), fmt::format("file_sizes[{}] must be positive", n));
  }
  require(num_subcarriers > 0, "num_subcarriers must be positive");
  require(positive(sc_bandwidth), "sc_bandwidth must be positive");
  require(positive(slot_duration), "slot_duration must be positive");
  require(positive(tx_power_source), "tx_power_source must be positive");
  require(positive(tx_power_relay), "tx_power_relay must be positive");
  require(positive(noise_psd), "noise_psd must be positive");
  require(!backhaul.empty(), "backhaul_capacity must not be empty");
  for (std::size_t t = 0; t < backhaul.size(); ++t) {
    require(positive(backhaul[t]), fmt::format("backhaul_capacity[{}] must be positive", t));
  }
  require(cache_capacity.size() == static_cast<std::size_t>(num_relays),
          fmt::format("cache_capacity needs {} entries", num_relays));
  require(buffer_capacity.size() == static_cast<std::size_t>(num_relays),
          fmt::format("buffer_capacity needs {} entries", num_relays));
  for (int m = 0; m < num_relays; ++m) {
    require(positive(cache_capacity[static_cast<std::size_t>(m)]),
            fmt::format("cache_capacity[{}] must be positive", m));
    require(positive(buffer_capacity[static_cast<std::size_t>(m)]),
            fmt::format("buffer_capacity[{}] must be positive", m));
  }
  require(std::isfinite(min_rate) && min_rate >= 0.0, "min_rate must be nonnegative");
  require(initial_delay.empty() || initial_delay.size() == 1 ||
              initial_delay.size() == static_cast<std::size_t>(total_users()),
          fmt::format("initial_delay needs 1 or {} entries", total_users()));
  for (std::size_t k = 0; k < initial_delay.size(); ++k) {
    require(std::isfinite(initial_delay[k]) && initial_delay[k] >= 0.0,
            fmt::format("initial_delay[{}] must be nonnegative", k));
  }
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void validate_requests(std::span<const Request> requests, const SystemConfig& config) {
  std::set<int> seen;
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const Request& q = requests[r];
    require(q.relay >= 0 && q.relay < config.num_relays, fmt::format("request {} has relay {} out of range", r, q.relay));
    require(q.user >= 0 && q.user < config.users_per_relay[static_cast<std::size_t>(q.relay)],
            fmt::format("request {} has user {} out of range for relay {}", r, q.user, q.relay));
    require(q.file >= 0 && q.file < config.num_files, fmt::format("request {} has file {} out of range", r, q.file));
    require(seen.insert(config.global_user(q.relay, q.user)).second,
            fmt::format("request {} duplicates user {} of relay {}", r, q.user, q.relay));
  }
}

CacheAllocation CacheAllocation::empty(int relays, int files) {
  CacheAllocation c;
  c.num_relays = relays;
  c.num_files = files;
  c.fraction.assign(static_cast<std::size_t>(relays * files), 0.0);
  return c;
}

double CacheAllocation::cached_bits(int m, std::span<const double> sizes) const {
  double total = 0.0;
  for (int n = 0; n < num_files; ++n) total += at(m, n) * sizes[static_cast<std::size_t>(n)];
  return total;
}

DeliveryPlan DeliveryPlan::zeros(int horizon, int requests, int subcarriers, int relays) {
  DeliveryPlan p;
  p.horizon = horizon;
  p.num_requests = requests;
  p.num_subcarriers = subcarriers;
  p.num_relays = relays;
  const auto links = static_cast<std::size_t>(requests) * subcarriers * horizon;
  for (auto* v : {&p.sc_share, &p.share_source, &p.share_relay, &p.rate_source, &p.rate_relay}) {
    v->assign(links, 0.0);
  }
  p.split_source.assign(static_cast<std::size_t>(relays) * horizon, 0.0);
  p.split_relay.assign(static_cast<std::size_t>(relays) * horizon, 1.0);
  p.cache_rate.assign(static_cast<std::size_t>(requests) * horizon, 0.0);
  return p;
}

void DeliveryPlan::check_shape() const {
  if (horizon < 0 || num_requests < 0 || num_subcarriers < 0 || num_relays < 0) {
    throw DimensionError("plan dimensions must be nonnegative");
  }
  const auto links = static_cast<std::size_t>(num_requests) * num_subcarriers * horizon;
  check_size(sc_share.size(), links, "sc_share");
  check_size(share_source.size(), links, "hop_share_source");
  check_size(share_relay.size(), links, "hop_share_relay");
  check_size(rate_source.size(), links, "rate_source");
  check_size(rate_relay.size(), links, "rate_relay");
  check_size(split_source.size(), static_cast<std::size_t>(num_relays) * horizon, "time_split_source");
  check_size(split_relay.size(), static_cast<std::size_t>(num_relays) * horizon, "time_split_relay");
  check_size(cache_rate.size(), static_cast<std::size_t>(num_requests) * horizon, "cache_rate");
}

double QueueTrajectory::total_delivered(int t) const {
  double total = 0.0;
  for (int r = 0; r < num_requests; ++r) total += delivered(r, t);
  return total;
}

QueueTrajectory evolve_queues(const DeliveryPlan& plan, const ChannelRealization& channels,
                              const SystemConfig& config) {
  plan.check_shape();
  if (plan.horizon > channels.horizon) {
    throw DimensionError(fmt::format("plan horizon {} exceeds channel horizon {}", plan.horizon, channels.horizon));
  }
  if (plan.num_requests != channels.num_requests) {
    throw DimensionError(fmt::format("plan has {} requests but channels have {}", plan.num_requests,
                                     channels.num_requests));
  }
  if (plan.num_subcarriers != channels.num_subcarriers) {
    throw DimensionError(fmt::format("plan has {} subcarriers but channels have {}", plan.num_subcarriers,
                                     channels.num_subcarriers));
  }
  QueueTrajectory q;
  q.horizon = plan.horizon;
  q.num_requests = plan.num_requests;
  const auto size = static_cast<std::size_t>(plan.num_requests) * (plan.horizon + 1);
  q.source.assign(size, 0.0);
  q.relay.assign(size, 0.0);
  q.cache.assign(size, 0.0);
  for (int r = 0; r < plan.num_requests; ++r) {
    for (int t = 1; t <= plan.horizon; ++t) {
      double s = 0.0, d = 0.0;
      for (int f = 0; f < plan.num_subcarriers; ++f) {
        s += plan.rate_source[plan.link(r, f, t)];
        d += plan.rate_relay[plan.link(r, f, t)];
      }
      q.source[q.at(r, t)] = q.source[q.at(r, t - 1)] + s;
      q.relay[q.at(r, t)] = q.relay[q.at(r, t - 1)] + d;
      q.cache[q.at(r, t)] = q.cache[q.at(r, t - 1)] + config.slot_duration * plan.cache_rate[plan.request_slot(r, t)];
    }
  }
  return q;
}

std::string FeasibilityReport::summary(std::size_t max_lines) const {
  if (violations.empty()) return "feasible";
  std::string out = fmt::format("{} violation(s)", violations.size());
  for (std::size_t i = 0; i < violations.size() && i < max_lines; ++i) {
    const auto& v = violations[i];
    out += fmt::format("\n  {} [{},{},{}] slack {:.6g}: {}", to_string(v.tag), v.index[1], v.index[2], v.index[3],
                       v.slack, v.what);
  }
  if (violations.size() > max_lines) out += fmt::format("\n  ... {} more", violations.size() - max_lines);
  return out;
}

FeasibilityReport check_cache(const CacheAllocation& cache, const SystemConfig& config, double tol) {
  FeasibilityReport report;
  if (cache.num_relays != config.num_relays || cache.num_files != config.num_files) {
    throw DimensionError(fmt::format("cache is {}x{}, config expects {}x{}", cache.num_relays, cache.num_files,
                                     config.num_relays, config.num_files));
  }
  check_size(cache.fraction.size(), static_cast<std::size_t>(cache.num_relays * cache.num_files), "cache fractions");
  for (int m = 0; m < cache.num_relays; ++m) {
    for (int n = 0; n < cache.num_files; ++n) {
      const double c = cache.at(m, n);
      if (!(c >= -tol) || !(c <= 1.0 + tol)) {
        report.violations.push_back({ConstraintTag::C1, {-1, m, n, -1}, std::min(c, 1.0 - c),
                                     "cached fraction outside [0, 1]"});
      }
    }
    const double cap = config.cache_capacity[static_cast<std::size_t>(m)];
    const double slack = cap - cache.cached_bits(m, config.file_sizes);
    if (!(slack >= -tol * cap)) {
      report.violations.push_back({ConstraintTag::C1, {-1, m, -1, -1}, slack, "cache capacity exceeded"});
    }
  }
  return report;
}

FeasibilityReport check_feasibility(const DeliveryPlan& plan, const CacheAllocation& cache,
                                    std::span<const Request> requests, const ChannelRealization& channels,
                                    const SystemConfig& config, double tol) {
  if (requests.size() != static_cast<std::size_t>(plan.num_requests)) {
    throw DimensionError(fmt::format("plan has {} requests, request list has {}", plan.num_requests, requests.size()));
  }
  if (plan.num_relays != config.num_relays) {
    throw DimensionError(fmt::format("plan has {} relays, config has {}", plan.num_relays, config.num_relays));
  }
  const QueueTrajectory q = evolve_queues(plan, channels, config);
  FeasibilityReport report = check_cache(cache, config, tol);
  auto& out = report.violations;

  const int T = plan.horizon;
  const int R = plan.num_requests;
  const int F = plan.num_subcarriers;
  const double bit_tol = tol * config.total_file_size();
  const double w = config.sc_bandwidth;
  const double delta = config.slot_duration;
  auto flag = [&](bool ok, ConstraintTag tag, IndexTuple idx, double slack, const char* what) {
    if (!ok) out.push_back({tag, idx, slack, what});
  };

  for (int r = 0; r < R; ++r) {
    const int m = requests[static_cast<std::size_t>(r)].relay;
    for (int t = 1; t <= T; ++t) {
      const double es = plan.split_source[plan.relay_slot(m, t)];
      const double er = plan.split_relay[plan.relay_slot(m, t)];
      double row = 0.0;
      for (int f = 0; f < F; ++f) {
        const auto k = plan.link(r, f, t);
        const IndexTuple idx{-1, r, f, t};
        const double mu = plan.sc_share[k], ms = plan.share_source[k], mr = plan.share_relay[k];
        row += mu;
        flag(std::abs(mu - ms - mr) <= tol, ConstraintTag::C2, idx, -std::abs(mu - ms - mr), "share split mismatch");
        flag(ms >= -tol && mr >= -tol, ConstraintTag::C3, idx, std::min(ms, mr), "negative hop share");
        flag(ms <= es + tol, ConstraintTag::C3, idx, es - ms, "source hop share above time split");
        flag(mr <= er + tol, ConstraintTag::C3, idx, er - mr, "relay hop share above time split");
        flag(mu >= -tol && mu <= 1.0 + tol, ConstraintTag::C4, idx, std::min(mu, 1.0 - mu), "share outside [0, 1]");
        const double bs = plan.rate_source[k], br = plan.rate_relay[k];
        flag(bs >= -bit_tol && br >= -bit_tol, ConstraintTag::QueueEvolution, idx, std::min(bs, br), "negative rate");
      }
      flag(row <= 1.0 + tol, ConstraintTag::C6, {-1, r, -1, t}, 1.0 - row, "request holds more than one subcarrier");
      const double bc = plan.cache_rate[plan.request_slot(r, t)];
      flag(bc * delta >= -bit_tol, ConstraintTag::QueueEvolution, {-1, r, -1, t}, bc * delta, "negative cache rate");
    }
  }

  for (int m = 0; m < config.num_relays; ++m) {
    for (int t = 1; t <= T; ++t) {
      const double es = plan.split_source[plan.relay_slot(m, t)];
      const double er = plan.split_relay[plan.relay_slot(m, t)];
      flag(std::abs(es + er - 1.0) <= tol && es >= -tol && er >= -tol, ConstraintTag::C5, {-1, m, -1, t},
           -std::abs(es + er - 1.0), "time splits do not sum to one");
    }
  }

  for (int t = 1; t <= T; ++t) {
    for (int f = 0; f < F; ++f) {
      double col = 0.0;
      for (int r = 0; r < R; ++r) col += plan.sc_share[plan.link(r, f, t)];
      flag(col <= 1.0 + tol, ConstraintTag::C7, {-1, -1, f, t}, 1.0 - col, "subcarrier assigned more than once");
    }
    // C8 with powers recovered from the rate variables.
    const double budgets[2] = {config.tx_power_source, config.tx_power_relay};
    for (int hop = 0; hop < 2; ++hop) {
      double used = 0.0;
      for (int r = 0; r < R; ++r) {
        for (int f = 0; f < F; ++f) {
          const auto k = plan.link(r, f, t);
          const double mu = hop == 0 ? plan.share_source[k] : plan.share_relay[k];
          const double b = std::max(hop == 0 ? plan.rate_source[k] : plan.rate_relay[k], 0.0);
          const double h = hop == 0 ? channels.h_source(r, f, t) : channels.h_relay(r, f, t);
          if (b <= 0.0) continue;
          if (!(mu > 0.0)) {
            used = kInfinity;
            continue;
          }
          used += mu * config.noise_psd * w / h * std::expm1(b * std::log(2.0) / (mu * w * delta));
        }
      }
      flag(used <= budgets[hop] * (1.0 + tol), ConstraintTag::C8, {-1, hop, -1, t}, budgets[hop] - used,
           hop == 0 ? "source power budget exceeded" : "relay power budget exceeded");
    }
  }

  for (int r = 0; r < R; ++r) {
    const Request& req = requests[static_cast<std::size_t>(r)];
    const double v = config.file_sizes[static_cast<std::size_t>(req.file)];
    const double cached = cache.at(req.relay, req.file) * v;
    const double eps = config.delay_for_user(config.global_user(req.relay, req.user));
    for (int t = 1; t <= T; ++t) {
      const double bs = q.source[q.at(r, t)], br = q.relay[q.at(r, t)], bc = q.cache[q.at(r, t)];
      const IndexTuple idx{-1, r, -1, t};
      flag(br <= bs + bc + bit_tol, ConstraintTag::C9, idx, bs + bc - br, "delivered more than fetched");
      flag(br <= v + bit_tol, ConstraintTag::C9, idx, v - br, "delivered more than the file size");
      flag(bc <= cached + bit_tol, ConstraintTag::C10, idx, cached - bc, "cache fetch beyond cached part");
      const double floor = config.min_rate * delta * std::max(t - eps, 0.0);
      flag(br >= floor - bit_tol, ConstraintTag::C13, idx, br - floor, "minimum delivery rate missed");
    }
  }

  for (int t = 1; t <= T; ++t) {
    for (int m = 0; m < config.num_relays; ++m) {
      double load = 0.0;
      for (int r = 0; r < R; ++r) {
        if (requests[static_cast<std::size_t>(r)].relay != m) continue;
        load += q.source[q.at(r, t)] + q.cache[q.at(r, t - 1)] - q.relay[q.at(r, t - 1)];
      }
      const double cap = config.buffer_capacity[static_cast<std::size_t>(m)];
      flag(load <= cap + bit_tol, ConstraintTag::C11, {-1, m, -1, t}, cap - load, "buffer capacity exceeded");
    }
    double fetched = 0.0;
    for (int r = 0; r < R; ++r) fetched += q.source[q.at(r, t)] - q.source[q.at(r, t - 1)];
    const double cap = config.backhaul_at(t) * delta;
    flag(fetched <= cap + bit_tol, ConstraintTag::C12, {-1, -1, -1, t}, cap - fetched, "backhaul capacity exceeded");
  }
  return report;
}

std::optional<int> completion_time(const QueueTrajectory& traj, std::span<const Request> requests,
                                   const SystemConfig& config, double tol_bits) {
  if (requests.size() != static_cast<std::size_t>(traj.num_requests)) {
    throw DimensionError(
        fmt::format("trajectory has {} requests, request list has {}", traj.num_requests, requests.size()));
  }
  for (int t = 0; t <= traj.horizon; ++t) {
    bool done = true;
    for (int r = 0; r < traj.num_requests && done; ++r) {
      const double v = config.file_sizes[static_cast<std::size_t>(requests[static_cast<std::size_t>(r)].file)];
      done = traj.delivered(r, t) >= v - tol_bits;
    }
    if (done) return t;
  }
  return std::nullopt;
}

}  // namespace relaycache
