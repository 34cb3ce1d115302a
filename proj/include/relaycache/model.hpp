#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaycache/program.hpp"

namespace relaycache {

// Indexing conventions used throughout:
//   relays m in [0, M), files n in [0, N), requests r in [0, R), subcarriers
//   f in [0, F); slot t in [1, T] is stored at position t - 1 in per-slot
//   arrays, while cumulative queues are stored for t in [0, T].

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SystemConfig {
  int num_relays = 0;                   // M
  std::vector<int> users_per_relay;     // K^(m)
  int num_files = 0;                    // N
  std::vector<double> file_sizes;       // V_n, bits
  int num_subcarriers = 0;              // F
  double sc_bandwidth = 0.0;            // W, Hz
  double slot_duration = 0.0;           // Delta, s
  double tx_power_source = 0.0;         // P_S, W
  double tx_power_relay = 0.0;          // P_R, W
  double noise_psd = 0.0;               // N0, W/Hz
  std::vector<double> backhaul;         // Gamma_t, bit/s; the last entry repeats
  std::vector<double> cache_capacity;   // C_max^(m), bits
  std::vector<double> buffer_capacity;  // B_max^(m), bits
  double min_rate = 0.0;                // nu_min, bit/s
  std::vector<double> initial_delay;    // eps, slots; one value for all users or one per user

  int total_users() const;
  double total_file_size() const;
  double backhaul_at(int t) const;  // t >= 1
  double delay_for_user(int global_user) const;
  int global_user(int relay, int user) const;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

double dbm_to_watts(double dbm);

struct Request {
  int relay = 0;
  int user = 0;  // index within the relay's users
  int file = 0;
};

/// Range checks and at most one request per user; throws ConfigError.
void validate_requests(std::span<const Request> requests, const SystemConfig& config);

/// Normalized cached fractions c[m][n] in [0, 1].
struct CacheAllocation {
  int num_relays = 0;
  int num_files = 0;
  std::vector<double> fraction;  // m * N + n

  static CacheAllocation empty(int relays, int files);
  double at(int m, int n) const { return fraction[static_cast<std::size_t>(m * num_files + n)]; }
  double& at(int m, int n) { return fraction[static_cast<std::size_t>(m * num_files + n)]; }
  double cached_bits(int m, std::span<const double> sizes) const;
};

/// Linear power gains per request, subcarrier and slot.
struct ChannelRealization {
  int num_requests = 0;
  int num_subcarriers = 0;
  int horizon = 0;  // T_max
  std::vector<double> source;  // h^S, (r * F + f) * T_max + (t - 1)
  std::vector<double> relay;   // h^R

  std::size_t offset(int r, int f, int t) const {
    return (static_cast<std::size_t>(r) * num_subcarriers + f) * horizon + (t - 1);
  }
  double h_source(int r, int f, int t) const { return source[offset(r, f, t)]; }
  double h_relay(int r, int f, int t) const { return relay[offset(r, f, t)]; }
};

struct DeliveryPlan {
  int horizon = 0;
  int num_requests = 0;
  int num_subcarriers = 0;
  int num_relays = 0;
  // per (request, subcarrier, slot): (r * F + f) * T + (t - 1)
  std::vector<double> sc_share;     // mu
  std::vector<double> share_source; // mu^S
  std::vector<double> share_relay;  // mu^R
  std::vector<double> rate_source;  // b~^S, bits in the slot
  std::vector<double> rate_relay;   // b~^R, bits in the slot
  // per (relay, slot): m * T + (t - 1)
  std::vector<double> split_source;  // eta_S
  std::vector<double> split_relay;   // eta_R
  // per (request, slot): r * T + (t - 1), bit/s
  std::vector<double> cache_rate;

  static DeliveryPlan zeros(int horizon, int requests, int subcarriers, int relays);

  std::size_t link(int r, int f, int t) const {
    return (static_cast<std::size_t>(r) * num_subcarriers + f) * horizon + (t - 1);
  }
  std::size_t relay_slot(int m, int t) const { return static_cast<std::size_t>(m) * horizon + (t - 1); }
  std::size_t request_slot(int r, int t) const { return static_cast<std::size_t>(r) * horizon + (t - 1); }

  /// Throws DimensionError when an array does not match the declared sizes.
  void check_shape() const;
};

/// Cumulative bits per request for t in [0, T].
struct QueueTrajectory {
  int horizon = 0;
  int num_requests = 0;
  std::vector<double> source;  // B^S, r * (T + 1) + t
  std::vector<double> relay;   // B^R
  std::vector<double> cache;   // B^C

  std::size_t at(int r, int t) const { return static_cast<std::size_t>(r) * (horizon + 1) + t; }
  double delivered(int r, int t) const { return relay[at(r, t)]; }
  /// Sum over requests of B^R at slot t.
  double total_delivered(int t) const;
};

QueueTrajectory evolve_queues(const DeliveryPlan& plan, const ChannelRealization& channels,
                              const SystemConfig& config);

struct Violation {
  ConstraintTag tag = ConstraintTag::None;
  IndexTuple index = kNoIndex;  // {-, request or relay, subcarrier or file, slot}
  double slack = 0.0;           // signed, in the constraint's own units
  std::string what;
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  bool feasible() const { return violations.empty(); }
  std::string summary(std::size_t max_lines = 10) const;
};

/// Re-evaluates C1-C13 and the plan invariants from scratch. Bit-valued
/// slacks use tol * sum V_n, shares use tol, power sums use tol * P_i, and
/// C1 uses tol * C_max^(m).
FeasibilityReport check_feasibility(const DeliveryPlan& plan, const CacheAllocation& cache,
                                    std::span<const Request> requests, const ChannelRealization& channels,
                                    const SystemConfig& config, double tol = 1e-6);

/// C1 and the [0, 1] box only.
FeasibilityReport check_cache(const CacheAllocation& cache, const SystemConfig& config, double tol = 0.0);

/// Smallest t with B^R_{r,t} >= V_n - tol_bits for every request.
std::optional<int> completion_time(const QueueTrajectory& traj, std::span<const Request> requests,
                                   const SystemConfig& config, double tol_bits);

}  // namespace relaycache
