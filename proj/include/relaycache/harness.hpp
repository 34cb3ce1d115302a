#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relaycache/caching.hpp"
#include "relaycache/delivery.hpp"
#include "relaycache/io.hpp"

namespace relaycache {

/// optimal: jointly optimized cache with adaptive delivery.
/// preference / uniform: baseline caches with adaptive delivery.
/// alternating: jointly optimized cache under the fixed fetch/deliver schedule.
enum class Scheme { Optimal, Preference, Uniform, Alternating };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

enum class SweepAxis { None, Buffer, Cache };

const char* to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::None;
  std::vector<double> values;  // bits, applied to every relay
};

struct ExperimentConfig {
  std::string name = "custom";
  SystemConfig system;
  ScenarioParams scenario;
  int num_scenarios = 1;
  std::vector<std::uint64_t> seeds{1};
  SolverSettings solver;
  int max_horizon = 64;
  std::vector<Scheme> schemes{Scheme::Optimal, Scheme::Preference, Scheme::Uniform, Scheme::Alternating};
  std::vector<SweepSpec> sweeps;
  int workers = 1;

  DeliveryOptions delivery_options(Scheme scheme) const;
  void validate() const;
};

Json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const Json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Two relays with two users each, three files of 200/100/50 kbit, eight
/// subcarriers, 20 ms slots and a 64-slot cap.
ExperimentConfig desk_profile();
/// Radio and geometry parameters of the full-scale setting. Long-running.
ExperimentConfig table1_profile();
/// Looks up "desk" or "table1".
ExperimentConfig profile_by_name(const std::string& name);

enum class RowStatus { Ok, NotCompletable };

struct ResultRow {
  SweepAxis axis = SweepAxis::None;
  double buffer_bits = 0.0;  // B_max of relay 0 at this point
  double cache_bits = 0.0;   // C_max of relay 0 at this point
  Scheme scheme = Scheme::Optimal;
  std::uint64_t seed = 0;
  RowStatus status = RowStatus::Ok;
  /// Worst delivery time over the scenario set; -1 when not completable.
  int horizon = -1;
  std::vector<int> scenario_horizons;
  /// Scenario-averaged sum_rho B^R_{rho,t} / (t Delta), bit/s, for t = 1..horizon.
  std::vector<double> throughput_bps;
  int inner_solves = 0;
  long long solver_iterations = 0;
  bool feasible = true;
  bool monotone = true;
  double unused_cache_bits = 0.0;
  std::vector<double> cache;  // fraction, m * N + n

  /// Identity used to sort rows independently of completion order.
  std::tuple<int, double, double, int, std::uint64_t> key() const;
};

using ResultTable = std::vector<ResultRow>;

/// Detailed outcome of one (point, scheme, seed) cell.
struct CellOutcome {
  ResultRow row;
  std::vector<DeliveryResult> deliveries;  // per scenario, when completable
  std::optional<CacheResult> joint;        // schemes with an optimized cache
};

/// Thrown when a plan fails the independent checker; carries the report.
class InfeasiblePlan : public std::runtime_error {
 public:
  InfeasiblePlan(std::string context, FeasibilityReport report);
  FeasibilityReport report;
};

/// Runs one scheme on one scenario set with the given system parameters.
CellOutcome run_cell(const SystemConfig& system, std::span<const Scenario> scenarios, const Popularity& popularity,
                     Scheme scheme, const ExperimentConfig& experiment);

/// Every sweep point, scheme and seed, dispatched to `workers` threads.
/// Rows come back sorted by key. Throws InfeasiblePlan or SolveFailure.
ResultTable run_experiment(const ExperimentConfig& config,
                           const std::function<void(const ResultRow&)>& progress = {});

std::string results_csv(const ResultTable& table);
Json results_json(const ResultTable& table);
ResultTable results_from_csv(const std::string& text);
ResultTable results_from_json(const Json& j);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json.
void emit_results(const ResultTable& table, const std::filesystem::path& dir, const std::string& stem);

}  // namespace relaycache
