#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaycache/io.hpp"
#include "relaycache/model.hpp"
#include "relaycache/reform.hpp"
#include "relaycache/scenario.hpp"
#include "relaycache/solver.hpp"

namespace relaycache {

/// An inner solve did not end optimal.
class SolveFailure : public std::runtime_error {
 public:
  SolveFailure(int horizon, SolveStatus status, const std::string& detail);
  int horizon;
  SolveStatus status;
};

/// Doubling reached the horizon cap without completing every request.
class NotCompletable : public std::runtime_error {
 public:
  NotCompletable(int last_horizon, double last_bits, double required_bits);
  int last_horizon;
  double last_bits;
  double required_bits;
};

struct DeliveryOptions {
  SolverSettings solver;
  ScheduleMode schedule = ScheduleMode::Adaptive;
  /// Largest horizon the search may probe; also capped by the channel horizon.
  int max_horizon = 64;
  /// Relative completion tolerance; <= 0 selects max(1e-6, 10 * solver tolerance).
  double completion_tol = 0.0;

  double effective_tol() const;
};

struct Probe {
  int horizon = 0;
  double bits = 0.0;
  bool complete = false;
  int iterations = 0;
};

struct SearchTrace {
  std::vector<Probe> doubling;
  std::vector<Probe> bisection;
  std::vector<std::pair<int, int>> intervals;  // [l, u] before each bisection probe and at exit
  int optimal_horizon = 0;
  int inner_solves = 0;
  /// Every probe, sorted by horizon, has non-decreasing throughput.
  bool monotone = true;
};

Json to_json(const SearchTrace& trace);

/// Result of one inner solve at a fixed horizon.
struct ThroughputResult {
  int horizon = 0;
  double bits = 0.0;
  double required_bits = 0.0;
  DeliveryPlan plan;
  Solution solution;
};

/// phi(T): the largest total delivered volume within T slots, in bits.
/// Throws SolveFailure when the inner solve is not optimal.
ThroughputResult throughput(int horizon, const Scenario& scenario, const CacheAllocation& cache,
                            const SystemConfig& config, const DeliveryOptions& options = {});

/// True iff bits >= required * (1 - tol).
bool is_complete(double bits, double required_bits, double tol);

/// Doubling then bisection over integer horizons. `probe` returns the
/// throughput at a horizon; the search needs it to be non-decreasing.
/// Returns the smallest complete horizon. Throws NotCompletable.
int search_min_horizon(const std::function<Probe(int)>& probe, int max_horizon, double required_bits,
                       SearchTrace& trace);

/// Probes sorted by horizon have throughput non-decreasing up to slack_bits.
bool trace_monotone(const SearchTrace& trace, double slack_bits);

struct DeliveryResult {
  int horizon = 0;
  ThroughputResult at_optimum;
  SearchTrace trace;
  QueueTrajectory trajectory;
  FeasibilityReport report;
};

/// Minimum delivery time for a fixed cache, with the plan solved at T*.
/// The plan is re-checked by check_feasibility at tolerance
/// 1e-6 * sum V; the report is returned rather than thrown.
DeliveryResult min_delivery_time(const Scenario& scenario, const CacheAllocation& cache, const SystemConfig& config,
                                 const DeliveryOptions& options = {});

/// Total bits requested by a scenario.
double requested_bits(const Scenario& scenario, const SystemConfig& config);

/// Direct completion check at a horizon: maximizes the common completed
/// fraction z and reports z >= 1 - tol. Infeasible inner programs count
/// as not complete.
bool completes_directly(int horizon, const Scenario& scenario, const CacheAllocation& cache,
                        const SystemConfig& config, const DeliveryOptions& options = {});

}  // namespace relaycache
