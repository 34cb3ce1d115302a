#pragma once

#include <functional>
#include <iosfwd>
#include <set>
#include <span>
#include <vector>

#include "relaycache/model.hpp"
#include "relaycache/program.hpp"
#include "relaycache/scenario.hpp"
#include "relaycache/solver.hpp"

namespace relaycache {

class RecoveryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// b~ = W Delta mu log2(1 + p h / (N0 W)); zero when mu = 0.
double transform_rate(double mu, double power, double gain, const SystemConfig& config);

/// p = (N0 W / h) (2^(b~ / (mu W Delta)) - 1); zero when b~ = 0. Throws
/// RecoveryError for b~ > 0 with mu = 0.
double recover_power(double rate_bits, double mu, double gain, const SystemConfig& config);

/// (mu / h) (exp(b~ ln2 / (mu W Delta)) - 1), the transformed power summand
/// in units of W N0 (watts / (W N0)). Closure at mu = 0: 0 if b~ = 0, else +inf.
double perspective_term(double mu, double rate_bits, double gain, const SystemConfig& config);

/// The bare perspective g(x, y) = x exp(y / x) with its closure at x = 0.
double perspective(double x, double y);

/// Exponential-perspective fragment for one summand: mu exp(a x / mu) <= gamma s
/// together with the coefficient -1/gamma of mu in the budget row, where
/// x = b~ / scale, gamma = P h / (W N0) and a = ln2 scale / (W Delta).
struct PerspectiveFragment {
  double x_scale;
  double s_scale;
  double mu_coef;
};
PerspectiveFragment perspective_fragment(double gain, double power_budget, double scale, const SystemConfig& config);

enum class ScheduleMode { Adaptive, FixedAlternating };
enum class InnerObjective { Throughput, CompletionFraction };

struct InnerOptions {
  int horizon = 1;
  ScheduleMode schedule = ScheduleMode::Adaptive;
  InnerObjective objective = InnerObjective::Throughput;
  /// Fixed cache; nullptr makes c a variable shared by all scenarios.
  const CacheAllocation* cache = nullptr;
  /// Optional fixed SC assignment for a single scenario, laid out like
  /// DeliveryPlan links: -1 relaxed, 0 unassigned, 1 assigned.
  std::vector<signed char> sc_mask;
};

/// Variable indices of one scenario block; -1 for t = 0 queues.
struct ScenarioVars {
  std::vector<int> mu, mu_s, mu_r, b_s, b_r, s_s, s_r;  // link layout
  std::vector<int> eta_s, eta_r;                         // m * T + t - 1
  std::vector<int> b_c, q_s, q_r, q_c;                   // r * T + t - 1
};

struct InnerProgram {
  ConvexProgram program;
  int horizon = 0;
  int num_subcarriers = 0;
  int num_relays = 0;
  int num_files = 0;
  std::vector<int> num_requests;  // per scenario
  double scale = 1.0;             // bits per normalized unit (sum of file sizes)
  double slot_duration = 1.0;
  std::vector<ScenarioVars> blocks;
  std::vector<int> cache_vars;    // m * N + n when the cache is free
  int completion_var = -1;

  /// Normalized objective to bits; for throughput this is the summed B^R at T.
  double to_bits(double normalized) const { return normalized * scale; }
};

/// Builds (P1b) for one scenario with a fixed cache, or (P2b) over several
/// scenarios with a shared free cache. Throws DimensionError on
/// inconsistent scenario dimensions.
InnerProgram build_inner_program(std::span<const Scenario> scenarios, const SystemConfig& config,
                                 const InnerOptions& options);

DeliveryPlan extract_plan(const InnerProgram& inner, std::span<const double> values, int scenario = 0);
CacheAllocation extract_cache(const InnerProgram& inner, std::span<const double> values);

/// Powers recovered from a plan, laid out like DeliveryPlan links.
struct RecoveredPower {
  std::vector<double> source;
  std::vector<double> relay;
};
RecoveredPower recover_plan_power(const DeliveryPlan& plan, const ChannelRealization& channels,
                                  const SystemConfig& config);

/// Tags carried by rows, perspectives and tagged bounds of a program.
std::set<ConstraintTag> constraint_coverage(const ConvexProgram& program);
/// Model tags C1-C13 absent from the program. C1 is only expected when
/// the cache is free and C13 only when the minimum rate is active.
std::vector<ConstraintTag> missing_tags(const ConvexProgram& program, bool expect_c1, bool expect_c13);

/// Greedy binary assignment from a relaxed plan: per slot, (request, SC)
/// pairs in descending share order, ties to the lower request then lower
/// SC; a pair is taken when both are still free and the share exceeds
/// `threshold`. Respects C6 and C7.
std::vector<signed char> binary_assignment(const DeliveryPlan& relaxed, double threshold = 1e-4);

struct RoundingResult {
  std::vector<signed char> mask;
  DeliveryPlan plan;
  Solution solution;
  double relaxed_bits = 0.0;
  double rounded_bits = 0.0;
  double gap_bits = 0.0;  // relaxed - rounded
};

/// Rounds the relaxed plan and re-solves the program with the assignment
/// fixed to report the rounding gap.
RoundingResult round_sc_assignment(const DeliveryPlan& relaxed, double relaxed_bits, const Scenario& scenario,
                                   const CacheAllocation& cache, const SystemConfig& config,
                                   ScheduleMode schedule = ScheduleMode::Adaptive,
                                   const SolverSettings& settings = {});

/// Calls visit(mask) for every binary assignment of R requests to F SCs
/// over T slots satisfying C6 and C7.
void for_each_binary_assignment(int requests, int subcarriers, int horizon,
                                const std::function<void(const std::vector<signed char>&)>& visit);

}  // namespace relaycache
