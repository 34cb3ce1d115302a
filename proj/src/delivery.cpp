#include "relaycache/delivery.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace relaycache {

SolveFailure::SolveFailure(int horizon_, SolveStatus status_, const std::string& detail)
    : std::runtime_error(fmt::format("inner solve at T={} ended {}{}{}", horizon_, to_string(status_),
                                     detail.empty() ? "" : ": ", detail)),
      horizon(horizon_),
      status(status_) {}

NotCompletable::NotCompletable(int last_horizon_, double last_bits_, double required_bits_)
    : std::runtime_error(fmt::format("not completable within horizon {}: delivered {:.6g} of {:.6g} bits",
                                     last_horizon_, last_bits_, required_bits_)),
      last_horizon(last_horizon_),
      last_bits(last_bits_),
      required_bits(required_bits_) {}

double DeliveryOptions::effective_tol() const {
  return completion_tol > 0.0 ? completion_tol : std::max(1e-6, 10.0 * solver.tolerance);
}

namespace {

Json probe_json(const Probe& p) {
  return Json{{"horizon", p.horizon}, {"bits", p.bits}, {"complete", p.complete}, {"iterations", p.iterations}};
}

}  // namespace

Json to_json(const SearchTrace& trace) {
  Json j;
  j["doubling"] = Json::array();
  for (const auto& p : trace.doubling) j["doubling"].push_back(probe_json(p));
  j["bisection"] = Json::array();
  for (const auto& p : trace.bisection) j["bisection"].push_back(probe_json(p));
  j["intervals"] = Json::array();
  for (const auto& [l, u] : trace.intervals) j["intervals"].push_back(Json::array({l, u}));
  j["optimal_horizon"] = trace.optimal_horizon;
  j["inner_solves"] = trace.inner_solves;
  j["monotone"] = trace.monotone;
  return j;
}

double requested_bits(const Scenario& scenario, const SystemConfig& config) {
  double total = 0.0;
  for (const auto& r : scenario.requests) total += config.file_sizes[static_cast<std::size_t>(r.file)];
  return total;
}

bool is_complete(double bits, double required_bits, double tol) { return bits >= required_bits * (1.0 - tol); }

ThroughputResult throughput(int horizon, const Scenario& scenario, const CacheAllocation& cache,
                            const SystemConfig& config, const DeliveryOptions& options) {
  if (horizon < 1) throw std::invalid_argument(fmt::format("throughput needs T >= 1, got {}", horizon));
  InnerOptions io;
  io.horizon = horizon;
  io.schedule = options.schedule;
  io.cache = &cache;
  const auto inner = build_inner_program(std::span<const Scenario>(&scenario, 1), config, io);
  ThroughputResult out;
  out.horizon = horizon;
  out.required_bits = requested_bits(scenario, config);
  out.solution = solve(inner.program, options.solver);
  if (!out.solution.optimal()) throw SolveFailure(horizon, out.solution.status, out.solution.message);
  // The queue cap keeps the objective at or below the request total; clamp
  // solver noise above it.
  out.bits = std::min(inner.to_bits(out.solution.objective), out.required_bits);
  out.plan = extract_plan(inner, out.solution.values);
  return out;
}

int search_min_horizon(const std::function<Probe(int)>& probe, int max_horizon, double required_bits,
                       SearchTrace& trace) {
  if (max_horizon < 1) throw std::invalid_argument("max_horizon must be at least 1");
  int step = 1;
  int next = 1;
  int lo = 0;
  int hi = 0;
  while (true) {
    const int horizon = std::min(next, max_horizon);
    Probe p = probe(horizon);
    trace.doubling.push_back(p);
    ++trace.inner_solves;
    if (p.complete) {
      hi = horizon;
      break;
    }
    lo = horizon;
    if (horizon == max_horizon) throw NotCompletable(horizon, p.bits, required_bits);
    next += step;
    step *= 2;
  }
  // lo is incomplete here (lo = 0 trivially so), which the bisection relies on.
  while (hi - lo > 1) {
    trace.intervals.emplace_back(lo, hi);
    const int mid = lo + (hi - lo + 1) / 2;
    Probe p = probe(mid);
    trace.bisection.push_back(p);
    ++trace.inner_solves;
    if (p.complete) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  trace.intervals.emplace_back(lo, hi);
  trace.optimal_horizon = hi;
  return hi;
}

bool trace_monotone(const SearchTrace& trace, double slack_bits) {
  std::vector<Probe> all = trace.doubling;
  all.insert(all.end(), trace.bisection.begin(), trace.bisection.end());
  std::sort(all.begin(), all.end(), [](const Probe& a, const Probe& b) { return a.horizon < b.horizon; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].bits < all[i - 1].bits - slack_bits) return false;
  }
  return true;
}

DeliveryResult min_delivery_time(const Scenario& scenario, const CacheAllocation& cache, const SystemConfig& config,
                                 const DeliveryOptions& options) {
  validate_requests(scenario.requests, config);
  const double required = requested_bits(scenario, config);
  const double tol = options.effective_tol();
  const int cap = std::min(options.max_horizon, scenario.channels.horizon);

  DeliveryResult result;
  std::optional<ThroughputResult> best;
  auto probe = [&](int horizon) {
    ThroughputResult r = throughput(horizon, scenario, cache, config, options);
    Probe p{horizon, r.bits, is_complete(r.bits, required, tol), r.solution.iterations};
    if (p.complete && (!best || horizon < best->horizon)) best = std::move(r);
    return p;
  };
  result.horizon = search_min_horizon(probe, cap, required, result.trace);
  result.trace.monotone = trace_monotone(result.trace, tol * required);
  result.at_optimum = std::move(*best);

  const auto& plan = result.at_optimum.plan;
  result.trajectory = evolve_queues(plan, scenario.channels, config);
  result.report = check_feasibility(plan, cache, scenario.requests, scenario.channels, config, 1e-6);
  const auto done = completion_time(result.trajectory, scenario.requests, config, tol * required);
  if (!done || *done > result.horizon) {
    result.report.violations.push_back(
        {ConstraintTag::Completion, kNoIndex, result.at_optimum.bits - required,
         fmt::format("plan at T={} does not complete every request", result.horizon)});
  }
  return result;
}

bool completes_directly(int horizon, const Scenario& scenario, const CacheAllocation& cache,
                        const SystemConfig& config, const DeliveryOptions& options) {
  InnerOptions io;
  io.horizon = horizon;
  io.schedule = options.schedule;
  io.objective = InnerObjective::CompletionFraction;
  io.cache = &cache;
  const auto inner = build_inner_program(std::span<const Scenario>(&scenario, 1), config, io);
  const Solution sol = solve(inner.program, options.solver);
  if (sol.status == SolveStatus::Infeasible) return false;
  if (!sol.optimal()) throw SolveFailure(horizon, sol.status, sol.message);
  return sol.objective >= 1.0 - options.effective_tol();
}

}  // namespace relaycache
