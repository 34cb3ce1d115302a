#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "relaycache/harness.hpp"

using namespace relaycache;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSolver = 3;

struct Common {
  std::string profile = "desk";
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  bool verbose = false;

  ExperimentConfig load() const {
    ExperimentConfig e = config_path.empty() ? profile_by_name(profile) : load_experiment(config_path);
    if (!seeds.empty()) e.seeds = seeds;
    e.solver.verbose = verbose;
    e.validate();
    return e;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--profile", c.profile, "Built-in profile: desk or table1 (table1 is long-running)");
  app->add_option("--config", c.config_path, "Experiment config JSON; overrides --profile");
  app->add_option("--seed", c.seeds, "Master seed(s); overrides the config");
  app->add_option("-o,--out", c.out_dir, "Output directory");
  app->add_flag("-v,--verbose", c.verbose, "Print solver progress");
}

void write_json(const fs::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
  fmt::print("wrote {}\n", path.string());
}

std::vector<Scenario> scenarios_for(const ExperimentConfig& e) {
  return build_scenarios(e.num_scenarios, e.system, e.scenario, e.seeds.front());
}

Json cache_json(const CacheAllocation& cache, const SystemConfig& config) {
  Json j = to_json(cache);
  j["unused_bits"] = unused_capacity(cache, config.file_sizes, config.cache_capacity);
  return j;
}

int cmd_config(const Common& c) {
  write_json(fs::path(c.out_dir) / "experiment.json", to_json(c.load()));
  return kExitOk;
}

int cmd_gen(const Common& c) {
  const ExperimentConfig e = c.load();
  const auto sets = scenarios_for(e);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    write_json(fs::path(c.out_dir) / fmt::format("scenario_{}.json", i), to_json(sets[i], e.system));
  }
  return kExitOk;
}

int cmd_cache(const Common& c, const std::string& scheme_name) {
  const ExperimentConfig e = c.load();
  const Scheme scheme = scheme_from_string(scheme_name);
  const auto sets = scenarios_for(e);
  CacheAllocation cache;
  Json out;
  switch (scheme) {
    case Scheme::Optimal:
    case Scheme::Alternating: {
      const auto r = optimize_cache(sets, e.system, e.delivery_options(scheme));
      cache = r.cache;
      out["t_star"] = r.horizon;
      out["trace"] = to_json(r.trace);
      break;
    }
    case Scheme::Preference:
      cache = preference_caching(e.scenario.popularity, e.system.file_sizes, e.system.cache_capacity);
      break;
    case Scheme::Uniform:
      cache = uniform_caching(e.system.file_sizes, e.system.cache_capacity);
      break;
  }
  const auto report = check_cache(cache, e.system, 0.0);
  if (!report.feasible()) {
    fmt::print(stderr, "cache violates C1:\n{}\n", report.summary());
    return kExitInfeasible;
  }
  write_json(fs::path(c.out_dir) / "cache.json", cache_json(cache, e.system));
  if (!out.empty()) {
    write_json(fs::path(c.out_dir) / "cache_trace.json", out);
    fmt::print("worst-case T* = {} slots\n", out["t_star"].get<int>());
  }
  return kExitOk;
}

int cmd_deliver(const Common& c, const std::string& scenario_path, const std::string& cache_path,
                const std::string& schedule) {
  const ExperimentConfig e = c.load();
  const Json sj = read_json_file(scenario_path);
  const Scenario scenario = scenario_from_json(sj);
  const SystemConfig system = sj.contains("config") ? config_from_json(sj.at("config")) : e.system;
  const CacheAllocation cache = cache_from_json(read_json_file(cache_path));
  DeliveryOptions o = e.delivery_options(schedule == "alternating" ? Scheme::Alternating : Scheme::Optimal);
  const DeliveryResult r = min_delivery_time(scenario, cache, system, o);
  const fs::path dir(c.out_dir);
  write_json(dir / "plan.json", to_json(r.at_optimum.plan));
  Json summary{{"t_star", r.horizon},
               {"delivered_bits", r.at_optimum.bits},
               {"requested_bits", r.at_optimum.required_bits},
               {"feasible", r.report.feasible()},
               {"trace", to_json(r.trace)}};
  write_json(dir / "delivery.json", summary);
  if (!r.report.feasible()) {
    fmt::print(stderr, "{}\n", r.report.summary());
    return kExitInfeasible;
  }
  fmt::print("T* = {} slots\n", r.horizon);
  return kExitOk;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& schemes, int workers, const std::string& stem) {
  ExperimentConfig e = c.load();
  if (!schemes.empty()) {
    e.schemes.clear();
    for (const auto& s : schemes) e.schemes.push_back(scheme_from_string(s));
  }
  if (workers > 0) e.workers = workers;
  const ResultTable table = run_experiment(e, [](const ResultRow& r) {
    fmt::print("{:>6} B_max={:<10} C_max={:<10} {:<9} seed {:<6} T*={}\n", to_string(r.axis), r.buffer_bits,
               r.cache_bits, to_string(r.scheme), r.seed, r.horizon);
    std::fflush(stdout);
  });
  emit_results(table, c.out_dir, stem);
  fmt::print("wrote {}/{}.csv and .json\n", c.out_dir, stem);
  return kExitOk;
}

int cmd_verify(const std::string& plan_path, const std::string& scenario_path, const std::string& cache_path,
               double tol) {
  const Json sj = read_json_file(scenario_path);
  const Scenario scenario = scenario_from_json(sj);
  const SystemConfig system = config_from_json(sj.at("config"));
  const CacheAllocation cache = cache_from_json(read_json_file(cache_path));
  const DeliveryPlan plan = plan_from_json(read_json_file(plan_path));
  auto report = check_cache(cache, system, 0.0);
  const auto plan_report = check_feasibility(plan, cache, scenario.requests, scenario.channels, system, tol);
  report.violations.insert(report.violations.end(), plan_report.violations.begin(), plan_report.violations.end());
  const auto traj = evolve_queues(plan, scenario.channels, system);
  const auto done = completion_time(traj, scenario.requests, system, tol * system.total_file_size());
  fmt::print("{}\n", report.summary());
  if (done) {
    fmt::print("all requests complete by slot {}\n", *done);
  } else {
    fmt::print("plan does not complete every request within {} slots\n", plan.horizon);
  }
  return report.feasible() ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cache- and buffer-aided two-hop relay delivery: minimum delivery time and cache placement"};
  app.require_subcommand(1);

  Common common;
  auto* config = app.add_subcommand("config", "Write the resolved experiment config");
  add_common(config, common);

  auto* gen = app.add_subcommand("gen", "Generate scenario files");
  add_common(gen, common);

  std::string scheme = "optimal";
  auto* cache = app.add_subcommand("cache", "First stage: compute a cache placement");
  add_common(cache, common);
  cache->add_option("--scheme", scheme, "optimal, baseline1, baseline2 or baseline3");

  std::string scenario_path, cache_path, schedule = "adaptive";
  auto* deliver = app.add_subcommand("deliver", "Second stage: minimum delivery time for one scenario");
  add_common(deliver, common);
  deliver->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  deliver->add_option("--cache", cache_path, "Cache JSON")->required();
  deliver->add_option("--schedule", schedule, "adaptive or alternating")
      ->check(CLI::IsMember({"adaptive", "alternating"}));

  std::vector<std::string> schemes;
  int workers = 0;
  std::string stem = "results";
  auto* sweep = app.add_subcommand("sweep", "Run every scheme over the configured sweeps");
  add_common(sweep, common);
  sweep->add_option("--scheme", schemes, "Restrict to these schemes");
  sweep->add_option("--workers", workers, "Worker threads");
  sweep->add_option("--stem", stem, "Output file stem");

  std::string plan_path;
  double tol = 1e-6;
  auto* verify = app.add_subcommand("verify", "Re-check a stored plan with the independent checker");
  verify->add_option("--plan", plan_path, "Plan JSON")->required();
  verify->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  verify->add_option("--cache", cache_path, "Cache JSON")->required();
  verify->add_option("--tol", tol, "Relative tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (config->parsed()) return cmd_config(common);
    if (gen->parsed()) return cmd_gen(common);
    if (cache->parsed()) return cmd_cache(common, scheme);
    if (deliver->parsed()) return cmd_deliver(common, scenario_path, cache_path, schedule);
    if (sweep->parsed()) return cmd_sweep(common, schemes, workers, stem);
    if (verify->parsed()) return cmd_verify(plan_path, scenario_path, cache_path, tol);
  } catch (const InfeasiblePlan& e) {
    fmt::print(stderr, "{}\n", e.what());
    return kExitInfeasible;
  } catch (const SolveFailure& e) {
    fmt::print(stderr, "solver failure: {}\n", e.what());
    return kExitSolver;
  } catch (const NotCompletable& e) {
    fmt::print(stderr, "{}\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
