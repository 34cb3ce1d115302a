#include "relaycache/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace relaycache {

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Optimal: return "optimal";
    case Scheme::Preference: return "baseline1";
    case Scheme::Uniform: return "baseline2";
    case Scheme::Alternating: return "baseline3";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "optimal") return Scheme::Optimal;
  if (name == "baseline1" || name == "preference") return Scheme::Preference;
  if (name == "baseline2" || name == "uniform") return Scheme::Uniform;
  if (name == "baseline3" || name == "alternating") return Scheme::Alternating;
  throw ConfigError(fmt::format("unknown scheme '{}'", name));
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::None: return "none";
    case SweepAxis::Buffer: return "buffer";
    case SweepAxis::Cache: return "cache";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "none") return SweepAxis::None;
  if (name == "buffer" || name == "buffer_capacity_bits") return SweepAxis::Buffer;
  if (name == "cache" || name == "cache_capacity_bits") return SweepAxis::Cache;
  throw ConfigError(fmt::format("unknown sweep axis '{}'", name));
}

DeliveryOptions ExperimentConfig::delivery_options(Scheme scheme) const {
  DeliveryOptions o;
  o.solver = solver;
  o.max_horizon = max_horizon;
  o.schedule = scheme == Scheme::Alternating ? ScheduleMode::FixedAlternating : ScheduleMode::Adaptive;
  return o;
}

void ExperimentConfig::validate() const {
  system.validate();
  scenario.popularity.validate();
  if (static_cast<int>(scenario.popularity.theta.size()) != system.num_files) {
    throw ConfigError("popularity must have one entry per file");
  }
  if (num_scenarios < 1) throw ConfigError("num_scenarios must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (schemes.empty()) throw ConfigError("at least one scheme is required");
  if (max_horizon < 1) throw ConfigError("max_horizon must be at least 1");
  if (scenario.horizon < 1) throw ConfigError("scenario horizon must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  for (const auto& s : sweeps) {
    if (s.axis == SweepAxis::None && !s.values.empty()) throw ConfigError("axis 'none' takes no values");
    for (double v : s.values) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("sweep value must be positive, got {}", v));
    }
  }
}

Json to_json(const ExperimentConfig& c) {
  Json sweeps = Json::array();
  for (const auto& s : c.sweeps) sweeps.push_back({{"axis", to_string(s.axis)}, {"values", s.values}});
  Json schemes = Json::array();
  for (Scheme s : c.schemes) schemes.push_back(to_string(s));
  return Json{{"name", c.name},
              {"system", to_json(c.system)},
              {"scenario", to_json(c.scenario)},
              {"num_scenarios", c.num_scenarios},
              {"seeds", c.seeds},
              {"solver", {{"tolerance", c.solver.tolerance}, {"max_iterations", c.solver.max_iterations}}},
              {"max_horizon", c.max_horizon},
              {"schemes", schemes},
              {"sweeps", sweeps},
              {"workers", c.workers}};
}

ExperimentConfig experiment_from_json(const Json& j) {
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    c.system = config_from_json(j.at("system"));
    c.scenario = scenario_params_from_json(j.at("scenario"));
    c.num_scenarios = j.value("num_scenarios", c.num_scenarios);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("solver")) {
      const Json& s = j.at("solver");
      c.solver.tolerance = s.value("tolerance", c.solver.tolerance);
      c.solver.max_iterations = s.value("max_iterations", c.solver.max_iterations);
    }
    c.max_horizon = j.value("max_horizon", c.max_horizon);
    if (j.contains("schemes")) {
      c.schemes.clear();
      for (const auto& s : j.at("schemes")) c.schemes.push_back(scheme_from_string(s.get<std::string>()));
    }
    if (j.contains("sweeps")) {
      for (const auto& s : j.at("sweeps")) {
        SweepSpec spec;
        spec.axis = sweep_axis_from_string(s.at("axis").get<std::string>());
        if (s.contains("values")) spec.values = s.at("values").get<std::vector<double>>();
        c.sweeps.push_back(std::move(spec));
      }
    }
    c.workers = j.value("workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("experiment config: {}", e.what()));
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) { return experiment_from_json(read_json_file(path)); }

ExperimentConfig desk_profile() {
  ExperimentConfig e;
  e.name = "desk";
  SystemConfig& c = e.system;
  c.num_relays = 2;
  c.users_per_relay = {2, 2};
  c.num_files = 3;
  c.file_sizes = {200e3, 100e3, 50e3};
  c.num_subcarriers = 8;
  c.sc_bandwidth = 313e3;
  c.slot_duration = 0.02;
  c.tx_power_source = dbm_to_watts(46.0);
  c.tx_power_relay = dbm_to_watts(40.0);
  c.noise_psd = dbm_to_watts(-172.6);
  c.backhaul = {1.5e6};
  c.cache_capacity = {100e3, 100e3};
  c.buffer_capacity = {20e3, 20e3};
  c.min_rate = 1e3;
  // One slot of start-up delay: the fixed schedule cannot deliver in slot 1.
  c.initial_delay = {1.0};
  e.scenario.popularity.theta = {0.6, 0.3, 0.1};
  e.scenario.horizon = 64;
  e.num_scenarios = 2;
  e.seeds = {7};
  e.max_horizon = 64;
  e.sweeps = {{SweepAxis::Buffer, {10e3, 20e3, 40e3, 80e3}}, {SweepAxis::Cache, {10e3, 25e3, 50e3, 100e3}}};
  return e;
}

ExperimentConfig table1_profile() {
  ExperimentConfig e;
  e.name = "table1";
  SystemConfig& c = e.system;
  constexpr double kMegabyte = 8e6;
  c.num_relays = 3;
  c.users_per_relay = {1, 1, 1};
  c.num_files = 5;
  c.file_sizes.assign(5, 500 * kMegabyte);
  c.num_subcarriers = 64;
  c.sc_bandwidth = 313e3;
  c.slot_duration = 0.02;
  c.tx_power_source = dbm_to_watts(46.0);
  c.tx_power_relay = dbm_to_watts(40.0);
  c.noise_psd = dbm_to_watts(-172.6);
  c.backhaul = {1e9};
  c.cache_capacity.assign(3, 100 * kMegabyte);
  c.buffer_capacity.assign(3, 100 * kMegabyte);
  c.min_rate = 1e3;
  c.initial_delay = {0.0};
  e.scenario.popularity.theta = {0.57, 0.20, 0.11, 0.07, 0.05};
  e.scenario.horizon = 1024;
  e.num_scenarios = 50;
  e.seeds = {1};
  e.max_horizon = 1024;
  e.sweeps = {{SweepAxis::Buffer, {50 * kMegabyte, 100 * kMegabyte, 200 * kMegabyte, 400 * kMegabyte}},
              {SweepAxis::Cache, {50 * kMegabyte, 100 * kMegabyte, 200 * kMegabyte, 400 * kMegabyte}}};
  return e;
}

ExperimentConfig profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "table1") return table1_profile();
  throw ConfigError(fmt::format("unknown profile '{}' (expected desk or table1)", name));
}

std::tuple<int, double, double, int, std::uint64_t> ResultRow::key() const {
  return {static_cast<int>(axis), buffer_bits, cache_bits, static_cast<int>(scheme), seed};
}

InfeasiblePlan::InfeasiblePlan(std::string context, FeasibilityReport report_)
    : std::runtime_error(fmt::format("{}: infeasible plan\n{}", context, report_.summary())),
      report(std::move(report_)) {}

namespace {

int trace_iterations(const SearchTrace& trace) {
  int total = 0;
  for (const auto& p : trace.doubling) total += p.iterations;
  for (const auto& p : trace.bisection) total += p.iterations;
  return total;
}

}  // namespace

CellOutcome run_cell(const SystemConfig& system, std::span<const Scenario> scenarios, const Popularity& popularity,
                     Scheme scheme, const ExperimentConfig& experiment) {
  CellOutcome out;
  ResultRow& row = out.row;
  row.scheme = scheme;
  row.buffer_bits = system.buffer_capacity.front();
  row.cache_bits = system.cache_capacity.front();
  const DeliveryOptions options = experiment.delivery_options(scheme);
  const std::string context = fmt::format("{} at B_max={} C_max={}", to_string(scheme), row.buffer_bits, row.cache_bits);

  CacheAllocation cache;
  try {
    switch (scheme) {
      case Scheme::Optimal:
      case Scheme::Alternating:
        out.joint = optimize_cache(scenarios, system, options);
        cache = out.joint->cache;
        row.inner_solves += out.joint->trace.inner_solves;
        row.solver_iterations += trace_iterations(out.joint->trace);
        row.monotone = row.monotone && out.joint->trace.monotone;
        break;
      case Scheme::Preference:
        cache = preference_caching(popularity, system.file_sizes, system.cache_capacity);
        break;
      case Scheme::Uniform:
        cache = uniform_caching(system.file_sizes, system.cache_capacity);
        break;
    }
  } catch (const NotCompletable&) {
    row.status = RowStatus::NotCompletable;
    return out;
  }
  auto cache_report = check_cache(cache, system, 0.0);
  if (!cache_report.feasible()) throw InfeasiblePlan(context, std::move(cache_report));
  row.cache = cache.fraction;
  for (double u : unused_capacity(cache, system.file_sizes, system.cache_capacity)) row.unused_cache_bits += u;

  for (const auto& s : scenarios) {
    try {
      out.deliveries.push_back(min_delivery_time(s, cache, system, options));
    } catch (const NotCompletable&) {
      row.status = RowStatus::NotCompletable;
      out.deliveries.clear();
      row.scenario_horizons.clear();
      return out;
    }
    const DeliveryResult& d = out.deliveries.back();
    if (!d.report.feasible()) throw InfeasiblePlan(fmt::format("{} seed {}", context, s.seed), d.report);
    row.scenario_horizons.push_back(d.horizon);
    row.inner_solves += d.trace.inner_solves;
    row.solver_iterations += trace_iterations(d.trace);
    row.monotone = row.monotone && d.trace.monotone;
  }
  row.horizon = *std::max_element(row.scenario_horizons.begin(), row.scenario_horizons.end());
  row.throughput_bps.resize(static_cast<std::size_t>(row.horizon));
  for (int t = 1; t <= row.horizon; ++t) {
    double sum = 0.0;
    for (const auto& d : out.deliveries) sum += d.trajectory.total_delivered(std::min(t, d.horizon));
    row.throughput_bps[static_cast<std::size_t>(t - 1)] =
        sum / static_cast<double>(out.deliveries.size()) / (t * system.slot_duration);
  }
  return out;
}

ResultTable run_experiment(const ExperimentConfig& config, const std::function<void(const ResultRow&)>& progress) {
  config.validate();
  struct Point {
    SweepAxis axis;
    SystemConfig system;
  };
  std::vector<Point> points;
  for (const auto& sweep : config.sweeps) {
    if (sweep.axis == SweepAxis::None) {
      points.push_back({SweepAxis::None, config.system});
      continue;
    }
    for (double v : sweep.values) {
      SystemConfig s = config.system;
      auto& target = sweep.axis == SweepAxis::Buffer ? s.buffer_capacity : s.cache_capacity;
      std::fill(target.begin(), target.end(), v);
      points.push_back({sweep.axis, std::move(s)});
    }
  }
  if (points.empty()) points.push_back({SweepAxis::None, config.system});

  // Capacities do not enter scenario generation, so one set per seed serves every point.
  std::vector<std::vector<Scenario>> sets;
  for (std::uint64_t seed : config.seeds) {
    sets.push_back(build_scenarios(config.num_scenarios, config.system, config.scenario, seed));
  }

  struct Task {
    std::size_t point;
    std::size_t seed;
    Scheme scheme;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t s = 0; s < config.seeds.size(); ++s) {
      for (Scheme scheme : config.schemes) tasks.push_back({p, s, scheme});
    }
  }

  ResultTable rows(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex mutex;
  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      try {
        CellOutcome cell = run_cell(points[task.point].system, sets[task.seed], config.scenario.popularity,
                                    task.scheme, config);
        cell.row.axis = points[task.point].axis;
        cell.row.seed = config.seeds[task.seed];
        rows[i] = std::move(cell.row);
        if (progress) {
          std::lock_guard lock(mutex);
          progress(rows[i]);
        }
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        abort.store(true);
      }
    }
  };
  const int threads = std::min<int>(config.workers, static_cast<int>(tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
  return rows;
}

namespace {

constexpr const char* kColumns[] = {"axis",      "buffer_bits", "cache_bits",         "scheme",
                                    "seed",      "status",      "t_star",             "scenario_t_star",
                                    "feasible",  "monotone",    "inner_solves",       "solver_iterations",
                                    "unused_cache_bits",        "cache_fraction",     "throughput_bps"};

const char* status_name(RowStatus s) { return s == RowStatus::Ok ? "ok" : "not_completable"; }

RowStatus status_from(const std::string& s) {
  if (s == "ok") return RowStatus::Ok;
  if (s == "not_completable") return RowStatus::NotCompletable;
  throw std::invalid_argument(fmt::format("unknown row status '{}'", s));
}

template <typename T>
std::string join(const std::vector<T>& values) {
  return fmt::format("{}", fmt::join(values, ";"));
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ';')) {
    if constexpr (std::is_same_v<T, int>) {
      out.push_back(std::stoi(item));
    } else {
      out.push_back(std::stod(item));
    }
  }
  return out;
}

}  // namespace

std::string results_csv(const ResultTable& table) {
  std::string out = fmt::format("{}\n", fmt::join(kColumns, ","));
  for (const auto& r : table) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.axis), r.buffer_bits,
                       r.cache_bits, to_string(r.scheme), r.seed, status_name(r.status), r.horizon,
                       join(r.scenario_horizons), int{r.feasible}, int{r.monotone}, r.inner_solves,
                       r.solver_iterations, r.unused_cache_bits, join(r.cache), join(r.throughput_bps));
  }
  return out;
}

Json results_json(const ResultTable& table) {
  Json rows = Json::array();
  for (const auto& r : table) {
    rows.push_back({{"axis", to_string(r.axis)},
                    {"buffer_bits", r.buffer_bits},
                    {"cache_bits", r.cache_bits},
                    {"scheme", to_string(r.scheme)},
                    {"seed", r.seed},
                    {"status", status_name(r.status)},
                    {"t_star", r.horizon},
                    {"scenario_t_star", r.scenario_horizons},
                    {"feasible", r.feasible},
                    {"monotone", r.monotone},
                    {"inner_solves", r.inner_solves},
                    {"solver_iterations", r.solver_iterations},
                    {"unused_cache_bits", r.unused_cache_bits},
                    {"cache_fraction", r.cache},
                    {"throughput_bps", r.throughput_bps}});
  }
  return Json{{"columns", kColumns}, {"rows", rows}};
}

ResultTable results_from_csv(const std::string& text) {
  ResultTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return table;
  if (line != fmt::format("{}", fmt::join(kColumns, ","))) throw std::invalid_argument("unexpected CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != std::size(kColumns)) throw std::invalid_argument(fmt::format("bad CSV row: {}", line));
    ResultRow r;
    r.axis = sweep_axis_from_string(f[0]);
    r.buffer_bits = std::stod(f[1]);
    r.cache_bits = std::stod(f[2]);
    r.scheme = scheme_from_string(f[3]);
    r.seed = std::stoull(f[4]);
    r.status = status_from(f[5]);
    r.horizon = std::stoi(f[6]);
    r.scenario_horizons = parse_list<int>(f[7]);
    r.feasible = f[8] == "1";
    r.monotone = f[9] == "1";
    r.inner_solves = std::stoi(f[10]);
    r.solver_iterations = std::stoll(f[11]);
    r.unused_cache_bits = std::stod(f[12]);
    r.cache = parse_list<double>(f[13]);
    r.throughput_bps = parse_list<double>(f[14]);
    table.push_back(std::move(r));
  }
  return table;
}

ResultTable results_from_json(const Json& j) {
  ResultTable table;
  for (const auto& o : j.at("rows")) {
    ResultRow r;
    r.axis = sweep_axis_from_string(o.at("axis").get<std::string>());
    r.buffer_bits = o.at("buffer_bits").get<double>();
    r.cache_bits = o.at("cache_bits").get<double>();
    r.scheme = scheme_from_string(o.at("scheme").get<std::string>());
    r.seed = o.at("seed").get<std::uint64_t>();
    r.status = status_from(o.at("status").get<std::string>());
    r.horizon = o.at("t_star").get<int>();
    r.scenario_horizons = o.at("scenario_t_star").get<std::vector<int>>();
    r.feasible = o.at("feasible").get<bool>();
    r.monotone = o.at("monotone").get<bool>();
    r.inner_solves = o.at("inner_solves").get<int>();
    r.solver_iterations = o.at("solver_iterations").get<long long>();
    r.unused_cache_bits = o.at("unused_cache_bits").get<double>();
    r.cache = o.at("cache_fraction").get<std::vector<double>>();
    r.throughput_bps = o.at("throughput_bps").get<std::vector<double>>();
    table.push_back(std::move(r));
  }
  return table;
}

void emit_results(const ResultTable& table, const std::filesystem::path& dir, const std::string& stem) {
  write_text_file(dir / (stem + ".csv"), results_csv(table));
  write_text_file(dir / (stem + ".json"), results_json(table).dump(2) + "\n");
}

}  // namespace relaycache
