#include "relaycache/reform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace relaycache {

double transform_rate(double mu, double power, double gain, const SystemConfig& config) {
  if (!(gain > 0.0)) throw RecoveryError(fmt::format("channel gain must be positive, got {}", gain));
  if (mu <= 0.0) return 0.0;
  const double w = config.sc_bandwidth;
  return w * config.slot_duration * mu * std::log2(1.0 + power * gain / (config.noise_psd * w));
}

double recover_power(double rate_bits, double mu, double gain, const SystemConfig& config) {
  if (!(gain > 0.0)) throw RecoveryError(fmt::format("channel gain must be positive, got {}", gain));
  if (rate_bits <= 0.0) return 0.0;
  if (!(mu > 0.0)) throw RecoveryError(fmt::format("rate {} bits on a subchannel with zero share", rate_bits));
  const double w = config.sc_bandwidth;
  return config.noise_psd * w / gain * std::expm1(rate_bits * std::numbers::ln2 / (mu * w * config.slot_duration));
}

double perspective_term(double mu, double rate_bits, double gain, const SystemConfig& config) {
  if (mu <= 0.0) return rate_bits <= 0.0 ? 0.0 : kInfinity;
  return mu / gain * std::expm1(rate_bits * std::numbers::ln2 / (mu * config.sc_bandwidth * config.slot_duration));
}

double perspective(double x, double y) {
  if (x <= 0.0) return y <= 0.0 ? 0.0 : kInfinity;
  return x * std::exp(y / x);
}

PerspectiveFragment perspective_fragment(double gain, double power_budget, double scale, const SystemConfig& config) {
  const double w = config.sc_bandwidth;
  const double gamma = power_budget * gain / (w * config.noise_psd);
  return {std::numbers::ln2 * scale / (w * config.slot_duration), gamma, -1.0 / gamma};
}

namespace {

// Cached volume, in units of the total file size, below which a fixed cache
// entry is treated as empty.
constexpr double kNegligibleCache = 1e-9;

void check_dimensions(std::span<const Scenario> scenarios, const SystemConfig& config, const InnerOptions& options) {
  if (scenarios.empty()) throw DimensionError("at least one scenario is required");
  if (options.horizon < 1) throw DimensionError(fmt::format("horizon must be at least 1, got {}", options.horizon));
  for (std::size_t w = 0; w < scenarios.size(); ++w) {
    const auto& ch = scenarios[w].channels;
    const auto R = scenarios[w].requests.size();
    if (ch.num_requests != static_cast<int>(R)) {
      throw DimensionError(fmt::format("scenario {}: {} requests but channels for {}", w, R, ch.num_requests));
    }
    if (ch.num_subcarriers != config.num_subcarriers) {
      throw DimensionError(fmt::format("scenario {}: channels have {} subcarriers, config has {}", w,
                                       ch.num_subcarriers, config.num_subcarriers));
    }
    if (ch.horizon < options.horizon) {
      throw DimensionError(fmt::format("scenario {}: channel horizon {} is shorter than {}", w, ch.horizon,
                                       options.horizon));
    }
    const auto links = static_cast<std::size_t>(ch.num_requests) * ch.num_subcarriers * ch.horizon;
    if (ch.source.size() != links || ch.relay.size() != links) {
      throw DimensionError(fmt::format("scenario {}: gain arrays do not match their dimensions", w));
    }
    validate_requests(scenarios[w].requests, config);
  }
  if (options.cache != nullptr &&
      (options.cache->num_relays != config.num_relays || options.cache->num_files != config.num_files)) {
    throw DimensionError("fixed cache does not match the configuration");
  }
  if (!options.sc_mask.empty()) {
    if (scenarios.size() != 1) throw DimensionError("a fixed SC assignment needs exactly one scenario");
    if (options.schedule != ScheduleMode::Adaptive) {
      throw DimensionError("a fixed SC assignment is only supported with the adaptive schedule");
    }
    const auto links = scenarios[0].requests.size() * static_cast<std::size_t>(config.num_subcarriers) *
                       static_cast<std::size_t>(options.horizon);
    if (options.sc_mask.size() != links) {
      throw DimensionError(fmt::format("SC assignment has {} entries, expected {}", options.sc_mask.size(), links));
    }
  }
}


// A point near the middle of the feasible region: small shares spread over
// the SCs, rates well inside their perspectives, queues consistent with
// the rates. Backends use it as a starting hint.
void seed_start(InnerProgram& inner, std::span<const Scenario> scenarios, const SystemConfig& config,
                const InnerOptions& options) {
  auto& vars = inner.program.variables();
  auto hint = [&](int var, double value) {
    if (var < 0) return;
    Variable& v = vars[static_cast<std::size_t>(var)];
    v.start = v.fixed() ? v.lower : std::clamp(value, v.lower, v.upper);
  };
  const int T = inner.horizon, F = inner.num_subcarriers;
  const double U = inner.scale;
  const double a = std::numbers::ln2 * U / (config.sc_bandwidth * config.slot_duration);
  double c0 = 0.0;
  for (std::size_t k = 0; k < inner.cache_vars.size(); ++k) {
    const int m = static_cast<int>(k) / inner.num_files;
    c0 = 0.5 * std::min(1.0, config.cache_capacity[static_cast<std::size_t>(m)] / U);
    hint(inner.cache_vars[k], c0);
  }
  for (std::size_t w = 0; w < scenarios.size(); ++w) {
    const ScenarioVars& v = inner.blocks[w];
    const auto& reqs = scenarios[w].requests;
    const int R = static_cast<int>(reqs.size());
    const double mu0 = 0.5 / std::max(F, R);
    for (int x : v.eta_s) hint(x, 0.5);
    for (int x : v.eta_r) hint(x, 0.5);
    double min_fraction = kInfinity;
    for (int r = 0; r < R; ++r) {
      const Request& q = reqs[static_cast<std::size_t>(r)];
      const double v_n = config.file_sizes[static_cast<std::size_t>(q.file)] / U;
      const double b_rel = std::min(0.1 * mu0 / a, 0.25 * v_n / (T * F));
      const double cached = options.cache ? options.cache->at(q.relay, q.file) : c0;
      const double b_c = std::min(0.1 * b_rel * F, 0.5 * cached * v_n / T);
      double qs = 0.0, qr = 0.0, qc = 0.0;
      for (int t = 1; t <= T; ++t) {
        for (int f = 0; f < F; ++f) {
          const auto k = (static_cast<std::size_t>(r) * F + f) * T + (t - 1);
          const Variable& mu = vars[static_cast<std::size_t>(v.mu[k])];
          const double mu_v = mu.fixed() ? mu.lower : mu0;
          const bool s_on = vars[static_cast<std::size_t>(v.mu_s[k])].upper > 0.0;
          const bool r_on = vars[static_cast<std::size_t>(v.mu_r[k])].upper > 0.0;
          const double share = mu_v / std::max(1, int{s_on} + int{r_on});
          hint(v.mu[k], mu_v);
          hint(v.mu_s[k], s_on ? share : 0.0);
          hint(v.mu_r[k], r_on ? share : 0.0);
          const double bs = std::min(0.3 * share / a, 1.2 * b_rel);
          hint(v.b_s[k], bs);
          hint(v.b_r[k], b_rel);
          qs += vars[static_cast<std::size_t>(v.b_s[k])].start;
          qr += vars[static_cast<std::size_t>(v.b_r[k])].start;
        }
        const auto rt = static_cast<std::size_t>(r) * T + (t - 1);
        hint(v.b_c[rt], b_c);
        qc += vars[static_cast<std::size_t>(v.b_c[rt])].start;
        hint(v.q_s[rt], qs);
        hint(v.q_r[rt], qr);
        hint(v.q_c[rt], qc);
      }
      min_fraction = std::min(min_fraction, qr / v_n);
    }
    if (inner.completion_var >= 0) hint(inner.completion_var, 0.5 * min_fraction);
  }
}

}  // namespace

InnerProgram build_inner_program(std::span<const Scenario> scenarios, const SystemConfig& config,
                                 const InnerOptions& options) {
  config.validate();
  check_dimensions(scenarios, config, options);

  InnerProgram inner;
  const int T = options.horizon;
  const int F = config.num_subcarriers;
  const int M = config.num_relays;
  const int N = config.num_files;
  inner.horizon = T;
  inner.num_subcarriers = F;
  inner.num_relays = M;
  inner.num_files = N;
  inner.scale = config.total_file_size();
  inner.slot_duration = config.slot_duration;
  const double U = inner.scale;
  const double delta = config.slot_duration;
  ConvexProgram& p = inner.program;
  const bool free_cache = options.cache == nullptr;

  if (free_cache) {
    inner.cache_vars.resize(static_cast<std::size_t>(M * N));
    for (int m = 0; m < M; ++m) {
      std::vector<LinearTerm> c1;
      for (int n = 0; n < N; ++n) {
        const int c = p.add_variable(VarFamily::CacheFraction, {-1, m, n, -1}, 0.0, 1.0);
        inner.cache_vars[static_cast<std::size_t>(m * N + n)] = c;
        c1.push_back({c, config.file_sizes[static_cast<std::size_t>(n)] / U});
      }
      p.add_row(std::move(c1), RowSense::LessEqual, config.cache_capacity[static_cast<std::size_t>(m)] / U,
                ConstraintTag::C1, {-1, m, -1, -1});
    }
  }
  if (options.objective == InnerObjective::CompletionFraction) {
    inner.completion_var = p.add_variable(VarFamily::CompletionFraction, kNoIndex, -kInfinity, kInfinity);
    p.add_objective(inner.completion_var, 1.0);
  }

  for (int w = 0; w < static_cast<int>(scenarios.size()); ++w) {
    const Scenario& sc = scenarios[static_cast<std::size_t>(w)];
    const ChannelRealization& ch = sc.channels;
    const int R = static_cast<int>(sc.requests.size());
    inner.num_requests.push_back(R);
    ScenarioVars v;
    const auto links = static_cast<std::size_t>(R) * F * T;
    for (auto* vec : {&v.mu, &v.mu_s, &v.mu_r, &v.b_s, &v.b_r, &v.s_s, &v.s_r}) vec->assign(links, -1);
    v.eta_s.assign(static_cast<std::size_t>(M) * T, -1);
    v.eta_r.assign(static_cast<std::size_t>(M) * T, -1);
    for (auto* vec : {&v.b_c, &v.q_s, &v.q_r, &v.q_c}) vec->assign(static_cast<std::size_t>(R) * T, -1);
    auto link = [&](int r, int f, int t) { return (static_cast<std::size_t>(r) * F + f) * T + (t - 1); };
    auto rs = [&](int r, int t) { return static_cast<std::size_t>(r) * T + (t - 1); };
    auto ms = [&](int m, int t) { return static_cast<std::size_t>(m) * T + (t - 1); };

    for (int m = 0; m < M; ++m) {
      for (int t = 1; t <= T; ++t) {
        const IndexTuple idx{w, m, -1, t};
        v.eta_s[ms(m, t)] = p.add_variable(VarFamily::TimeSplitSource, idx, 0.0, 1.0, 0.5);
        v.eta_r[ms(m, t)] = p.add_variable(VarFamily::TimeSplitRelay, idx, 0.0, 1.0, 0.5);
        p.add_row({{v.eta_s[ms(m, t)], 1.0}, {v.eta_r[ms(m, t)], 1.0}}, RowSense::Equal, 1.0, ConstraintTag::C5, idx);
      }
    }

    // Which hops may carry data, and which cumulative queues are
    // structurally zero. Fixing the latter keeps the feasible set with a
    // nonempty interior when schedules or assignments switch links off.
    auto hop_enabled = [&](int r, int f, int t, bool source) {
      if (options.schedule == ScheduleMode::FixedAlternating) {
        // Odd slots fetch only, even slots deliver only.
        if (source != (t % 2 == 1)) return false;
      }
      return options.sc_mask.empty() || options.sc_mask[link(r, f, t)] != 0;
    };
    std::vector<char> qs_zero(static_cast<std::size_t>(R) * T), qr_zero(qs_zero.size()), cache_on(R);
    for (int r = 0; r < R; ++r) {
      const Request& q = sc.requests[static_cast<std::size_t>(r)];
      // A sliver of cached data (solver residue from a joint solve) would leave
      // C10 with an interior too thin to track; ignoring it is conservative.
      const double cached_units = free_cache ? 0.0 : options.cache->at(q.relay, q.file) * config.file_sizes[static_cast<std::size_t>(q.file)] / U;
      cache_on[r] = free_cache || cached_units > kNegligibleCache;
      bool any_s = false, any_r = false;
      for (int t = 1; t <= T; ++t) {
        for (int f = 0; f < F; ++f) {
          any_s = any_s || hop_enabled(r, f, t, true);
          any_r = any_r || hop_enabled(r, f, t, false);
        }
        qs_zero[rs(r, t)] = !any_s;
        qr_zero[rs(r, t)] = !any_r || (!any_s && !cache_on[r]);
      }
    }

    for (int t = 1; t <= T; ++t) {
      std::vector<LinearTerm> c8_rows[2];
      for (int r = 0; r < R; ++r) {
        const int m = sc.requests[static_cast<std::size_t>(r)].relay;
        std::vector<LinearTerm> c6;
        for (int f = 0; f < F; ++f) {
          const auto k = link(r, f, t);
          const IndexTuple idx{w, r, f, t};
          const signed char fixed = options.sc_mask.empty() ? -1 : options.sc_mask[k];
          Variable mu{VarFamily::ScShare, idx, 0.0, 1.0};
          mu.bound_tag = ConstraintTag::C4;
          if (fixed >= 0) mu.lower = mu.upper = fixed;
          v.mu[k] = p.add_variable(mu);
          c6.push_back({v.mu[k], 1.0});

          for (int hop = 0; hop < 2; ++hop) {
            const bool source = hop == 0;
            const bool on = hop_enabled(r, f, t, source) && !(source ? false : qr_zero[rs(r, t)]);
            const bool shares_on = hop_enabled(r, f, t, source);
            const VarFamily share_family = source ? VarFamily::HopShareSource : VarFamily::HopShareRelay;
            const int share = p.add_variable(share_family, idx, 0.0, shares_on ? 1.0 : 0.0);
            const int rate = p.add_variable(source ? VarFamily::RateSource : VarFamily::RateRelay, idx, 0.0,
                                            on ? kInfinity : 0.0);
            const int eps = p.add_variable(source ? VarFamily::PowerSource : VarFamily::PowerRelay, idx, 0.0,
                                           shares_on ? kInfinity : 0.0);
            (source ? v.mu_s : v.mu_r)[k] = share;
            (source ? v.b_s : v.b_r)[k] = rate;
            (source ? v.s_s : v.s_r)[k] = eps;
            const int eta = (source ? v.eta_s : v.eta_r)[ms(m, t)];
            p.add_row({{share, 1.0}, {eta, -1.0}}, fixed == 1 ? RowSense::Equal : RowSense::LessEqual, 0.0,
                      ConstraintTag::C3, idx);
            if (!shares_on) continue;
            const double gain = source ? ch.h_source(r, f, t) : ch.h_relay(r, f, t);
            const double budget = source ? config.tx_power_source : config.tx_power_relay;
            const auto frag = perspective_fragment(gain, budget, U, config);
            p.add_perspective({rate, share, eps, frag.x_scale, frag.s_scale, ConstraintTag::C8, idx});
            c8_rows[hop].push_back({eps, 1.0});
            c8_rows[hop].push_back({share, frag.mu_coef});
          }
          // With the SC held by this request, C3 equalities and C5 already imply C2.
          if (fixed != 1) {
            p.add_row({{v.mu[k], 1.0}, {v.mu_s[k], -1.0}, {v.mu_r[k], -1.0}}, RowSense::Equal, 0.0,
                      ConstraintTag::C2, idx);
          }
        }
        p.add_row(std::move(c6), RowSense::LessEqual, 1.0, ConstraintTag::C6, {w, r, -1, t});
      }
      for (int f = 0; f < F; ++f) {
        std::vector<LinearTerm> c7;
        for (int r = 0; r < R; ++r) c7.push_back({v.mu[link(r, f, t)], 1.0});
        p.add_row(std::move(c7), RowSense::LessEqual, 1.0, ConstraintTag::C7, {w, -1, f, t});
      }
      for (int hop = 0; hop < 2; ++hop) {
        if (c8_rows[hop].empty()) continue;
        p.add_row(std::move(c8_rows[hop]), RowSense::LessEqual, 1.0, ConstraintTag::C8, {w, hop, -1, t});
      }
    }

    // Cumulative queues as affine functions of the per-slot increments.
    for (int r = 0; r < R; ++r) {
      const Request& q = sc.requests[static_cast<std::size_t>(r)];
      const double v_n = config.file_sizes[static_cast<std::size_t>(q.file)] / U;
      for (int t = 1; t <= T; ++t) {
        const IndexTuple idx{w, r, -1, t};
        const double qs_ub = qs_zero[rs(r, t)] ? 0.0 : kInfinity;
        const double qr_ub = qr_zero[rs(r, t)] ? 0.0 : kInfinity;
        const double qc_ub = cache_on[r] ? kInfinity : 0.0;
        v.b_c[rs(r, t)] = p.add_variable(VarFamily::CacheFetch, idx, 0.0, cache_on[r] ? kInfinity : 0.0);
        v.q_s[rs(r, t)] = p.add_variable(VarFamily::QueueSource, idx, qs_ub == 0.0 ? 0.0 : -kInfinity, qs_ub);
        v.q_r[rs(r, t)] = p.add_variable(VarFamily::QueueRelay, idx, qr_ub == 0.0 ? 0.0 : -kInfinity, qr_ub);
        v.q_c[rs(r, t)] = p.add_variable(VarFamily::QueueCache, idx, qc_ub == 0.0 ? 0.0 : -kInfinity, qc_ub);
        const int prev = t > 1 ? static_cast<int>(rs(r, t - 1)) : -1;
        std::vector<LinearTerm> es{{v.q_s[rs(r, t)], 1.0}}, er{{v.q_r[rs(r, t)], 1.0}},
            ec{{v.q_c[rs(r, t)], 1.0}, {v.b_c[rs(r, t)], -1.0}};
        if (prev >= 0) {
          es.push_back({v.q_s[static_cast<std::size_t>(prev)], -1.0});
          er.push_back({v.q_r[static_cast<std::size_t>(prev)], -1.0});
          ec.push_back({v.q_c[static_cast<std::size_t>(prev)], -1.0});
        }
        for (int f = 0; f < F; ++f) {
          es.push_back({v.b_s[link(r, f, t)], -1.0});
          er.push_back({v.b_r[link(r, f, t)], -1.0});
        }
        p.add_row(std::move(es), RowSense::Equal, 0.0, ConstraintTag::QueueEvolution, idx);
        p.add_row(std::move(er), RowSense::Equal, 0.0, ConstraintTag::QueueEvolution, idx);
        p.add_row(std::move(ec), RowSense::Equal, 0.0, ConstraintTag::QueueEvolution, idx);

        p.add_row({{v.q_r[rs(r, t)], 1.0}, {v.q_s[rs(r, t)], -1.0}, {v.q_c[rs(r, t)], -1.0}}, RowSense::LessEqual,
                  0.0, ConstraintTag::C9, idx);
        p.add_row({{v.q_r[rs(r, t)], 1.0}}, RowSense::LessEqual, v_n, ConstraintTag::C9, idx);
        if (free_cache) {
          p.add_row({{v.q_c[rs(r, t)], 1.0},
                     {inner.cache_vars[static_cast<std::size_t>(q.relay * N + q.file)], -v_n}},
                    RowSense::LessEqual, 0.0, ConstraintTag::C10, idx);
        } else {
          p.add_row({{v.q_c[rs(r, t)], 1.0}}, RowSense::LessEqual, options.cache->at(q.relay, q.file) * v_n,
                    ConstraintTag::C10, idx);
        }
        const double eps = config.delay_for_user(config.global_user(q.relay, q.user));
        const double floor = config.min_rate * delta * std::max(t - eps, 0.0) / U;
        if (floor > 0.0) {
          p.add_row({{v.q_r[rs(r, t)], -1.0}}, RowSense::LessEqual, -floor, ConstraintTag::C13, idx);
        }
      }
      if (options.objective == InnerObjective::Throughput) {
        p.add_objective(v.q_r[rs(r, T)], 1.0);
      } else {
        p.add_row({{v.q_r[rs(r, T)], -1.0}, {inner.completion_var, v_n}}, RowSense::LessEqual, 0.0,
                  ConstraintTag::Completion, {w, r, -1, T});
      }
    }

    for (int t = 1; t <= T; ++t) {
      for (int m = 0; m < M; ++m) {
        std::vector<LinearTerm> c11;
        for (int r = 0; r < R; ++r) {
          if (sc.requests[static_cast<std::size_t>(r)].relay != m) continue;
          c11.push_back({v.q_s[rs(r, t)], 1.0});
          if (t > 1) {
            c11.push_back({v.q_c[rs(r, t - 1)], 1.0});
            c11.push_back({v.q_r[rs(r, t - 1)], -1.0});
          }
        }
        if (c11.empty()) continue;
        p.add_row(std::move(c11), RowSense::LessEqual, config.buffer_capacity[static_cast<std::size_t>(m)] / U,
                  ConstraintTag::C11, {w, m, -1, t});
      }
      std::vector<LinearTerm> c12;
      for (int r = 0; r < R; ++r) {
        c12.push_back({v.q_s[rs(r, t)], 1.0});
        if (t > 1) c12.push_back({v.q_s[rs(r, t - 1)], -1.0});
      }
      p.add_row(std::move(c12), RowSense::LessEqual, config.backhaul_at(t) * delta / U, ConstraintTag::C12,
                {w, -1, -1, t});
    }
    inner.blocks.push_back(std::move(v));
  }
  seed_start(inner, scenarios, config, options);
  return inner;
}

DeliveryPlan extract_plan(const InnerProgram& inner, std::span<const double> x, int scenario) {
  const ScenarioVars& v = inner.blocks.at(static_cast<std::size_t>(scenario));
  const int R = inner.num_requests[static_cast<std::size_t>(scenario)];
  DeliveryPlan plan = DeliveryPlan::zeros(inner.horizon, R, inner.num_subcarriers, inner.num_relays);
  auto get = [&](int var) { return var < 0 ? 0.0 : x[static_cast<std::size_t>(var)]; };
  // Interior iterates sit a hair inside the bounds; clip so the plan is a
  // clean point of the box.
  auto unit = [](double a) { return std::clamp(a, 0.0, 1.0); };
  auto nonneg = [](double a) { return std::max(a, 0.0); };
  for (std::size_t k = 0; k < v.mu.size(); ++k) {
    plan.sc_share[k] = unit(get(v.mu[k]));
    plan.share_source[k] = unit(get(v.mu_s[k]));
    plan.share_relay[k] = unit(get(v.mu_r[k]));
    plan.rate_source[k] = nonneg(get(v.b_s[k])) * inner.scale;
    plan.rate_relay[k] = nonneg(get(v.b_r[k])) * inner.scale;
  }
  for (std::size_t k = 0; k < v.eta_s.size(); ++k) {
    plan.split_source[k] = unit(get(v.eta_s[k]));
    plan.split_relay[k] = unit(get(v.eta_r[k]));
  }
  for (std::size_t k = 0; k < v.b_c.size(); ++k) {
    plan.cache_rate[k] = nonneg(get(v.b_c[k])) * inner.scale / inner.slot_duration;
  }
  return plan;
}

CacheAllocation extract_cache(const InnerProgram& inner, std::span<const double> x) {
  CacheAllocation c = CacheAllocation::empty(inner.num_relays, inner.num_files);
  if (inner.cache_vars.empty()) throw DimensionError("program was built with a fixed cache");
  for (std::size_t k = 0; k < inner.cache_vars.size(); ++k) {
    c.fraction[k] = std::clamp(x[static_cast<std::size_t>(inner.cache_vars[k])], 0.0, 1.0);
  }
  return c;
}

RecoveredPower recover_plan_power(const DeliveryPlan& plan, const ChannelRealization& channels,
                                  const SystemConfig& config) {
  RecoveredPower out;
  out.source.assign(plan.sc_share.size(), 0.0);
  out.relay.assign(plan.sc_share.size(), 0.0);
  for (int r = 0; r < plan.num_requests; ++r) {
    for (int f = 0; f < plan.num_subcarriers; ++f) {
      for (int t = 1; t <= plan.horizon; ++t) {
        const auto k = plan.link(r, f, t);
        out.source[k] = recover_power(plan.rate_source[k], plan.share_source[k], channels.h_source(r, f, t), config);
        out.relay[k] = recover_power(plan.rate_relay[k], plan.share_relay[k], channels.h_relay(r, f, t), config);
      }
    }
  }
  return out;
}

std::set<ConstraintTag> constraint_coverage(const ConvexProgram& program) {
  std::set<ConstraintTag> tags;
  for (const auto& row : program.rows()) tags.insert(row.tag);
  for (const auto& cone : program.perspectives()) tags.insert(cone.tag);
  for (const auto& var : program.variables()) {
    if (var.bound_tag != ConstraintTag::None) tags.insert(var.bound_tag);
  }
  return tags;
}

std::vector<ConstraintTag> missing_tags(const ConvexProgram& program, bool expect_c1, bool expect_c13) {
  const auto tags = constraint_coverage(program);
  std::vector<ConstraintTag> missing;
  for (int k = 0; k <= static_cast<int>(ConstraintTag::C13); ++k) {
    const auto tag = static_cast<ConstraintTag>(k);
    if (tag == ConstraintTag::C1 && !expect_c1) continue;
    if (tag == ConstraintTag::C13 && !expect_c13) continue;
    if (!tags.count(tag)) missing.push_back(tag);
  }
  return missing;
}

std::vector<signed char> binary_assignment(const DeliveryPlan& relaxed, double threshold) {
  const int R = relaxed.num_requests, F = relaxed.num_subcarriers, T = relaxed.horizon;
  std::vector<signed char> mask(relaxed.sc_share.size(), 0);
  struct Pair {
    double mu;
    int r, f;
  };
  for (int t = 1; t <= T; ++t) {
    std::vector<Pair> pairs;
    for (int r = 0; r < R; ++r) {
      for (int f = 0; f < F; ++f) pairs.push_back({relaxed.sc_share[relaxed.link(r, f, t)], r, f});
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.mu > b.mu; });
    std::vector<char> sc_taken(static_cast<std::size_t>(F), 0), req_taken(static_cast<std::size_t>(R), 0);
    for (const Pair& pr : pairs) {
      if (pr.mu <= threshold) break;
      if (sc_taken[static_cast<std::size_t>(pr.f)] || req_taken[static_cast<std::size_t>(pr.r)]) continue;
      sc_taken[static_cast<std::size_t>(pr.f)] = req_taken[static_cast<std::size_t>(pr.r)] = 1;
      mask[relaxed.link(pr.r, pr.f, t)] = 1;
    }
  }
  return mask;
}

RoundingResult round_sc_assignment(const DeliveryPlan& relaxed, double relaxed_bits, const Scenario& scenario,
                                   const CacheAllocation& cache, const SystemConfig& config, ScheduleMode schedule,
                                   const SolverSettings& settings) {
  RoundingResult out;
  out.mask = binary_assignment(relaxed);
  out.relaxed_bits = relaxed_bits;
  InnerOptions opts;
  opts.horizon = relaxed.horizon;
  opts.schedule = schedule;
  opts.cache = &cache;
  opts.sc_mask = out.mask;
  const InnerProgram inner = build_inner_program(std::span(&scenario, 1), config, opts);
  out.solution = solve(inner.program, settings);
  if (out.solution.optimal()) {
    out.plan = extract_plan(inner, out.solution.values);
    out.rounded_bits = inner.to_bits(out.solution.objective);
    out.gap_bits = out.relaxed_bits - out.rounded_bits;
  }
  return out;
}

void for_each_binary_assignment(int requests, int subcarriers, int horizon,
                                const std::function<void(const std::vector<signed char>&)>& visit) {
  const int R = requests, F = subcarriers, T = horizon;
  std::vector<signed char> mask(static_cast<std::size_t>(R) * F * T, 0);
  // owner[f + F*(t-1)] in [-1, R): which request holds SC f in slot t.
  std::vector<int> owner(static_cast<std::size_t>(F) * T, -1);
  auto at = [&](int r, int f, int t) { return (static_cast<std::size_t>(r) * F + f) * T + (t - 1); };
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == owner.size()) {
      visit(mask);
      return;
    }
    const int f = static_cast<int>(pos % static_cast<std::size_t>(F));
    const int t = static_cast<int>(pos / static_cast<std::size_t>(F)) + 1;
    rec(pos + 1);
    for (int r = 0; r < R; ++r) {
      bool busy = false;
      for (int g = 0; g < f && !busy; ++g) busy = owner[pos - static_cast<std::size_t>(f - g)] == r;
      if (busy) continue;
      owner[pos] = r;
      mask[at(r, f, t)] = 1;
      rec(pos + 1);
      mask[at(r, f, t)] = 0;
      owner[pos] = -1;
    }
  };
  rec(0);
}

}  // namespace relaycache
