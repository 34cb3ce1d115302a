#include "presolve.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

namespace relaycache::detail {

namespace {

// Merges duplicate variables and drops fixed ones into the rhs.
bool reduce_row(const LinearRow& row, const std::vector<int>& free_of_full,
                const std::vector<double>& fixed_value, ReducedRow& out) {
  std::map<int, double> merged;
  double rhs = row.rhs;
  double scale = std::abs(row.rhs);
  for (const auto& t : row.terms) {
    const int f = free_of_full[t.var];
    if (f < 0) {
      rhs -= t.coef * fixed_value[t.var];
      scale = std::max(scale, std::abs(t.coef * fixed_value[t.var]));
    } else {
      merged[f] += t.coef;
    }
  }
  out.terms.clear();
  for (const auto& [var, coef] : merged) {
    if (coef != 0.0) out.terms.push_back({var, coef});
  }
  out.rhs = rhs;
  if (!out.terms.empty()) return true;
  // Constant row: keep nothing, report whether it holds.
  const double tol = 1e-9 * (1.0 + scale);
  out.rhs = row.sense == RowSense::Equal ? std::abs(rhs) - tol : -rhs - tol;
  return false;
}

}  // namespace

ReducedProgram presolve(const ConvexProgram& program) {
  program.validate();
  ReducedProgram rp;
  const auto& vars = program.variables();
  const int n_full = program.num_variables();
  rp.n_full = n_full;

  std::vector<double> lower(n_full), upper(n_full);
  for (int i = 0; i < n_full; ++i) {
    lower[i] = vars[i].lower;
    upper[i] = vars[i].upper;
  }

  // Closure of the perspective at mu == 0 forces x <= 0.
  std::vector<char> cone_dropped(program.perspectives().size(), 0);
  for (std::size_t k = 0; k < program.perspectives().size(); ++k) {
    const auto& c = program.perspectives()[k];
    if (upper[c.mu] <= 0.0) {
      upper[c.mu] = 0.0;
      lower[c.mu] = 0.0;
      upper[c.x] = std::min(upper[c.x], 0.0);
      if (lower[c.x] > upper[c.x]) {
        rp.infeasible = true;
        rp.reason = "perspective with zero share requires a positive argument";
        return rp;
      }
      cone_dropped[k] = 1;
    }
  }

  std::vector<int> free_of_full(n_full, -1);
  rp.x_full.assign(n_full, 0.0);
  for (int i = 0; i < n_full; ++i) {
    if (lower[i] == upper[i]) {
      rp.x_full[i] = lower[i];
    } else {
      free_of_full[i] = rp.n();
      rp.full_of_free.push_back(i);
      rp.lower.push_back(lower[i]);
      rp.upper.push_back(upper[i]);
      rp.start.push_back(vars[i].start);
    }
  }

  rp.cost.assign(rp.n(), 0.0);
  for (const auto& t : program.objective()) {
    const int f = free_of_full[t.var];
    if (f < 0) {
      rp.cost_offset += t.coef * rp.x_full[t.var];
    } else {
      rp.cost[f] -= t.coef;
    }
  }

  for (const auto& row : program.rows()) {
    ReducedRow reduced;
    if (!reduce_row(row, free_of_full, rp.x_full, reduced)) {
      if (reduced.rhs > 0.0) {
        rp.infeasible = true;
        rp.reason = fmt::format("constant row {} is violated", to_string(row.tag));
        return rp;
      }
      continue;
    }
    (row.sense == RowSense::Equal ? rp.eq : rp.ineq).push_back(std::move(reduced));
  }

  for (std::size_t k = 0; k < program.perspectives().size(); ++k) {
    if (cone_dropped[k]) continue;
    const auto& c = program.perspectives()[k];
    ReducedPerspective rc;
    rc.a = c.x_scale;
    rc.log_gamma = std::log(c.s_scale);
    rc.x = free_of_full[c.x];
    rc.mu = free_of_full[c.mu];
    rc.s = free_of_full[c.s];
    rc.x_value = rp.x_full[c.x];
    rc.mu_value = rp.x_full[c.mu];
    rc.s_value = rp.x_full[c.s];
    if (rc.s < 0 && rc.s_value <= 0.0) {
      throw ProgramError("perspective epigraph variable fixed at zero with a positive share");
    }
    if (rc.x < 0 && rc.mu < 0 && rc.s < 0) {
      const double lhs = rc.mu_value * std::exp(rc.a * rc.x_value / rc.mu_value);
      if (lhs > c.s_scale * rc.s_value * (1.0 + 1e-9)) {
        rp.infeasible = true;
        rp.reason = "fully fixed perspective is violated";
        return rp;
      }
      continue;
    }
    rp.cones.push_back(rc);
  }
  return rp;
}

std::vector<double> interior_start(const ReducedProgram& rp) {
  std::vector<double> x(rp.n());
  for (int i = 0; i < rp.n(); ++i) {
    const double l = rp.lower[i];
    const double u = rp.upper[i];
    if (std::isfinite(rp.start[i]) && rp.start[i] > l && rp.start[i] < u) {
      x[i] = rp.start[i];
      continue;
    }
    double v = std::isfinite(rp.start[i]) ? rp.start[i] : 0.0;
    const double width = u - l;
    if (std::isfinite(l)) {
      const double push = std::isfinite(u) ? std::min(1e-2 * std::max(1.0, std::abs(l)), 0.25 * width)
                                           : 1e-2 * std::max(1.0, std::abs(l));
      v = std::max(v, l + push);
    }
    if (std::isfinite(u)) {
      const double push = std::isfinite(l) ? std::min(1e-2 * std::max(1.0, std::abs(u)), 0.25 * width)
                                           : 1e-2 * std::max(1.0, std::abs(u));
      v = std::min(v, u - push);
    }
    x[i] = v;
  }
  return x;
}

}  // namespace relaycache::detail
