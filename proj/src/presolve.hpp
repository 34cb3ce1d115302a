#pragma once

// Internal: reduction of a ConvexProgram to its free variables, shared by
// the solver backends.

#include <cmath>
#include <string>
#include <vector>

#include "relaycache/program.hpp"

namespace relaycache::detail {

struct ReducedRow {
  std::vector<LinearTerm> terms;  // indices into the free-variable space
  double rhs = 0.0;
};

/// Perspective in free-variable space. A component is either free (index
/// >= 0) or fixed at `*_value`.
struct ReducedPerspective {
  int x = -1, mu = -1, s = -1;
  double x_value = 0.0, mu_value = 0.0, s_value = 0.0;
  double a = 1.0;          // x_scale
  double log_gamma = 0.0;  // log(s_scale)

  struct Eval {
    double g;
    double grad[3];  // d/dx, d/dmu, d/ds
    double hess_mumu, hess_mus, hess_ss;
  };

  template <typename Vec>
  Eval evaluate(const Vec& x_free) const {
    const double xv = x >= 0 ? x_free[x] : x_value;
    const double muv = mu >= 0 ? x_free[mu] : mu_value;
    const double sv = s >= 0 ? x_free[s] : s_value;
    // g = a x - mu log(gamma s / mu)
    const double log_ratio = log_gamma + std::log(sv) - std::log(muv);
    Eval e;
    e.g = a * xv - muv * log_ratio;
    e.grad[0] = a;
    e.grad[1] = 1.0 - log_ratio;
    e.grad[2] = -muv / sv;
    e.hess_mumu = 1.0 / muv;
    e.hess_mus = -1.0 / sv;
    e.hess_ss = muv / (sv * sv);
    return e;
  }
};

struct ReducedProgram {
  int n_full = 0;
  std::vector<double> x_full;  // fixed values; free slots are placeholders
  std::vector<int> full_of_free;
  std::vector<double> lower, upper, start;
  std::vector<double> cost;  // minimize cost^T x
  double cost_offset = 0.0;  // contribution of fixed variables to the objective
  std::vector<ReducedRow> eq, ineq;
  std::vector<ReducedPerspective> cones;
  bool infeasible = false;
  std::string reason;

  int n() const { return static_cast<int>(full_of_free.size()); }

  template <typename Vec>
  std::vector<double> expand(const Vec& x_free) const {
    std::vector<double> out = x_full;
    for (int i = 0; i < n(); ++i) out[full_of_free[i]] = x_free[i];
    return out;
  }
};

/// Validates and reduces. Perspectives whose mu is fixed at zero are
/// replaced by x <= 0; fixed variables are substituted into rows.
ReducedProgram presolve(const ConvexProgram& program);

/// Interior starting point inside the boxes, honoring start hints.
std::vector<double> interior_start(const ReducedProgram& rp);

}  // namespace relaycache::detail
