#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "presolve.hpp"
#include "relaycache/solver.hpp"

namespace relaycache {

namespace {

using detail::ReducedProgram;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Variables are stacked as [x; w] with G x + w = h and A x = b.
class DenseBarrier {
 public:
  DenseBarrier(const ReducedProgram& rp, const SolverSettings& settings)
      : rp_(rp), settings_(settings), n_(rp.n()), me_(static_cast<int>(rp.eq.size())),
        mi_(static_cast<int>(rp.ineq.size())) {
    const int dim = n_ + mi_;
    aeq_ = Mat::Zero(me_ + mi_, dim);
    beq_ = Vec::Zero(me_ + mi_);
    for (int e = 0; e < me_; ++e) {
      for (const auto& t : rp.eq[e].terms) aeq_(e, t.var) += t.coef;
      beq_[e] = rp.eq[e].rhs;
    }
    for (int j = 0; j < mi_; ++j) {
      for (const auto& t : rp.ineq[j].terms) aeq_(me_ + j, t.var) += t.coef;
      aeq_(me_ + j, n_ + j) = 1.0;
      beq_[me_ + j] = rp.ineq[j].rhs;
    }
  }

  Solution run() {
    Solution sol;
    Vec z = start();
    if (z.size() == 0) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "could not build a starting point inside the perspective domain";
      return sol;
    }
    Vec nu = Vec::Zero(me_ + mi_);
    const double barrier_terms =
        static_cast<double>(mi_ + rp_.cones.size() + count_finite_bounds());
    double t = 1.0;
    int total_newton = 0;
    while (true) {
      if (!center(z, nu, t, total_newton)) {
        sol.status = SolveStatus::NumericalFailure;
        sol.message = "centering failed";
        break;
      }
      if (barrier_terms / t <= settings_.tolerance) {
        sol.status = SolveStatus::Optimal;
        break;
      }
      if (total_newton > 50 * settings_.max_iterations) {
        sol.status = SolveStatus::IterationLimit;
        break;
      }
      t *= 10.0;
    }
    sol.iterations = total_newton;
    sol.values = rp_.expand(z.head(n_));
    double obj = rp_.cost_offset;
    for (int i = 0; i < n_; ++i) obj -= rp_.cost[i] * z[i];
    sol.objective = obj;
    sol.primal_residual = (aeq_ * z - beq_).lpNorm<Eigen::Infinity>();
    sol.complementarity = barrier_terms / t;
    return sol;
  }

 private:
  std::size_t count_finite_bounds() const {
    std::size_t count = 0;
    for (int i = 0; i < n_; ++i) {
      count += std::isfinite(rp_.lower[i]) ? 1 : 0;
      count += std::isfinite(rp_.upper[i]) ? 1 : 0;
    }
    return count;
  }

  Vec start() const {
    const auto x0 = detail::interior_start(rp_);
    Vec z(n_ + mi_);
    for (int i = 0; i < n_; ++i) z[i] = x0[i];
    // Raise free epigraph variables until every perspective is strictly
    // satisfied.
    for (const auto& c : rp_.cones) {
      const double xv = c.x >= 0 ? z[c.x] : c.x_value;
      const double muv = c.mu >= 0 ? z[c.mu] : c.mu_value;
      if (c.evaluate(z).g < -1e-3 * muv) continue;
      if (c.s < 0) return {};
      const double target = std::exp(c.a * xv / muv + 1.0 - c.log_gamma) * muv;
      if (!std::isfinite(target) || target >= rp_.upper[c.s]) return {};
      z[c.s] = std::max(z[c.s], target);
    }
    for (int j = 0; j < mi_; ++j) {
      double lhs = 0.0;
      for (const auto& t : rp_.ineq[j].terms) lhs += t.coef * z[t.var];
      z[n_ + j] = std::max(rp_.ineq[j].rhs - lhs, 1.0);
    }
    return z;
  }

  bool in_domain(const Vec& z) const {
    for (int i = 0; i < n_; ++i) {
      if (!(z[i] > rp_.lower[i]) || !(z[i] < rp_.upper[i])) return false;
    }
    for (int j = 0; j < mi_; ++j) {
      if (!(z[n_ + j] > 0.0)) return false;
    }
    for (const auto& c : rp_.cones) {
      if (!(c.evaluate(z).g < 0.0)) return false;
    }
    return true;
  }

  void gradient_hessian(const Vec& z, double t, Vec& grad, Mat& hess) const {
    const int dim = n_ + mi_;
    grad = Vec::Zero(dim);
    hess = Mat::Zero(dim, dim);
    for (int i = 0; i < n_; ++i) {
      grad[i] += t * rp_.cost[i];
      if (std::isfinite(rp_.lower[i])) {
        const double s = z[i] - rp_.lower[i];
        grad[i] -= 1.0 / s;
        hess(i, i) += 1.0 / (s * s);
      }
      if (std::isfinite(rp_.upper[i])) {
        const double s = rp_.upper[i] - z[i];
        grad[i] += 1.0 / s;
        hess(i, i) += 1.0 / (s * s);
      }
    }
    for (int j = 0; j < mi_; ++j) {
      const double w = z[n_ + j];
      grad[n_ + j] -= 1.0 / w;
      hess(n_ + j, n_ + j) += 1.0 / (w * w);
    }
    for (const auto& c : rp_.cones) {
      const auto e = c.evaluate(z);
      const int idx[3] = {c.x, c.mu, c.s};
      const double neg = -e.g;
      const double h[3][3] = {{0.0, 0.0, 0.0},
                              {0.0, e.hess_mumu, e.hess_mus},
                              {0.0, e.hess_mus, e.hess_ss}};
      for (int p = 0; p < 3; ++p) {
        if (idx[p] < 0) continue;
        grad[idx[p]] += e.grad[p] / neg;
        for (int q = 0; q < 3; ++q) {
          if (idx[q] < 0) continue;
          hess(idx[p], idx[q]) += e.grad[p] * e.grad[q] / (neg * neg) + h[p][q] / neg;
        }
      }
    }
  }

  double residual_norm(const Vec& z, const Vec& nu, double t) const {
    Vec grad;
    Mat hess;
    gradient_hessian(z, t, grad, hess);
    const Vec rd = grad + aeq_.transpose() * nu;
    const Vec rp = aeq_ * z - beq_;
    return std::sqrt(rd.squaredNorm() + rp.squaredNorm());
  }

  double barrier_value(const Vec& z, double t) const {
    double f = 0.0;
    for (int i = 0; i < n_; ++i) {
      f += t * rp_.cost[i] * z[i];
      if (std::isfinite(rp_.lower[i])) f -= std::log(z[i] - rp_.lower[i]);
      if (std::isfinite(rp_.upper[i])) f -= std::log(rp_.upper[i] - z[i]);
    }
    for (int j = 0; j < mi_; ++j) f -= std::log(z[n_ + j]);
    for (const auto& c : rp_.cones) f -= std::log(-c.evaluate(z).g);
    return f;
  }

  // Newton's method on the barrier problem at parameter t: residual-norm
  // damping until A z = b holds, then damping on the barrier value.
  bool center(Vec& z, Vec& nu, double t, int& counter) const {
    const int dim = n_ + mi_;
    const int meq = me_ + mi_;
    const double feas_tol = 1e-10 * (1.0 + beq_.lpNorm<Eigen::Infinity>());
    double previous = kInfinity;
    int stagnant = 0;
    for (int iter = 0; iter < 200; ++iter) {
      ++counter;
      Vec grad;
      Mat hess;
      gradient_hessian(z, t, grad, hess);
      const Vec rd = grad + aeq_.transpose() * nu;
      const Vec rp = aeq_ * z - beq_;
      Mat kkt = Mat::Zero(dim + meq, dim + meq);
      kkt.topLeftCorner(dim, dim) = hess;
      kkt.topRightCorner(dim, meq) = aeq_.transpose();
      kkt.bottomLeftCorner(meq, dim) = aeq_;
      Vec rhs(dim + meq);
      rhs.head(dim) = -rd;
      rhs.tail(meq) = -rp;
      // Barrier Hessian entries grow like t^2; the default rank threshold
      // would zero out the constraint pivots long before that matters.
      Eigen::FullPivLU<Mat> lu(kkt);
      lu.setThreshold(1e-300);
      Vec step = lu.solve(rhs);
      step += lu.solve(rhs - kkt * step);
      const Vec dz = step.head(dim);
      const Vec dnu = step.tail(meq);
      if (!dz.allFinite()) return false;

      if (rp.lpNorm<Eigen::Infinity>() <= feas_tol) {
        const double slope = grad.dot(dz);
        const double dec = -slope;
        stagnant = std::abs(dec) <= 1e-5 && std::abs(dec) > 0.25 * previous ? stagnant + 1 : 0;
        previous = dec;
        if (dec / 2.0 <= 1e-10 || stagnant >= 2) {
          nu += dnu;
          return true;
        }
        const double f0 = barrier_value(z, t);
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60 && !accepted; ++ls, alpha *= 0.5) {
          const Vec zn = z + alpha * dz;
          if (in_domain(zn) && (dec < 0.1 || barrier_value(zn, t) <= f0 + 0.01 * alpha * slope)) {
            z = zn;
            nu += alpha * dnu;
            accepted = true;
          }
        }
        if (!accepted) return false;
        continue;
      }

      const double rnorm = std::sqrt(rd.squaredNorm() + rp.squaredNorm());
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60 && !accepted; ++ls, alpha *= 0.5) {
        const Vec zn = z + alpha * dz;
        if (!in_domain(zn)) continue;
        const Vec nun = nu + alpha * dnu;
        if (residual_norm(zn, nun, t) <= (1.0 - 0.01 * alpha) * rnorm) {
          z = zn;
          nu = nun;
          accepted = true;
        }
      }
      if (!accepted) return false;
    }
    return false;
  }

  const ReducedProgram& rp_;
  const SolverSettings& settings_;
  int n_, me_, mi_;
  Mat aeq_;
  Vec beq_;
};

}  // namespace

Solution DenseBarrierSolver::solve(const ConvexProgram& program, const SolverSettings& settings) {
  const ReducedProgram rp = detail::presolve(program);
  Solution sol;
  if (rp.infeasible) {
    sol.status = SolveStatus::Infeasible;
    sol.message = rp.reason;
    sol.values = rp.x_full;
    return sol;
  }
  if (rp.n() > 600) throw ProgramError("dense barrier backend is limited to 600 free variables");
  if (rp.n() == 0) {
    sol.status = SolveStatus::Optimal;
    sol.values = rp.x_full;
    sol.objective = rp.cost_offset;
    return sol;
  }
  return DenseBarrier(rp, settings).run();
}

}  // namespace relaycache
