#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <fmt/format.h>

#include "presolve.hpp"
#include "relaycache/solver.hpp"

namespace relaycache {

namespace {

using detail::ReducedPerspective;
using detail::ReducedProgram;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

// Lower-triangular KKT pattern with precomputed value offsets, so every
// iteration refills values in place and reuses the symbolic factorization.
class KktSystem {
 public:
  KktSystem(const ReducedProgram& rp) : rp_(rp), n_(rp.n()), me_(static_cast<int>(rp.eq.size())) {
    const int dim = n_ + me_;
    std::vector<Eigen::Triplet<double>> trip;
    auto add = [&](int r, int c) {
      if (r < c) std::swap(r, c);
      trip.emplace_back(r, c, 1.0);
      pending_.emplace_back(r, c);
    };
    for (int i = 0; i < dim; ++i) add(i, i);
    for (int e = 0; e < me_; ++e) {
      for (const auto& t : rp.eq[e].terms) add(n_ + e, t.var);
    }
    for (const auto& row : rp.ineq) {
      for (std::size_t p = 0; p < row.terms.size(); ++p) {
        for (std::size_t q = 0; q <= p; ++q) add(row.terms[p].var, row.terms[q].var);
      }
    }
    for (const auto& c : rp.cones) {
      const int idx[3] = {c.x, c.mu, c.s};
      for (int p = 0; p < 3; ++p) {
        for (int q = 0; q <= p; ++q) {
          if (idx[p] >= 0 && idx[q] >= 0) add(idx[p], idx[q]);
        }
      }
    }
    mat_.resize(dim, dim);
    mat_.setFromTriplets(trip.begin(), trip.end());
    mat_.makeCompressed();
    pos_.reserve(pending_.size());
    for (const auto& [r, c] : pending_) pos_.push_back(locate(r, c));
    pending_.clear();
    pending_.shrink_to_fit();
    ldlt_.analyzePattern(mat_);
  }

  // d_w, d_v, d_l, d_u are the z/s ratios; zeta weights the cone Hessians.
  bool factorize(const Vec& x, const Vec& d_w, const Vec& d_v, const Vec& zeta, const Vec& d_bound,
                 double reg_x, double reg_y) {
    double* val = mat_.valuePtr();
    std::fill(val, val + mat_.nonZeros(), 0.0);
    std::size_t k = 0;
    for (int i = 0; i < n_; ++i) val[pos_[k++]] += d_bound[i];
    k += me_;
    for (int e = 0; e < me_; ++e) {
      for (const auto& t : rp_.eq[e].terms) val[pos_[k++]] += t.coef;
    }
    for (std::size_t j = 0; j < rp_.ineq.size(); ++j) {
      const auto& terms = rp_.ineq[j].terms;
      const double d = d_w[j];
      for (std::size_t p = 0; p < terms.size(); ++p) {
        for (std::size_t q = 0; q <= p; ++q) val[pos_[k++]] += d * terms[p].coef * terms[q].coef;
      }
    }
    for (std::size_t j = 0; j < rp_.cones.size(); ++j) {
      const auto& c = rp_.cones[j];
      const auto e = c.evaluate(x);
      const int idx[3] = {c.x, c.mu, c.s};
      // Hessian of g lives on the (mu, s) block.
      const double h[3][3] = {{0.0, 0.0, 0.0},
                              {0.0, e.hess_mumu, e.hess_mus},
                              {0.0, e.hess_mus, e.hess_ss}};
      for (int p = 0; p < 3; ++p) {
        for (int q = 0; q <= p; ++q) {
          if (idx[p] < 0 || idx[q] < 0) continue;
          val[pos_[k++]] += d_v[j] * e.grad[p] * e.grad[q] + zeta[j] * h[p][q];
        }
      }
    }
    // Symmetric Jacobi scaling of the primal block; the regularization is
    // applied after scaling so it stays relative to each pivot.
    const int dim = n_ + me_;
    scale_.resize(dim);
    for (int i = 0; i < dim; ++i) {
      const double d = i < n_ ? std::abs(val[pos_[i]]) : 0.0;
      scale_[i] = d > 1.0 ? 1.0 / std::sqrt(d) : 1.0;
    }
    const int* outer = mat_.outerIndexPtr();
    const int* inner = mat_.innerIndexPtr();
    for (int c = 0; c < dim; ++c) {
      for (int p = outer[c]; p < outer[c + 1]; ++p) val[p] *= scale_[inner[p]] * scale_[c];
    }
    reg_x_ = reg_x;
    reg_y_ = reg_y;
    for (int i = 0; i < n_; ++i) val[pos_[i]] += reg_x;
    for (int e = 0; e < me_; ++e) val[pos_[n_ + e]] -= reg_y;
    ldlt_.factorize(mat_);
    return ldlt_.info() == Eigen::Success;
  }

  Vec solve(const Vec& rhs) const {
    Vec z = ldlt_.solve(Vec(scale_.cwiseProduct(rhs)));
    return scale_.cwiseProduct(z);
  }

  // Product with the unregularized matrix.
  Vec multiply(const Vec& v) const {
    Vec u = scale_.cwiseInverse().cwiseProduct(v);
    Vec k = mat_.selfadjointView<Eigen::Lower>() * u;
    k.head(n_) -= reg_x_ * u.head(n_);
    k.tail(me_) += reg_y_ * u.tail(me_);
    return scale_.cwiseInverse().cwiseProduct(k);
  }

 private:
  int locate(int r, int c) const {
    const int* outer = mat_.outerIndexPtr();
    const int* inner = mat_.innerIndexPtr();
    const int* first = inner + outer[c];
    const int* last = inner + outer[c + 1];
    const int* it = std::lower_bound(first, last, r);
    return static_cast<int>(it - inner);
  }

  const ReducedProgram& rp_;
  int n_;
  int me_;
  SpMat mat_;
  std::vector<std::pair<int, int>> pending_;
  std::vector<int> pos_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  Vec scale_;
  double reg_x_ = 0.0;
  double reg_y_ = 0.0;
};

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Barrier on  t c^T x - sum log(box slacks) - sum log(w) - sum log(-g_k(x)),
// with the inequality rows written as G x + w = h. The cone terms together
// with the bounds mu >= 0 and s >= 0 form the standard logarithmic barrier
// of the exponential cone.
class BarrierPath {
 public:
  enum class Step { Moved, Centered, Stuck };

  BarrierPath(const ReducedProgram& rp, double reg, double feas_tol)
      : rp_(rp), n_(rp.n()), me_(static_cast<int>(rp.eq.size())), mi_(static_cast<int>(rp.ineq.size())),
        mc_(static_cast<int>(rp.cones.size())), kkt_(rp), reg_(reg), feas_tol_(feas_tol) {
    std::vector<Eigen::Triplet<double>> ta, tg;
    b_ = Vec(me_);
    h_ = Vec(mi_);
    for (int e = 0; e < me_; ++e) {
      for (const auto& t : rp.eq[e].terms) ta.emplace_back(e, t.var, t.coef);
      b_[e] = rp.eq[e].rhs;
    }
    for (int j = 0; j < mi_; ++j) {
      for (const auto& t : rp.ineq[j].terms) tg.emplace_back(j, t.var, t.coef);
      h_[j] = rp.ineq[j].rhs;
    }
    a_.resize(me_, n_);
    a_.setFromTriplets(ta.begin(), ta.end());
    g_.resize(mi_, n_);
    g_.setFromTriplets(tg.begin(), tg.end());
    cost_ = Eigen::Map<const Vec>(rp.cost.data(), n_);
    terms_ = mi_ + mc_;
    for (int i = 0; i < n_; ++i) {
      terms_ += std::isfinite(rp.lower[i]) ? 1 : 0;
      terms_ += std::isfinite(rp.upper[i]) ? 1 : 0;
    }
    primal_scale_ = 1.0 + std::max(inf_norm(b_), inf_norm(h_));
    dual_scale_ = 1.0 + inf_norm(cost_);
  }

  Vec x, w, y, lam;  // y and lam estimate t times the multipliers
  int newton_steps = 0;

  void reset_from(const Vec& x0) {
    x = x0;
    w = h_ - g_ * x;
    y = Vec::Zero(me_);
    lam = Vec::Zero(mi_);
  }

  int barrier_terms() const { return terms_; }
  double objective() const { return rp_.cost_offset - cost_.dot(x); }
  bool primal_feasible() const { return primal_residual() <= feas_tol_; }

  double primal_residual() const { return residual_at(x, w) / primal_scale_; }

  double residual_at(const Vec& xv, const Vec& wv) const {
    double r = 0.0;
    if (me_ > 0) r = std::max(r, inf_norm(a_ * xv - b_));
    if (mi_ > 0) r = std::max(r, inf_norm(g_ * xv + wv - h_));
    return r;
  }

  double dual_residual(double t) const {
    Vec gx, gw;
    gradient(x, w, t, gx, gw);
    Vec rd = gx;
    if (me_ > 0) rd += a_.transpose() * y;
    if (mi_ > 0) rd += g_.transpose() * lam;
    const double r = std::max(inf_norm(rd), inf_norm(gw + lam));
    return r / t / dual_scale_;
  }

  bool inside(const Vec& xv, const Vec& wv) const {
    for (int i = 0; i < n_; ++i) {
      if (!(xv[i] > rp_.lower[i]) || !(xv[i] < rp_.upper[i])) return false;
    }
    for (int j = 0; j < mi_; ++j) {
      if (!(wv[j] > 0.0)) return false;
    }
    for (const auto& c : rp_.cones) {
      if (!(c.evaluate(xv).g < 0.0)) return false;
    }
    return true;
  }

  // Newton step on the barrier problem at parameter t. Until the linear
  // rows hold, steps are damped on the residual norm; afterwards on the
  // barrier value.
  Step newton(double t) {
    ++newton_steps;
    Vec gx, gw, d_bound(n_), d_w(mi_), d_v(mc_), zeta(mc_);
    gradient(x, w, t, gx, gw);
    for (int i = 0; i < n_; ++i) {
      double d = 0.0;
      if (std::isfinite(rp_.lower[i])) d += 1.0 / square(x[i] - rp_.lower[i]);
      if (std::isfinite(rp_.upper[i])) d += 1.0 / square(rp_.upper[i] - x[i]);
      d_bound[i] = d;
    }
    for (int j = 0; j < mi_; ++j) d_w[j] = 1.0 / square(w[j]);
    for (int k = 0; k < mc_; ++k) {
      const double g = rp_.cones[k].evaluate(x).g;
      d_v[k] = 1.0 / square(g);
      zeta[k] = -1.0 / g;
    }
    const Vec re = me_ > 0 ? Vec(a_ * x - b_) : Vec(0);
    const Vec ri = mi_ > 0 ? Vec(g_ * x + w - h_) : Vec(0);
    // Near the boundary the equality residual drifts at the level of the
    // solve accuracy; the step below still corrects it, so stay on the
    // barrier-value branch until it is well above the tolerance.
    const bool feasible = std::max(inf_norm(re), inf_norm(ri)) <= 100.0 * feas_tol_ * primal_scale_;

    // The multipliers grow like t, so the equality regularization shrinks
    // like 1/t to keep its effect on A dx at a fixed size.
    double reg_x = reg_;
    double reg_y = std::max(reg_ / std::max(t, 1.0), 1e-16);
    bool factored = false;
    for (int attempt = 0; attempt < 8 && !factored; ++attempt) {
      factored = kkt_.factorize(x, d_w, d_v, zeta, d_bound, reg_x, reg_y);
      if (!factored) {
        reg_x *= 100.0;
        reg_y *= 100.0;
      }
    }
    if (!factored) return Step::Stuck;

    Vec rhs(n_ + me_);
    rhs.head(n_) = -gx;
    if (mi_ > 0) rhs.head(n_) += g_.transpose() * (gw - d_w.cwiseProduct(ri));
    rhs.tail(me_) = -re;
    Vec sol = kkt_.solve(rhs);
    // The primal block is scaled like t while the equality block carries
    // the row residual, so each gets its own refinement target.
    const double target_x = 1e-15 * (1.0 + inf_norm(rhs.head(n_)));
    const double target_e = 1e-13 * primal_scale_;
    for (int pass = 0; pass < 6; ++pass) {
      Vec kv = kkt_.multiply(sol);
      const Vec res = rhs - kv;
      const bool done_x = !(inf_norm(res.head(n_)) > target_x);
      const bool done_e = !(inf_norm(res.tail(me_)) > target_e);
      if (done_x && done_e) break;
      sol += kkt_.solve(res);
    }
    const Vec dx = sol.head(n_);
    const Vec y_new = sol.tail(me_);
    const Vec gdx = mi_ > 0 ? Vec(g_ * dx) : Vec(0);
    const Vec dw = -ri - gdx;
    const Vec lam_new = -gw + d_w.cwiseProduct(ri + gdx);
    if (!dx.allFinite() || !y_new.allFinite()) return Step::Stuck;

    if (feasible) {
      // A poorly solved system can push the iterate off the equality
      // manifold; such steps are shortened instead of taken.
      const double drift_cap = std::max(2.0 * residual_at(x, w), 100.0 * feas_tol_ * primal_scale_);
      const auto keeps_rows = [&](const Vec& xn, const Vec& wn) { return residual_at(xn, wn) <= drift_cap; };
      const double slope = gx.dot(dx) + gw.dot(dw);
      if (t != last_t_) {
        last_t_ = t;
        stagnant_ = 0;
        decrement_ = kInfinity;
      }
      // Once rounding dominates, the decrement stops shrinking quadratically.
      const double previous = decrement_;
      decrement_ = -slope;
      stagnant_ = std::abs(decrement_) <= 1e-5 && std::abs(decrement_) > 0.25 * previous ? stagnant_ + 1 : 0;
      y = y_new;
      lam = lam_new;
      if (decrement_ / 2.0 <= 1e-10 || stagnant_ >= 2) {
        // Take as much of the last step as fits, which also shrinks any
        // leftover equality residual.
        double alpha = 1.0;
        for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
          const Vec xn = x + alpha * dx;
          const Vec wn = w + alpha * dw;
          if (inside(xn, wn) && keeps_rows(xn, wn)) {
            x = xn;
            w = wn;
            break;
          }
        }
        return Step::Centered;
      }
      const double f0 = value(x, w, t);
      double alpha = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        const Vec xn = x + alpha * dx;
        const Vec wn = w + alpha * dw;
        if (inside(xn, wn) && keeps_rows(xn, wn) &&
            (decrement_ < 0.1 || value(xn, wn, t) <= f0 + 0.01 * alpha * slope)) {
          x = xn;
          w = wn;
          return Step::Moved;
        }
        alpha *= 0.5;
      }
      return Step::Stuck;
    }

    const double r0 = residual_norm(x, w, y, lam, t);
    const Vec dy = y_new - y;
    const Vec dlam = lam_new - lam;
    double alpha = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec xn = x + alpha * dx;
      const Vec wn = w + alpha * dw;
      if (inside(xn, wn)) {
        const Vec yn = y + alpha * dy;
        const Vec ln = lam + alpha * dlam;
        if (residual_norm(xn, wn, yn, ln, t) <= (1.0 - 0.01 * alpha) * r0) {
          x = xn;
          w = wn;
          y = yn;
          lam = ln;
          return Step::Moved;
        }
      }
      alpha *= 0.5;
    }
    return Step::Stuck;
  }

  // Sound up to the stated tolerance: with multipliers (y, z >= 0, zeta >= 0)
  // the Lagrangian is nonpositive at every feasible point, and it is bounded
  // below by its linearization at x, which is positive over the whole box.
  bool certify_infeasible(const Vec& xv, const Vec& yv, const Vec& zv, const Vec& zetav) const {
    if (mi_ > 0 && zv.minCoeff() < 0.0) return false;
    if (mc_ > 0 && zetav.minCoeff() < 0.0) return false;
    const double scale = std::max({inf_norm(yv), inf_norm(zv), inf_norm(zetav)});
    if (!(scale > 0.0) || !std::isfinite(scale)) return false;
    const Vec yy = yv / scale;
    const Vec zz = zv / scale;
    Vec d = Vec::Zero(n_);
    if (me_ > 0) d += a_.transpose() * yy;
    if (mi_ > 0) d += g_.transpose() * zz;
    double value = -b_.dot(yy) - h_.dot(zz);
    for (int k = 0; k < mc_; ++k) {
      const auto& c = rp_.cones[k];
      const auto e = c.evaluate(xv);
      const double weight = zetav[k] / scale;
      const int idx[3] = {c.x, c.mu, c.s};
      double lin = e.g;
      for (int p = 0; p < 3; ++p) {
        if (idx[p] < 0) continue;
        lin -= e.grad[p] * xv[idx[p]];
        d[idx[p]] += weight * e.grad[p];
      }
      value += weight * lin;
    }
    constexpr double kZero = 1e-9;
    for (int i = 0; i < n_; ++i) {
      if (d[i] > 0.0) {
        if (std::isfinite(rp_.lower[i])) {
          value += d[i] * rp_.lower[i];
        } else if (d[i] > kZero) {
          return false;
        }
      } else if (d[i] < 0.0) {
        if (std::isfinite(rp_.upper[i])) {
          value += d[i] * rp_.upper[i];
        } else if (-d[i] > kZero) {
          return false;
        }
      }
    }
    return value > 1e-7;
  }

  double decrement() const { return decrement_; }

  // Barrier multipliers of the cone terms, scaled like y and lam.
  Vec cone_weights(const Vec& xv) const {
    Vec z(mc_);
    for (int k = 0; k < mc_; ++k) z[k] = -1.0 / rp_.cones[k].evaluate(xv).g;
    return z;
  }

 private:
  static double square(double v) { return v * v; }

  void gradient(const Vec& xv, const Vec& wv, double t, Vec& gx, Vec& gw) const {
    gx = t * cost_;
    for (int i = 0; i < n_; ++i) {
      if (std::isfinite(rp_.lower[i])) gx[i] -= 1.0 / (xv[i] - rp_.lower[i]);
      if (std::isfinite(rp_.upper[i])) gx[i] += 1.0 / (rp_.upper[i] - xv[i]);
    }
    for (const auto& c : rp_.cones) {
      const auto e = c.evaluate(xv);
      const int idx[3] = {c.x, c.mu, c.s};
      for (int p = 0; p < 3; ++p) {
        if (idx[p] >= 0) gx[idx[p]] -= e.grad[p] / e.g;
      }
    }
    gw = -wv.cwiseInverse();
  }

  double value(const Vec& xv, const Vec& wv, double t) const {
    double f = t * cost_.dot(xv);
    for (int i = 0; i < n_; ++i) {
      if (std::isfinite(rp_.lower[i])) f -= std::log(xv[i] - rp_.lower[i]);
      if (std::isfinite(rp_.upper[i])) f -= std::log(rp_.upper[i] - xv[i]);
    }
    for (int j = 0; j < mi_; ++j) f -= std::log(wv[j]);
    for (const auto& c : rp_.cones) f -= std::log(-c.evaluate(xv).g);
    return f;
  }

  double residual_norm(const Vec& xv, const Vec& wv, const Vec& yv, const Vec& lv, double t) const {
    Vec gx, gw;
    gradient(xv, wv, t, gx, gw);
    if (me_ > 0) gx += a_.transpose() * yv;
    if (mi_ > 0) gx += g_.transpose() * lv;
    double sq = gx.squaredNorm() + (gw + lv).squaredNorm();
    if (me_ > 0) sq += (a_ * xv - b_).squaredNorm();
    if (mi_ > 0) sq += (g_ * xv + wv - h_).squaredNorm();
    return std::sqrt(sq);
  }

  const ReducedProgram& rp_;
  int n_, me_, mi_, mc_;
  KktSystem kkt_;
  double reg_;
  double feas_tol_;
  SpMat a_, g_;
  Vec b_, h_, cost_;
  int terms_ = 0;
  double primal_scale_ = 1.0;
  double dual_scale_ = 1.0;
  double decrement_ = 0.0;
  double last_t_ = 0.0;
  int stagnant_ = 0;
};

// Interior start inside the boxes; epigraph variables of perspectives are
// raised until every cone holds strictly. Empty when that is impossible.
std::optional<Vec> cone_interior_start(const ReducedProgram& rp) {
  const auto x0 = detail::interior_start(rp);
  Vec x = Eigen::Map<const Vec>(x0.data(), rp.n());
  for (const auto& c : rp.cones) {
    const double xv = c.x >= 0 ? x[c.x] : c.x_value;
    const double muv = c.mu >= 0 ? x[c.mu] : c.mu_value;
    if (c.evaluate(x).g < -1e-3 * muv) continue;
    if (c.s < 0) return std::nullopt;
    // g = -mu at the raised point
    const double target = std::exp(c.a * xv / muv + 1.0 - c.log_gamma) * muv;
    if (!std::isfinite(target) || !(target < rp.upper[c.s])) return std::nullopt;
    x[c.s] = std::max(x[c.s], target);
  }
  return x;
}

class BarrierSolver {
 public:
  BarrierSolver(const ReducedProgram& rp, const SolverSettings& settings) : rp_(rp), settings_(settings) {}

  Solution run() {
    Solution sol;
    const auto start = cone_interior_start(rp_);
    if (!start) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "no interior point for a perspective constraint";
      sol.values = rp_.x_full;
      return sol;
    }
    BarrierPath path(rp_, 1e-11, feas_tol());
    path.reset_from(*start);
    if (path.w.size() > 0 && path.w.minCoeff() <= 0.0) {
      const auto feasible = phase_one(*start, sol);
      if (!feasible) return sol;
      path.reset_from(*feasible);
    }
    const double m = path.barrier_terms();
    // The normalized objective is of order one, so the first useful
    // parameter puts the gap bound m/t near ten.
    double t = std::max(1.0, 0.1 * m);
    struct Snapshot {
      Vec x, w, y, lam;
      double t;
    };
    std::optional<Snapshot> good;  // last centered, feasible iterate
    // Near the end the Newton systems can lose accuracy and drag the
    // iterate off the equality rows. The last clean point is kept and
    // returned when it is already close enough to optimal.
    const auto fall_back = [&](const char* why) {
      if (!good || m / good->t > kLooseGap * settings_.tolerance * (1.0 + std::abs(path.objective()))) return false;
      path.x = good->x;
      path.w = good->w;
      path.y = good->y;
      path.lam = good->lam;
      finish(path, good->t, sol);
      sol.status = SolveStatus::Optimal;
      sol.message = fmt::format("stopped at gap {:.3g}: {} at t = {:.3g}", m / good->t, why, t);
      return true;
    };
    double growth = kGrowth;
    while (true) {
      const auto outcome = center(path, t);
      sol.iterations = used_ + path.newton_steps;
      // A long jump in t can leave the iterate crawling along a curved cone
      // boundary; going back and taking shorter jumps avoids that.
      if (outcome == Outcome::Failed && good && good->t < t && growth > kMinGrowth) {
        path.x = good->x;
        path.w = good->w;
        path.y = good->y;
        path.lam = good->lam;
        growth = std::max(std::sqrt(growth), kMinGrowth);
        t = good->t * growth;
        continue;
      }
      if (outcome == Outcome::Failed && fall_back("centering stalled")) return sol;
      if (outcome == Outcome::Failed || outcome == Outcome::Budget) {
        finish(path, t, sol);
        if (outcome == Outcome::Budget) {
          sol.status = SolveStatus::IterationLimit;
          sol.message = "iteration limit reached";
        } else if (!path.primal_feasible() &&
                   path.certify_infeasible(path.x, path.y, path.lam, path.cone_weights(path.x))) {
          sol.status = SolveStatus::Infeasible;
          sol.message = "Farkas-type certificate from stalled equality phase";
        } else {
          sol.status = SolveStatus::NumericalFailure;
          sol.message = fmt::format("centering stalled at t = {:.3g}", t);
        }
        return sol;
      }
      if (!path.x.allFinite() || inf_norm(path.x) > 1e15) {
        finish(path, t, sol);
        sol.status = SolveStatus::NumericalFailure;
        sol.message = "iterates diverge; objective appears unbounded";
        return sol;
      }
      const double obj = path.objective();
      if (settings_.verbose) {
        std::fprintf(stderr, "barrier t %.3e newton %4d gap %.3e obj %.12g pres %.2e\n", t, sol.iterations, m / t, obj,
                     path.primal_residual());
      }
      const bool gap_met = m / t <= settings_.tolerance * (1.0 + std::abs(obj));
      if (path.primal_feasible()) {
        good = Snapshot{path.x, path.w, path.y, path.lam, t};
        if (gap_met) {
          finish(path, t, sol);
          sol.status = SolveStatus::Optimal;
          return sol;
        }
      } else if (gap_met && fall_back("equality residual drifted")) {
        return sol;
      }
      // Aim the last round at exactly the parameter the tolerance needs;
      // overshooting only costs accuracy near the boundary.
      const double needed = 1.01 * m / (settings_.tolerance * (1.0 + std::abs(obj)));
      t = std::min(t * growth, std::max(needed, 2.0 * t));
      growth = std::min(kGrowth, 2.0 * growth);
    }
  }

 private:
  static constexpr double kGrowth = 50.0;
  static constexpr double kMinGrowth = 2.0;
  static constexpr int kCenteringCap = 100;
  static constexpr double kLooseGap = 100.0;

  enum class Outcome { Centered, Failed, Budget, Stopped };

  template <typename Stop>
  Outcome center_until(BarrierPath& path, double t, Stop stop) const {
    for (int k = 0; used_ + path.newton_steps < settings_.max_iterations; ++k) {
      if (k == kCenteringCap) return Outcome::Failed;
      const auto step = path.newton(t);
      if (step == BarrierPath::Step::Centered) return Outcome::Centered;
      if (step == BarrierPath::Step::Stuck) return Outcome::Failed;
      if (stop()) return Outcome::Stopped;
    }
    return Outcome::Budget;
  }

  Outcome center(BarrierPath& path, double t) const {
    return center_until(path, t, [] { return false; });
  }

  // Minimizes a common shift tau of the inequality rows. A strictly negative
  // tau yields a strictly feasible start for the original program; a
  // positive lower bound on the optimal tau yields a certificate.
  std::optional<Vec> phase_one(const Vec& x0, Solution& sol) {
    const int n = rp_.n();
    ReducedProgram aux = rp_;
    aux.full_of_free.push_back(rp_.n_full);
    aux.lower.push_back(-1.0);
    aux.upper.push_back(kInfinity);
    aux.cost.assign(n + 1, 0.0);
    aux.cost[n] = 1.0;
    aux.cost_offset = 0.0;
    for (auto& row : aux.ineq) row.terms.push_back({n, -1.0});

    BarrierPath path(aux, 1e-11, feas_tol());
    Vec xa(n + 1);
    xa.head(n) = x0;
    double worst = 0.0;
    for (std::size_t j = 0; j < rp_.ineq.size(); ++j) {
      double lhs = 0.0;
      for (const auto& t : rp_.ineq[j].terms) lhs += t.coef * x0[t.var];
      worst = std::max(worst, lhs - rp_.ineq[j].rhs);
    }
    xa[n] = worst + 1.0;
    path.reset_from(xa);

    const double m = path.barrier_terms();
    const auto tau_negative = [&] { return path.primal_feasible() && path.x[n] < -0.1; };
    // Centering pulls tau up to roughly its optimum plus m/t; starting at
    // m/tau0 keeps the first round from drifting far above the start.
    double t = std::max(1.0, m / std::max(xa[n], 1.0));
    while (true) {
      const auto outcome = center_until(path, t, tau_negative);
      if (outcome == Outcome::Stopped || (outcome == Outcome::Centered && path.x[n] < 0.0)) {
        used_ += path.newton_steps;
        return Vec(path.x.head(n));
      }
      sol.iterations = used_ + path.newton_steps;
      sol.values = rp_.expand(path.x.head(n));
      if (outcome == Outcome::Budget) {
        sol.status = SolveStatus::IterationLimit;
        sol.message = "iteration limit reached while searching for an interior point";
        return std::nullopt;
      }
      if (outcome == Outcome::Failed) {
        sol.status = SolveStatus::NumericalFailure;
        sol.message = "phase I centering stalled";
        return std::nullopt;
      }
      if (path.x[n] - m / t > 0.0) {
        // Verify against the original rows; the tau column is not part of it.
        BarrierPath original(rp_, 1e-11, feas_tol());
        const Vec xo = path.x.head(n);
        if (original.certify_infeasible(xo, path.y / t, path.lam / t, path.cone_weights(path.x) / t)) {
          sol.status = SolveStatus::Infeasible;
          sol.message = "Farkas-type certificate from phase I";
        } else {
          sol.status = SolveStatus::NumericalFailure;
          sol.message = "phase I optimum is positive but the certificate did not verify";
        }
        return std::nullopt;
      }
      if (m / t <= settings_.tolerance) {
        sol.status = SolveStatus::NumericalFailure;
        sol.message = "feasible set has no interior";
        return std::nullopt;
      }
      t *= 10.0;
    }
  }

  void finish(const BarrierPath& path, double t, Solution& sol) const {
    sol.values = rp_.expand(path.x);
    sol.objective = path.objective();
    sol.primal_residual = path.primal_residual();
    sol.dual_residual = path.dual_residual(t);
    sol.complementarity = path.barrier_terms() / t;
  }

  double feas_tol() const { return settings_.tolerance; }

  const ReducedProgram& rp_;
  const SolverSettings& settings_;
  int used_ = 0;  // Newton steps spent in phase I
};

}  // namespace

Solution InteriorPointSolver::solve(const ConvexProgram& program, const SolverSettings& settings) {
  const ReducedProgram rp = detail::presolve(program);
  Solution sol;
  if (rp.infeasible) {
    sol.status = SolveStatus::Infeasible;
    sol.message = rp.reason;
    sol.values = rp.x_full;
    return sol;
  }
  if (rp.n() == 0) {
    sol.status = SolveStatus::Optimal;
    sol.values = rp.x_full;
    sol.objective = rp.cost_offset;
    return sol;
  }
  return BarrierSolver(rp, settings).run();
}

}  // namespace relaycache
