#include <doctest.h>

#include <cmath>
#include <random>

#include "relaycache/program.hpp"
#include "relaycache/solver.hpp"

using namespace relaycache;

namespace {

// maximize b subject to mu*exp(a*b/mu) <= gamma*s, s - mu/gamma <= budget.
ConvexProgram single_link(double a, double gamma, double budget, bool share_free) {
  ConvexProgram p;
  const int mu = share_free ? p.add_variable(VarFamily::HopShareSource, kNoIndex, 0.0, 1.0)
                            : p.add_variable(VarFamily::HopShareSource, kNoIndex, 1.0, 1.0);
  const int b = p.add_variable(VarFamily::RateSource, kNoIndex, 0.0, kInfinity);
  const int s = p.add_variable(VarFamily::PowerSource, kNoIndex, 0.0, kInfinity);
  p.add_perspective({b, mu, s, a, gamma, ConstraintTag::C8, kNoIndex});
  p.add_row({{s, 1.0}, {mu, -1.0 / gamma}}, RowSense::LessEqual, budget, ConstraintTag::C8);
  p.add_objective(b, 1.0);
  return p;
}

}  // namespace

TEST_CASE("linear sanity: maximize x subject to x <= 1") {
  ConvexProgram p;
  const int x = p.add_variable(VarFamily::Generic, kNoIndex, -kInfinity, kInfinity);
  p.add_row({{x, 1.0}}, RowSense::LessEqual, 1.0, ConstraintTag::None);
  p.add_objective(x, 1.0);
  for (auto* backend : {static_cast<SolverBackend*>(new InteriorPointSolver),
                        static_cast<SolverBackend*>(new DenseBarrierSolver)}) {
    const Solution s = backend->solve(p, {});
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-7));
    delete backend;
  }
}

TEST_CASE("single perspective constraint inverts analytically") {
  // W = 2 Hz, Delta = 0.5 s, h = 1, P/(W N0) = 1  =>  b <= W*Delta = 1 bit.
  const double w_delta = 1.0;
  const double a = std::log(2.0) / w_delta;
  const ConvexProgram p = single_link(a, 1.0, 1.0, false);
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(w_delta).epsilon(1e-7));

  // With a free share the optimum puts the whole share on the link.
  const Solution free = solve(single_link(a, 1.0, 1.0, true));
  REQUIRE(free.status == SolveStatus::Optimal);
  CHECK(free.objective == doctest::Approx(w_delta).epsilon(1e-6));
}

TEST_CASE("infeasible linear program is certified") {
  ConvexProgram p;
  const int x = p.add_variable(VarFamily::Generic, kNoIndex, 0.0, 10.0);
  const int y = p.add_variable(VarFamily::Generic, kNoIndex, 0.0, 10.0);
  p.add_row({{x, 1.0}, {y, 1.0}}, RowSense::LessEqual, -1.0, ConstraintTag::None);
  p.add_objective(x, 1.0);
  const Solution s = solve(p);
  CHECK(s.status == SolveStatus::Infeasible);
}

TEST_CASE("malformed programs are rejected before iterating") {
  ConvexProgram p;
  const int x = p.add_variable(VarFamily::Generic, kNoIndex, 0.0, 1.0);
  p.add_row({{x + 5, 1.0}}, RowSense::LessEqual, 1.0, ConstraintTag::None);
  CHECK_THROWS_AS(solve(p), ProgramError);

  ConvexProgram q;
  q.add_variable(VarFamily::Generic, kNoIndex, 2.0, 1.0);
  CHECK_THROWS_AS(solve(q), ProgramError);

  ConvexProgram r;
  const int b = r.add_variable(VarFamily::Generic, kNoIndex, 0.0, 1.0);
  const int mu = r.add_variable(VarFamily::Generic, kNoIndex, -1.0, 1.0);
  const int s = r.add_variable(VarFamily::Generic, kNoIndex, 0.0, 1.0);
  r.add_perspective({b, mu, s, 1.0, 1.0, ConstraintTag::C8, kNoIndex});
  CHECK_THROWS_AS(solve(r), ProgramError);
}

TEST_CASE("interior point agrees with the dense barrier on random small programs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    // A few links sharing a power budget and a resource row, with an
    // equality coupling two shares.
    ConvexProgram p;
    const int links = 2 + trial % 3;
    std::vector<int> mus, bs;
    std::vector<LinearTerm> budget, shares;
    for (int k = 0; k < links; ++k) {
      const int mu = p.add_variable(VarFamily::HopShareSource, kNoIndex, 0.0, 1.0);
      const int b = p.add_variable(VarFamily::RateSource, kNoIndex, 0.0, kInfinity);
      const int s = p.add_variable(VarFamily::PowerSource, kNoIndex, 0.0, kInfinity);
      const double gamma = std::exp(4.0 * unif(rng) + 1.0);
      p.add_perspective({b, mu, s, 0.5 + 2.0 * unif(rng), gamma, ConstraintTag::C8, kNoIndex});
      budget.push_back({s, 1.0});
      budget.push_back({mu, -1.0 / gamma});
      shares.push_back({mu, 1.0});
      p.add_objective(b, 0.5 + unif(rng));
      mus.push_back(mu);
      bs.push_back(b);
    }
    p.add_row(budget, RowSense::LessEqual, 1.0 + unif(rng), ConstraintTag::C8);
    p.add_row(shares, RowSense::LessEqual, 1.0, ConstraintTag::C7);
    p.add_row({{bs[0], 1.0}, {bs[1], -1.0}}, RowSense::LessEqual, 0.3 * unif(rng), ConstraintTag::None);
    const int total = p.add_variable(VarFamily::Generic, kNoIndex, -kInfinity, kInfinity);
    std::vector<LinearTerm> def{{total, 1.0}};
    for (int b : bs) def.push_back({b, -1.0});
    p.add_row(def, RowSense::Equal, 0.0, ConstraintTag::None);

    InteriorPointSolver ipm;
    DenseBarrierSolver dense;
    const Solution a = ipm.solve(p, {});
    const Solution b = dense.solve(p, {});
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(b.status == SolveStatus::Optimal);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
    CHECK(evaluate_violation(p, a.values).max() <= 1e-7);
  }
}

TEST_CASE("power split over two links matches a grid search") {
  // Both shares fixed at 1: maximize b1 + b2 with b_k = log(1 + g_k p_k) / a
  // and p1 + p2 <= P. The grid walks the split directly.
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = 0.5 + unif(rng);
    const double g1 = std::exp(3.0 * unif(rng)), g2 = std::exp(3.0 * unif(rng));
    const double P = 0.2 + 2.0 * unif(rng);
    ConvexProgram p;
    std::vector<LinearTerm> budget;
    for (double g : {g1, g2}) {
      const int mu = p.add_variable(VarFamily::HopShareSource, kNoIndex, 1.0, 1.0);
      const int b = p.add_variable(VarFamily::RateSource, kNoIndex, 0.0, kInfinity);
      const int s = p.add_variable(VarFamily::PowerSource, kNoIndex, 0.0, kInfinity);
      // exp(a b) <= g s, and s - 1/g is the power spent
      p.add_perspective({b, mu, s, a, g, ConstraintTag::C8, kNoIndex});
      budget.push_back({s, 1.0});
      budget.push_back({mu, -1.0 / g});
      p.add_objective(b, 1.0);
    }
    p.add_row(budget, RowSense::LessEqual, P, ConstraintTag::C8);

    double best = 0.0;
    const int steps = 200000;
    for (int i = 0; i <= steps; ++i) {
      const double p1 = P * i / steps;
      best = std::max(best, (std::log1p(g1 * p1) + std::log1p(g2 * (P - p1))) / a);
    }
    const Solution s = solve(p);
    REQUIRE(s.optimal());
    CHECK(s.objective >= best - 1e-6 * (1 + best));
    CHECK(s.objective <= best + 1e-6 * (1 + best));
  }
}
