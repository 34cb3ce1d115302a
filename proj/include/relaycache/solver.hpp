#pragma once

#include <memory>
#include <string>
#include <vector>

#include "relaycache/program.hpp"

namespace relaycache {

enum class SolveStatus { Optimal, Infeasible, NumericalFailure, IterationLimit };

const char* to_string(SolveStatus status);

struct SolverSettings {
  /// Absolute tolerance on normalized primal/dual residuals; the duality
  /// gap is held below tolerance * (1 + |objective|).
  double tolerance = 1e-8;
  /// Cap on Newton steps, counted over all centering rounds.
  int max_iterations = 500;
  bool verbose = false;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  std::vector<double> values;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  std::string message;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  /// Throws ProgramError for a malformed program before iterating.
  virtual Solution solve(const ConvexProgram& program, const SolverSettings& settings) = 0;
};

/// Sparse path-following barrier method. Perspectives enter through the
/// logarithmic barrier of the exponential cone; Newton systems are reduced
/// to the free variables plus equality multipliers and factorized by a
/// sparse LDL^T whose symbolic analysis is done once per program. A phase I
/// program supplies the starting point and, when none exists, the
/// infeasibility certificate.
class InteriorPointSolver final : public SolverBackend {
 public:
  std::string name() const override { return "interior-point"; }
  Solution solve(const ConvexProgram& program, const SolverSettings& settings) override;
};

/// Dense log-barrier method with infeasible-start Newton steps. Meant for
/// programs with at most a few hundred variables; used to cross-check the
/// default backend in tests.
class DenseBarrierSolver final : public SolverBackend {
 public:
  std::string name() const override { return "dense-barrier"; }
  Solution solve(const ConvexProgram& program, const SolverSettings& settings) override;
};

std::unique_ptr<SolverBackend> make_default_backend();

/// Solves with the default backend.
Solution solve(const ConvexProgram& program, const SolverSettings& settings = {});

}  // namespace relaycache
