#include "relaycache/solver.hpp"

namespace relaycache {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalFailure: return "numerical_failure";
    case SolveStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

std::unique_ptr<SolverBackend> make_default_backend() { return std::make_unique<InteriorPointSolver>(); }

Solution solve(const ConvexProgram& program, const SolverSettings& settings) {
  InteriorPointSolver backend;
  return backend.solve(program, settings);
}

}  // namespace relaycache
