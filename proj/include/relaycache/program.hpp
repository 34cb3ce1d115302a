#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relaycache {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Constraint families of the delivery model. Every row, cone and tagged
/// bound of a built program carries exactly one of these.
enum class ConstraintTag : std::uint8_t {
  C1, C2, C3, C4, C5, C6, C7, C8, C9, C10, C11, C12, C13,
  Completion,      // B^R_{rho,T} >= z V_n rows of the completion-fraction program
  QueueEvolution,  // cumulative queue definitions B_t = B_{t-1} + increments
  None,
};

const char* to_string(ConstraintTag tag);
ConstraintTag constraint_tag_from_string(const std::string& text);

/// Semantic family of a variable, used for naming and for plan extraction.
enum class VarFamily : std::uint8_t {
  ScShare,          // mu[rho,f,t]
  HopShareSource,   // mu^S
  HopShareRelay,    // mu^R
  TimeSplitSource,  // eta_S[m,t]
  TimeSplitRelay,   // eta_R[m,t]
  RateSource,       // b~^S, normalized bits
  RateRelay,        // b~^R, normalized bits
  PowerSource,      // perspective epigraph variable of the S hop
  PowerRelay,       // perspective epigraph variable of the R hop
  CacheFetch,       // b^C * Delta, normalized bits per slot
  QueueSource,      // B^S
  QueueRelay,       // B^R
  QueueCache,       // B^C
  CacheFraction,    // c[m,n]
  CompletionFraction,
  Generic,
};

const char* to_string(VarFamily family);

/// Index tuple attached to variables and rows. Unused slots are -1.
/// Layout: {scenario, request-or-relay, subcarrier-or-file, slot}.
using IndexTuple = std::array<int, 4>;
inline constexpr IndexTuple kNoIndex{-1, -1, -1, -1};

struct Variable {
  VarFamily family = VarFamily::Generic;
  IndexTuple index = kNoIndex;
  double lower = 0.0;
  double upper = kInfinity;
  /// Suggested interior starting value; NaN lets the backend choose.
  double start = std::numeric_limits<double>::quiet_NaN();
  /// Tag of the box constraint when it encodes a model constraint (C4 for
  /// the relaxed assignment); None for plain sign restrictions.
  ConstraintTag bound_tag = ConstraintTag::None;

  bool fixed() const { return lower == upper; }
};

enum class RowSense : std::uint8_t { Equal, LessEqual };

struct LinearTerm {
  int var;
  double coef;
};

struct LinearRow {
  std::vector<LinearTerm> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
  ConstraintTag tag = ConstraintTag::None;
  IndexTuple index = kNoIndex;
};

/// mu * exp(x_scale * x / mu) <= s_scale * s, with mu, s >= 0.
///
/// At mu = 0 the relation is read through its closure: it holds iff x <= 0.
/// Backends work with the equivalent relative-entropy form
/// x_scale * x <= mu * log(s_scale * s / mu), which stays finite on the
/// interior.
struct ExpPerspective {
  int x = -1;
  int mu = -1;
  int s = -1;
  double x_scale = 1.0;
  double s_scale = 1.0;
  ConstraintTag tag = ConstraintTag::None;
  IndexTuple index = kNoIndex;
};

class ProgramError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Backend-neutral convex program: maximize objective^T x subject to linear
/// rows, variable boxes and exponential-perspective constraints.
class ConvexProgram {
 public:
  int add_variable(Variable v);
  int add_variable(VarFamily family, IndexTuple index, double lower, double upper,
                   double start = std::numeric_limits<double>::quiet_NaN());
  void add_row(LinearRow row);
  void add_row(std::vector<LinearTerm> terms, RowSense sense, double rhs, ConstraintTag tag,
               IndexTuple index = kNoIndex);
  void add_perspective(ExpPerspective cone);
  void add_objective(int var, double coef);

  const std::vector<Variable>& variables() const { return vars_; }
  std::vector<Variable>& variables() { return vars_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  const std::vector<ExpPerspective>& perspectives() const { return cones_; }
  const std::vector<LinearTerm>& objective() const { return objective_; }

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_perspectives() const { return static_cast<int>(cones_.size()); }

  /// Throws ProgramError when a reference is dangling, a box is empty, a
  /// right-hand side is not finite, or a perspective has a non-positive
  /// scale or an argument without a nonnegative lower bound.
  void validate() const;

  double objective_value(std::span<const double> x) const;

  /// Plain-text dump: one line per variable, row and perspective.
  void dump(std::ostream& out) const;

 private:
  std::vector<Variable> vars_;
  std::vector<LinearRow> rows_;
  std::vector<ExpPerspective> cones_;
  std::vector<LinearTerm> objective_;
};

std::string variable_name(const Variable& v);

/// Largest violation of each constraint class at a point, recomputed from
/// the program rows alone.
struct ProgramViolation {
  double bounds = 0.0;
  double equalities = 0.0;
  double inequalities = 0.0;
  double perspectives = 0.0;

  double max() const;
};

/// Perspective violations are measured as mu*exp(x_scale*x/mu) - s_scale*s
/// divided by max(1, s_scale*s).
ProgramViolation evaluate_violation(const ConvexProgram& program, std::span<const double> x);

}  // namespace relaycache
