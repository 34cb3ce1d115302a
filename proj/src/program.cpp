#include "relaycache/program.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace relaycache {

namespace {

constexpr std::array<const char*, 16> kTagNames = {
    "C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11", "C12", "C13",
    "completion", "queue", "none"};

constexpr std::array<const char*, 16> kFamilyNames = {
    "mu", "muS", "muR", "etaS", "etaR", "bS", "bR", "sS", "sR", "bC", "BS", "BR", "BC",
    "c", "z", "x"};

std::string index_suffix(const IndexTuple& index) {
  std::string out;
  for (int v : index) {
    if (v < 0) continue;
    out += out.empty() ? "[" : ",";
    out += std::to_string(v);
  }
  if (!out.empty()) out += "]";
  return out;
}

}  // namespace

const char* to_string(ConstraintTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

ConstraintTag constraint_tag_from_string(const std::string& text) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (text == kTagNames[i]) return static_cast<ConstraintTag>(i);
  }
  throw std::invalid_argument("unknown constraint tag: " + text);
}

const char* to_string(VarFamily family) { return kFamilyNames[static_cast<std::size_t>(family)]; }

std::string variable_name(const Variable& v) { return to_string(v.family) + index_suffix(v.index); }

int ConvexProgram::add_variable(Variable v) {
  vars_.push_back(v);
  return static_cast<int>(vars_.size()) - 1;
}

int ConvexProgram::add_variable(VarFamily family, IndexTuple index, double lower, double upper,
                                double start) {
  Variable v;
  v.family = family;
  v.index = index;
  v.lower = lower;
  v.upper = upper;
  v.start = start;
  return add_variable(v);
}

void ConvexProgram::add_row(LinearRow row) { rows_.push_back(std::move(row)); }

void ConvexProgram::add_row(std::vector<LinearTerm> terms, RowSense sense, double rhs,
                            ConstraintTag tag, IndexTuple index) {
  LinearRow row;
  row.terms = std::move(terms);
  row.sense = sense;
  row.rhs = rhs;
  row.tag = tag;
  row.index = index;
  rows_.push_back(std::move(row));
}

void ConvexProgram::add_perspective(ExpPerspective cone) { cones_.push_back(cone); }

void ConvexProgram::add_objective(int var, double coef) { objective_.push_back({var, coef}); }

void ConvexProgram::validate() const {
  const int n = num_variables();
  auto check_var = [n](int v, const char* what) {
    if (v < 0 || v >= n) throw ProgramError(fmt::format("{} references missing variable {}", what, v));
  };
  for (int i = 0; i < n; ++i) {
    const auto& v = vars_[i];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper || v.lower == kInfinity ||
        v.upper == -kInfinity) {
      throw ProgramError(fmt::format("variable {} has an empty or invalid box [{}, {}]",
                                     variable_name(v), v.lower, v.upper));
    }
  }
  for (const auto& row : rows_) {
    if (!std::isfinite(row.rhs)) {
      throw ProgramError(fmt::format("row {}{} has non-finite rhs", to_string(row.tag),
                                     index_suffix(row.index)));
    }
    for (const auto& t : row.terms) {
      check_var(t.var, "row");
      if (!std::isfinite(t.coef)) throw ProgramError("row has a non-finite coefficient");
    }
  }
  for (const auto& cone : cones_) {
    check_var(cone.x, "perspective");
    check_var(cone.mu, "perspective");
    check_var(cone.s, "perspective");
    if (!(cone.x_scale > 0.0) || !(cone.s_scale > 0.0) || !std::isfinite(cone.x_scale) ||
        !std::isfinite(cone.s_scale)) {
      throw ProgramError("perspective scales must be positive and finite");
    }
    if (vars_[cone.mu].lower < 0.0 || vars_[cone.s].lower < 0.0) {
      throw ProgramError(fmt::format("perspective {}{} needs nonnegative mu and s",
                                     to_string(cone.tag), index_suffix(cone.index)));
    }
  }
  for (const auto& t : objective_) check_var(t.var, "objective");
}

double ConvexProgram::objective_value(std::span<const double> x) const {
  double total = 0.0;
  for (const auto& t : objective_) total += t.coef * x[t.var];
  return total;
}

void ConvexProgram::dump(std::ostream& out) const {
  fmt::print(out, "program variables={} rows={} perspectives={}\n", vars_.size(), rows_.size(),
             cones_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto& v = vars_[i];
    fmt::print(out, "var {} {} [{}, {}]", i, variable_name(v), v.lower, v.upper);
    if (v.bound_tag != ConstraintTag::None) fmt::print(out, " tag={}", to_string(v.bound_tag));
    out << '\n';
  }
  for (const auto& row : rows_) {
    fmt::print(out, "row {}{} ", to_string(row.tag), index_suffix(row.index));
    for (const auto& t : row.terms) fmt::print(out, "{:+}*{} ", t.coef, variable_name(vars_[t.var]));
    fmt::print(out, "{} {}\n", row.sense == RowSense::Equal ? "==" : "<=", row.rhs);
  }
  for (const auto& c : cones_) {
    fmt::print(out, "exp {}{} {}*exp({}*{}/{}) <= {}*{}\n", to_string(c.tag), index_suffix(c.index),
               variable_name(vars_[c.mu]), c.x_scale, variable_name(vars_[c.x]),
               variable_name(vars_[c.mu]), c.s_scale, variable_name(vars_[c.s]));
  }
  out << "maximize";
  for (const auto& t : objective_) fmt::print(out, " {:+}*{}", t.coef, variable_name(vars_[t.var]));
  out << '\n';
}

double ProgramViolation::max() const {
  return std::max({bounds, equalities, inequalities, perspectives});
}

ProgramViolation evaluate_violation(const ConvexProgram& program, std::span<const double> x) {
  ProgramViolation viol;
  const auto& vars = program.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    viol.bounds = std::max({viol.bounds, vars[i].lower - x[i], x[i] - vars[i].upper});
  }
  for (const auto& row : program.rows()) {
    double lhs = 0.0;
    for (const auto& t : row.terms) lhs += t.coef * x[t.var];
    const double excess = lhs - row.rhs;
    if (row.sense == RowSense::Equal) {
      viol.equalities = std::max(viol.equalities, std::abs(excess));
    } else {
      viol.inequalities = std::max(viol.inequalities, excess);
    }
  }
  for (const auto& c : program.perspectives()) {
    const double mu = x[c.mu];
    const double arg = c.x_scale * x[c.x];
    const double rhs = c.s_scale * x[c.s];
    double lhs;
    if (mu <= 0.0) {
      lhs = arg <= 0.0 ? 0.0 : kInfinity;
    } else {
      lhs = mu * std::exp(arg / mu);
    }
    viol.perspectives = std::max(viol.perspectives, (lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return viol;
}

}  // namespace relaycache
