#pragma once

#include <string_view>

#include "ohio/core.hpp"

namespace ohio {

/// minimize c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi.
/// Bounds may be infinite; empty lo/hi mean x >= 0.
struct LpProblem {
  Vec c;
  Mat A_ub;
  Vec b_ub;
  Mat A_eq;
  Vec b_eq;
  Vec lo;
  Vec hi;

  int num_vars() const { return static_cast<int>(c.size()); }
  // Fills in default bounds and empty constraint blocks with the right column count.
  LpProblem normalized() const;
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };
std::string_view to_string(LpStatus status);

/// Multipliers follow the minimization convention: duals_ub <= 0, and at an
/// optimum
///   c'x = b_ub'duals_ub + b_eq'duals_eq + lo'bound_lo + hi'bound_hi
/// where bound_lo >= 0 and bound_hi <= 0 are the multipliers of the variable
/// bounds (zero on infinite bounds).
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double objective_value = 0.0;
  Vec duals_ub;
  Vec duals_eq;
  Vec bound_lo;
  Vec bound_hi;
  // Unbounded: a ray d with c'd < 0 that keeps x feasible.
  // Infeasible: phase-one multipliers on [ub rows; eq rows].
  Vec certificate;
  int pivots = 0;
};

struct LpOptions {
  double tol = 1e-9;
  int max_pivots = 50000;
};

/// Two-phase dense tableau simplex with Bland's rule. Finite bounds other
/// than the zero lower bound are modelled as shifts and extra rows.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

struct LpResiduals {
  double primal = 0.0;         // max constraint or bound violation
  double complementarity = 0.0;  // max |multiplier * slack|
  double duality_gap = 0.0;    // |primal objective - dual objective|
};

LpResiduals lp_residuals(const LpProblem& problem, const LpSolution& solution);

}  // namespace ohio
