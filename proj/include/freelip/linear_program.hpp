#pragma once

#include <limits>
#include <vector>

#include "freelip/common.hpp"

namespace freelip {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class Relation { LessEq, Equal, GreaterEq };

struct LinearConstraint {
  std::vector<double> coef;
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
};

// Dense LP in natural form: sense, objective, rows, per-variable bounds.
// Variables default to free; rhs must be finite.
struct LinearProgram {
  Sense sense = Sense::Minimize;
  std::vector<double> objective;
  std::vector<LinearConstraint> rows;
  std::vector<double> lower, upper;

  LinearProgram() = default;
  explicit LinearProgram(int nvars, Sense s = Sense::Minimize)
      : sense(s), objective(nvars, 0.0), lower(nvars, -kInf), upper(nvars, kInf) {}

  int num_vars() const { return static_cast<int>(objective.size()); }
  void add_row(std::vector<double> coef, Relation rel, double rhs) {
    rows.push_back({std::move(coef), rel, rhs});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  std::vector<double> x;      // primal values, original variables
  double objective = 0.0;     // in the original sense
  double dual_objective = 0.0;
  std::vector<double> dual;   // multiplier per original row

  // Certificate residuals, relative to scale = 1 + max |input coefficient|.
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double cs_residual = 0.0;
  double gap = 0.0;
  double scale = 1.0;

  // Infeasibility certificate: ray with combined_row'x <= gain impossible.
  // farkas_residual = max violation of the ray inequalities, farkas_gain > 0.
  std::vector<double> farkas;
  double farkas_gain = 0.0;
  double farkas_residual = 0.0;

  int iterations = 0;
};

// Two-phase dense simplex. Deterministic: Dantzig entering with lowest-index
// ties, permanent switch to Bland's rule on stall, refined basis solves via
// LU at termination. Never reports a wrong Optimal: certificate residuals are
// checked before returning and violations degrade the status to
// NumericalFailure.
LpSolution lp_solve(const LinearProgram& lp);

}  // namespace freelip
