#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stratbid/conic.hpp"

namespace stratbid {

enum class SolveStatus {
  Optimal,
  Feasible,        // feasible point, optimality not certified
  InfeasiblePoint, // converged to an infeasible point
  Infeasible,      // certificate of primal infeasibility
  Unbounded,
  IterationLimit,
  TimeLimit,
};

const char* to_string(SolveStatus s);

struct SolveOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-8;
  int max_iterations = 200;
  int multistart_count = 16;
  double perturbation_radius = 0.6;
  double time_limit_s = 1e30;
  uint64_t seed = 0;
  /// Structured per-iteration trace lines when set.
  std::ostream* trace = nullptr;
};

/// Result of a conic solve, duals indexed by the primal program's rows.
struct ConicSolution {
  SolveStatus status = SolveStatus::IterationLimit;
  std::vector<double> point;
  double objective = 0.0;
  double max_infeasibility = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
  /// One multiplier per linear row (free for equalities, >= 0 for
  /// inequalities); one vector per SOC row.
  std::vector<double> row_duals;
  std::vector<std::vector<double>> soc_duals;

  bool ok() const { return status == SolveStatus::Optimal || status == SolveStatus::Feasible; }
};

/// Primal-dual interior-point method with Nesterov-Todd scaling and
/// Mehrotra predictor-corrector steps; handles linear rows, SOC rows and
/// diagonal convex quadratic objectives.
ConicSolution solve_conic(const ConicProgram& p, const SolveOptions& opts = {});
ConicSolution solve_conic(const ConicProgram& p, std::span<const double> param_values,
                          const SolveOptions& opts = {});

/// Dense dual-program point assembled from a conic solution of the primal
/// (mirror variables take the primal values of their quadratic variables).
std::vector<double> dual_point_from_solution(const DualProgram& dual,
                                             const ConicSolution& sol);

} // namespace stratbid
