#pragma once

#include <optional>
#include <vector>

#include "stratbid/reducer.hpp"
#include "stratbid/solver.hpp"

namespace stratbid {

struct NlpSolution {
  SolveStatus status = SolveStatus::IterationLimit;
  std::vector<double> point;
  double objective = 0.0; // maximize-sense value
  double max_infeasibility = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;

  bool ok() const { return status == SolveStatus::Optimal || status == SolveStatus::Feasible; }
};

/// Per-variable bound overrides used by branch and bound; empty means the
/// registry bounds apply.
using BoundOverrides = std::vector<std::pair<double, double>>;

/// Largest violation across all rows (linear, SOC, quadratic, smoothing)
/// and bounds of a reduced problem at a point.
double reduced_infeasibility(const ReducedProblem& r, std::span<const double> point,
                             const BoundOverrides& overrides = {});

/// Damped-Newton interior-point solve of the (generally nonconvex) reduced
/// problem from one starting point: slack barrier on inequalities, exact
/// first-order information, ell-1 merit line search.
NlpSolution solve_nlp(const ReducedProblem& r, std::span<const double> start,
                      const SolveOptions& opts = {}, const BoundOverrides& overrides = {});

/// Multistart wrapper: the unperturbed start plus `multistart_count - 1`
/// perturbed copies (infinity-norm radius in scaled units), best feasible
/// objective wins; deterministic under a fixed seed.
NlpSolution multistart(const ReducedProblem& r, std::span<const double> start,
                       const SolveOptions& opts = {}, const BoundOverrides& overrides = {});

/// True when the problem (with integrality relaxed) is representable as a
/// convex conic program: no smoothing rows, convex quadratic rows, concave
/// diagonal objective.
bool is_conic_representable(const ReducedProblem& r);

/// Conic view of a representable reduced problem (minimizes the negated
/// objective; convex quadratic rows become SOC rows).
ConicProgram to_conic(const ReducedProblem& r, const BoundOverrides& overrides = {});

/// Convenience: solve through the conic path when representable, else
/// multistart NLP.
NlpSolution solve_reduced(const ReducedProblem& r, std::span<const double> start,
                          const SolveOptions& opts = {}, const BoundOverrides& overrides = {});

/// Flat start heuristic when no warm start is available.
std::vector<double> default_start(const ReducedProblem& r);

} // namespace stratbid
