#pragma once

#include "stratbid/nlp.hpp"

namespace stratbid {

struct BnbSolution {
  NlpSolution best;
  long nodes = 0;
  double mip_gap_pct = 0.0; // (best bound - incumbent) / max(1, |incumbent|) * 100
  bool proven = false;
};

/// Best-first branch and bound over the problem's integrality marks.
/// Node relaxations go through the conic solver when the continuous
/// problem is conic-representable, otherwise through the Newton solver.
/// `exhaustive` enumerates every binary assignment instead (guarded to 2^20).
BnbSolution branch_and_bound(const ReducedProblem& r, std::span<const double> start,
                             const SolveOptions& opts, bool exhaustive = false);

} // namespace stratbid
