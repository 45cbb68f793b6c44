#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "stratbid/bnb.hpp"
#include "stratbid/case_io.hpp"
#include "stratbid/nlp.hpp"
#include "stratbid/opf.hpp"
#include "stratbid/reducer.hpp"
#include "stratbid/report.hpp"

namespace stratbid {

struct DriverOptions {
  SolveOptions solve;
  int outer_iterations = 1;
  double active_price_width = 1000.0;  // per-unit money
  double reactive_price_width = 300.0;
  bool reactive_bids = true;
  bool exhaustive_bnb = false;
};

/// Shared step-1 state: idle-storage clearing on all limits, screen,
/// price surface with bounds, warm start on the screened program.
struct Baseline {
  LowerLevelBundle full;      // all thermal limits
  LowerLevelBundle screened;
  DualProgram dual;
  PairingMap pairing;
  PriceSurface surface;       // with envelope bounds
  ThermalScreen screen;
  ConicSolution warm;         // solution of the screened program (bids fixed)
  std::vector<double> op_bids_p, op_bids_q; // bids the operating point carries
  double idle_expenses = 0.0;
};

Baseline compute_baseline(const BilevelInstance& inst, const DriverOptions& opts,
                          std::span<const double> p_bids = {}, std::span<const double> q_bids = {},
                          const std::optional<ThermalScreen>& force_screen = std::nullopt);

struct VerifyResult {
  SolveStatus status = SolveStatus::Optimal;
  double actual_profit = 0.0;
  double actual_expenses = 0.0;
  PriceSurface prices;
  ConicSolution solution;
  std::vector<std::string> violations; // thermal violations at the verification solve
};

/// Step 6: re-clears the lower level with the bids fixed, re-extracts
/// prices, and checks every thermal limit.
VerifyResult verify(const BilevelInstance& inst, std::span<const double> p_bids,
                    std::span<const double> q_bids, const DriverOptions& opts);

/// The sequential outer algorithm for one technique; reports the last
/// outer iteration.
SolveReport run_sequential(const BilevelInstance& inst, const TechniqueSpec& spec,
                           const DriverOptions& opts);

/// One report per spec over a shared step-1 baseline; failures are kept
/// in-row and the run continues.
std::vector<SolveReport> compare_techniques(const BilevelInstance& inst,
                                            const std::vector<TechniqueSpec>& specs,
                                            const DriverOptions& opts);

struct BusStudyEntry {
  int bus = 0;
  bool excluded = false; // zero reactive prices at the operating point
  double profit_active_only = 0.0;
  double profit_with_reactive = 0.0;
  double profit_increase_pct = 0.0;
  double profit_increase_abs = 0.0;
  double expense_savings_abs = 0.0;
  std::string status = "ok";
};

struct StudyResult {
  std::vector<BusStudyEntry> buses;
  double savings_to_profit_ratio = 0.0; // mean savings / mean profit increase
};

/// Reactive-bid benefit study over every bus of the network.
StudyResult reactive_benefit_study(const BilevelInstance& inst, const TechniqueSpec& spec,
                                   const DriverOptions& opts);

} // namespace stratbid
