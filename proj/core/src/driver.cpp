#include "stratbid/driver.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>

namespace stratbid {

namespace {

std::vector<double> zeros(int n) { return std::vector<double>(n, 0.0); }

std::string status_label(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "ok";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::InfeasiblePoint: return "Converged to infeas. point";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "Iteration limit";
    case SolveStatus::TimeLimit: return "Time limit";
  }
  return "?";
}

/// Warm start for the reduced problem: idle upper level, operating-point
/// primal and dual values, definitional zeros for technique auxiliaries.
std::vector<double> build_warm_start(const ReducedProblem& r, const BilevelInstance& inst,
                                     const Baseline& base) {
  std::vector<double> pt(r.vars.size(), 0.0);
  const double soe0 = inst.storage.initial_fraction * inst.storage.energy_capacity;
  for (int t = 0; t < r.horizon; ++t) {
    // soe variables are the first upper-level block, laid out per hour.
  }
  for (size_t i = 0; i < r.vars.size(); ++i) {
    const auto& name = r.vars[i].name;
    if (name.rfind("soe_", 0) == 0) pt[i] = soe0;
  }
  const auto& primal_point = base.warm.point;
  for (size_t v = 0; v < primal_point.size(); ++v) pt[r.reg_primal(static_cast<VarId>(v))] = primal_point[v];
  const auto dual_point = dual_point_from_solution(base.dual, base.warm);
  for (size_t v = 0; v < dual_point.size(); ++v) pt[r.reg_dual(static_cast<VarId>(v))] = dual_point[v];
  return pt;
}

struct StepFiveResult {
  NlpSolution sol;
  std::optional<long> nodes;
  std::optional<double> mip_gap_pct;
};

StepFiveResult solve_step5(const ReducedProblem& r, std::span<const double> warm,
                           const DriverOptions& opts) {
  StepFiveResult out;
  if (!r.integer_vars.empty()) {
    BnbSolution b = branch_and_bound(r, warm, opts.solve, opts.exhaustive_bnb);
    out.sol = b.best;
    out.nodes = b.nodes;
    out.mip_gap_pct = b.mip_gap_pct;
    return out;
  }
  if (is_conic_representable(r)) {
    ConicProgram p = to_conic(r, {});
    ConicSolution cs = solve_conic(p, opts.solve);
    out.sol.status = cs.status;
    out.sol.point = cs.point;
    out.sol.objective = cs.point.empty() ? 0.0 : r.objective.eval(cs.point);
    out.sol.max_infeasibility = cs.max_infeasibility;
    out.sol.iterations = cs.iterations;
    out.sol.wall_time_s = cs.wall_time_s;
    return out;
  }
  out.sol = multistart(r, warm, opts.solve, {});
  return out;
}

} // namespace

Baseline compute_baseline(const BilevelInstance& inst, const DriverOptions& opts,
                          std::span<const double> p_bids, std::span<const double> q_bids,
                          const std::optional<ThermalScreen>& force_screen) {
  Baseline base;
  base.op_bids_p.assign(inst.horizon, 0.0);
  base.op_bids_q.assign(inst.horizon, 0.0);
  for (size_t t = 0; t < p_bids.size() && t < base.op_bids_p.size(); ++t)
    base.op_bids_p[t] = p_bids[t];
  for (size_t t = 0; t < q_bids.size() && t < base.op_bids_q.size(); ++t)
    base.op_bids_q[t] = q_bids[t];

  base.full = build_lower_level(inst);
  base.full.set_injections(base.op_bids_p, base.op_bids_q);
  ConicSolution full_sol = solve_conic(base.full.program, opts.solve);
  if (!full_sol.ok())
    throw std::runtime_error(fmt::format("operating-point clearing failed: {}",
                                         to_string(full_sol.status)));
  base.idle_expenses = full_sol.objective;

  base.screen = screen_from_point(inst, base.full, full_sol.point);
  if (force_screen) {
    for (const auto& key : *force_screen) base.screen.insert(key);
  }
  base.screened = build_lower_level(inst, base.screen);
  base.screened.set_injections(base.op_bids_p, base.op_bids_q);
  base.warm = solve_conic(base.screened.program, opts.solve);
  if (!base.warm.ok())
    throw std::runtime_error(fmt::format("screened clearing failed: {}",
                                         to_string(base.warm.status)));

  auto [dual, pairing] = dualize(base.screened.program);
  base.dual = std::move(dual);
  base.pairing = std::move(pairing);

  PriceSurface surf = extract_prices(base.screened, base.dual,
                                     dual_point_from_solution(base.dual, base.warm));
  base.surface =
      estimate_price_bounds(std::move(surf), opts.active_price_width, opts.reactive_price_width);
  return base;
}

VerifyResult verify(const BilevelInstance& inst, std::span<const double> p_bids,
                    std::span<const double> q_bids, const DriverOptions& opts) {
  VerifyResult out;
  LowerLevelBundle full = build_lower_level(inst);
  full.set_injections(p_bids, q_bids);
  ConicSolution sol = solve_conic(full.program, opts.solve);
  out.status = sol.status;
  out.solution = sol;
  if (!sol.ok()) return out;
  out.actual_expenses = sol.objective;

  auto [dual, pairing] = dualize(full.program);
  out.prices = extract_prices(full, dual, dual_point_from_solution(dual, sol));
  out.actual_profit = profit_of(p_bids, q_bids, out.prices, full.storage_bus);

  const double tol = 1e-6;
  for (const auto& [key, loading] : branch_loadings(full, inst, sol.point)) {
    const double smax = *inst.network.branches[key.branch].s_max;
    if (loading > smax * (1.0 + tol)) {
      out.violations.push_back(fmt::format("t={} branch={} side={} loading={:.6f} limit={:.6f}",
                                           key.t, key.branch, key.at_from ? "from" : "to", loading,
                                           smax));
    }
  }
  return out;
}

SolveReport run_sequential(const BilevelInstance& inst, const TechniqueSpec& spec,
                           const DriverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport report;
  report.technique = spec.name();
  report.params = spec.params_string();

  std::vector<double> op_p = zeros(inst.horizon), op_q = zeros(inst.horizon);
  std::optional<ThermalScreen> forced;
  DriverOptions local = opts;

  for (int outer = 0; outer < std::max(1, opts.outer_iterations); ++outer) {
    report.outer_iteration = outer + 1;

    Baseline base;
    try {
      base = compute_baseline(inst, local, op_p, op_q, forced);
    } catch (const std::exception& e) {
      report.status = e.what();
      return report;
    }

    bool done = false;
    for (int attempt = 0; attempt < 3 && !done; ++attempt) {
      ReducedProblem red =
          reduce(inst, base.screened, base.dual, base.pairing, base.surface, spec,
                 local.reactive_bids);
      std::vector<double> warm = build_warm_start(red, inst, base);
      StepFiveResult s5 = solve_step5(red, warm, local);
      report.iterations = s5.sol.iterations;
      report.nodes = s5.nodes;
      report.mip_gap_pct = s5.mip_gap_pct;
      report.status = status_label(s5.sol.status);
      if (!s5.sol.ok()) {
        report.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return report;
      }

      report.computed_profit = profit_of(red, s5.sol.point);
      report.system_expenses_computed = red.omega_p.eval(s5.sol.point);
      const double gap_abs =
          red.omega_p.eval(s5.sol.point) - red.omega_d.eval(s5.sol.point);
      report.duality_gap_pct =
          gap_abs / std::max(1.0, std::abs(report.system_expenses_computed)) * 100.0;

      std::vector<double> p_bids(inst.horizon, 0.0), q_bids(inst.horizon, 0.0);
      for (int t = 0; t < inst.horizon; ++t) {
        p_bids[t] = s5.sol.point[red.pes_vars[t]];
        if (!red.qes_vars.empty()) q_bids[t] = s5.sol.point[red.qes_vars[t]];
      }

      // Screen check on the computed dispatch: any unscreened limit the
      // step-5 point overloads triggers a screen expansion retry.
      ThermalScreen violated;
      {
        std::vector<double> primal_part(base.screened.program.num_vars());
        for (size_t v = 0; v < primal_part.size(); ++v)
          primal_part[v] = s5.sol.point[red.reg_primal(static_cast<VarId>(v))];
        for (const auto& [key, loading] : branch_loadings(base.screened, inst, primal_part)) {
          const double smax = *inst.network.branches[key.branch].s_max;
          if (loading > smax * (1.0 + 1e-6) && !base.screen.count(key)) violated.insert(key);
        }
      }
      if (!violated.empty() && attempt == 0) {
        forced = base.screen;
        for (const auto& k : violated) forced->insert(k);
        try {
          base = compute_baseline(inst, local, op_p, op_q, forced);
        } catch (const std::exception& e) {
          report.status = e.what();
          return report;
        }
        continue;
      }

      VerifyResult ver = verify(inst, p_bids, q_bids, local);
      if (!ver.solution.ok()) {
        report.status = fmt::format("verification failed: {}", to_string(ver.status));
        report.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return report;
      }

      // Bound-widening retry when a verified price leaves the envelopes.
      const bool uses_bounds = spec.kind == Technique::MC || spec.is_discretized();
      if (uses_bounds && attempt < 2) {
        bool outside = false;
        const int nb = base.surface.num_buses;
        const int bus = base.screened.storage_bus;
        for (int t = 0; t < inst.horizon && !outside; ++t) {
          const double l1 = ver.prices.l1(t, bus);
          if (l1 < base.surface.lambda1_lo[t * nb + bus] - 1e-9 ||
              l1 > base.surface.lambda1_hi[t * nb + bus] + 1e-9)
            outside = true;
          if (base.surface.has_reactive) {
            const double l2 = ver.prices.l2(t, bus);
            if (l2 < base.surface.lambda2_lo[t * nb + bus] - 1e-9 ||
                l2 > base.surface.lambda2_hi[t * nb + bus] + 1e-9)
              outside = true;
          }
        }
        if (outside) {
          local.active_price_width *= 10.0;
          local.reactive_price_width *= 10.0;
          base.surface = estimate_price_bounds(base.surface, local.active_price_width,
                                               local.reactive_price_width);
          continue;
        }
      }

      report.actual_profit = ver.actual_profit;
      report.system_expenses_actual = ver.actual_expenses;
      report.thermal_violations = ver.violations;
      if (std::abs(report.actual_profit) > 1e-12) {
        report.profit_diff_pct = (report.computed_profit - report.actual_profit) /
                                 std::abs(report.actual_profit) * 100.0;
      } else {
        report.profit_diff_pct = std::abs(report.computed_profit) > 1e-9 ? 100.0 : 0.0;
      }

      // Step-6 solution becomes the next operating point.
      op_p = p_bids;
      op_q = q_bids;
      done = true;
    }
    if (!done) break;
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<SolveReport> compare_techniques(const BilevelInstance& inst,
                                            const std::vector<TechniqueSpec>& specs,
                                            const DriverOptions& opts) {
  std::vector<SolveReport> reports;
  for (const auto& spec : specs) {
    try {
      reports.push_back(run_sequential(inst, spec, opts));
    } catch (const std::exception& e) {
      SolveReport r;
      r.technique = spec.name();
      r.params = spec.params_string();
      r.status = e.what();
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

StudyResult reactive_benefit_study(const BilevelInstance& inst, const TechniqueSpec& spec,
                                   const DriverOptions& opts) {
  if (inst.model != LowerLevelModel::Jabr)
    throw std::invalid_argument("reactive study requires the Jabr lower level");
  StudyResult result;
  double sum_savings = 0.0, sum_increase = 0.0;
  int counted = 0;

  for (const auto& bus : inst.network.buses) {
    BusStudyEntry entry;
    entry.bus = bus.id;
    BilevelInstance placed = inst;
    placed.storage.bus = bus.id;
    try {
      DriverOptions base_opts = opts;
      Baseline base = compute_baseline(placed, base_opts);
      const int pos = placed.network.bus_index(bus.id);
      double max_l2 = 0.0;
      for (int t = 0; t < placed.horizon; ++t)
        max_l2 = std::max(max_l2, std::abs(base.surface.l2(t, pos)));
      if (max_l2 <= 1e-7) {
        entry.excluded = true;
        result.buses.push_back(entry);
        continue;
      }

      DriverOptions p_only = opts;
      p_only.reactive_bids = false;
      SolveReport rp = run_sequential(placed, spec, p_only);
      DriverOptions pq = opts;
      pq.reactive_bids = true;
      SolveReport rpq = run_sequential(placed, spec, pq);
      if (rp.status != "ok" || rpq.status != "ok") {
        entry.status = rp.status != "ok" ? rp.status : rpq.status;
        result.buses.push_back(entry);
        continue;
      }
      entry.profit_active_only = rp.actual_profit;
      entry.profit_with_reactive = rpq.actual_profit;
      entry.profit_increase_abs = rpq.actual_profit - rp.actual_profit;
      entry.profit_increase_pct =
          entry.profit_increase_abs / std::max(1e-9, std::abs(rp.actual_profit)) * 100.0;
      entry.expense_savings_abs = rp.system_expenses_actual - rpq.system_expenses_actual;
      sum_savings += entry.expense_savings_abs;
      sum_increase += entry.profit_increase_abs;
      ++counted;
    } catch (const std::exception& e) {
      entry.status = e.what();
    }
    result.buses.push_back(entry);
  }
  result.savings_to_profit_ratio = sum_increase > 1e-12 ? sum_savings / sum_increase : 0.0;
  return result;
}

} // namespace stratbid
