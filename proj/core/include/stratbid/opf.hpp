#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "stratbid/case_io.hpp"
#include "stratbid/conic.hpp"

namespace stratbid {

/// One screened-in thermal limit: hour, branch index, measured side.
struct ThermalKey {
  int t = 0;
  int branch = 0;
  bool at_from = true;
  auto operator<=>(const ThermalKey&) const = default;
};
using ThermalScreen = std::set<ThermalKey>;

/// Market-clearing lower level over the horizon with the storage bid
/// injections exposed as fixed-parameter slots.
struct LowerLevelBundle {
  ConicProgram program;
  LowerLevelModel model = LowerLevelModel::DC;
  int horizon = 0;
  int storage_bus = 0;

  /// Row index (into program.linear()) of the active balance per (t, bus
  /// position); reactive analogue only for Jabr.
  std::map<std::pair<int, int>, int> active_balance_row;
  std::map<std::pair<int, int>, int> reactive_balance_row;

  std::vector<ParamId> p_injection; // p^es slot per hour
  std::vector<ParamId> q_injection; // q^es slot per hour (Jabr only)

  /// Which thermal limits were materialized (all when built unscreened).
  ThermalScreen included_limits;

  void set_injections(std::span<const double> p_es, std::span<const double> q_es);
};

/// Locational prices with optional estimated envelope bounds.
struct PriceSurface {
  int horizon = 0;
  int num_buses = 0;
  bool has_reactive = false;
  std::vector<double> lambda1; // [t * num_buses + bus]
  std::vector<double> lambda2;
  std::vector<double> lambda1_lo, lambda1_hi;
  std::vector<double> lambda2_lo, lambda2_hi;

  double l1(int t, int bus) const { return lambda1[t * num_buses + bus]; }
  double l2(int t, int bus) const { return has_reactive ? lambda2[t * num_buses + bus] : 0.0; }
  bool has_bounds() const { return !lambda1_lo.empty(); }
};

/// DC linearized lower level: angles, linear flows, quadratic costs.
/// Passing a screen keeps only those thermal limits; nullopt keeps all.
LowerLevelBundle build_dc(const BilevelInstance& inst,
                          const std::optional<ThermalScreen>& screen = std::nullopt);

/// Jabr SOCP relaxation in lifted voltage-product variables.
LowerLevelBundle build_jabr(const BilevelInstance& inst,
                            const std::optional<ThermalScreen>& screen = std::nullopt);

LowerLevelBundle build_lower_level(const BilevelInstance& inst,
                                   const std::optional<ThermalScreen>& screen = std::nullopt);

/// Reads balance-row duals into prices, signed so that a marginal load
/// increase at (t, i) raises the system expenses by lambda1(t, i).
PriceSurface extract_prices(const LowerLevelBundle& bundle, const DualProgram& dual,
                            std::span<const double> dual_point);

/// Envelope bounds lambda +/- width with the lower bound clamped at zero.
PriceSurface estimate_price_bounds(PriceSurface surface, double active_width = 1000.0,
                                   double reactive_width = 300.0);

/// Branch loadings |S| (or |P| for DC) in p.u. at a solved point, one entry
/// per rated branch side and hour; used for screening and verification.
std::vector<std::pair<ThermalKey, double>> branch_loadings(const LowerLevelBundle& bundle,
                                                           const BilevelInstance& inst,
                                                           std::span<const double> point);

/// Limits loaded above threshold * s_max at the given point.
ThermalScreen screen_from_point(const BilevelInstance& inst, const LowerLevelBundle& bundle,
                                std::span<const double> point);

/// All representable thermal limits of an instance.
ThermalScreen all_limits(const BilevelInstance& inst);

} // namespace stratbid
