#include "stratbid/opf.hpp"

#include <fmt/format.h>

#include <cmath>
#include <queue>
#include <stdexcept>

namespace stratbid {

namespace {

void check_connected(const Network& net) {
  if (net.buses.empty()) throw std::invalid_argument("network has no buses");
  std::map<int, std::vector<int>> adj;
  for (const auto& e : net.branches) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::set<int> seen;
  std::queue<int> q;
  q.push(net.buses.front().id);
  seen.insert(net.buses.front().id);
  while (!q.empty()) {
    int b = q.front();
    q.pop();
    for (int n : adj[b])
      if (seen.insert(n).second) q.push(n);
  }
  if (seen.size() != net.buses.size())
    throw std::invalid_argument("network is disconnected");
}

bool limit_included(const std::optional<ThermalScreen>& screen, const ThermalKey& key) {
  return !screen || screen->count(key) > 0;
}

void add_generator_cost(ConicProgram& prog, const Generator& g, VarId pg) {
  if (g.cost_lin != 0.0) {
    AffExpr lin = prog.objective().lin;
    lin.add_var(pg, g.cost_lin);
    prog.set_objective_linear(std::move(lin));
  }
  if (g.cost_quad > 0.0) prog.add_objective_quadratic(pg, g.cost_quad);
  if (g.cost_const != 0.0) prog.add_objective_constant(g.cost_const);
}

} // namespace

void LowerLevelBundle::set_injections(std::span<const double> p_es, std::span<const double> q_es) {
  for (int t = 0; t < horizon; ++t) {
    program.set_param_value(p_injection[t], t < static_cast<int>(p_es.size()) ? p_es[t] : 0.0);
    if (!q_injection.empty())
      program.set_param_value(q_injection[t], t < static_cast<int>(q_es.size()) ? q_es[t] : 0.0);
  }
}

LowerLevelBundle build_dc(const BilevelInstance& inst, const std::optional<ThermalScreen>& screen) {
  check_connected(inst.network);
  const Network& net = inst.network;
  const int T = inst.horizon;
  const int nb = static_cast<int>(net.buses.size());
  const int storage_pos = net.bus_index(inst.storage.bus);

  LowerLevelBundle bundle;
  bundle.model = LowerLevelModel::DC;
  bundle.horizon = T;
  bundle.storage_bus = storage_pos;
  ConicProgram& prog = bundle.program;

  std::vector<std::vector<VarId>> theta(T, std::vector<VarId>(nb));
  std::vector<std::vector<VarId>> pg(T);
  std::vector<std::vector<VarId>> flow(T);

  for (int t = 0; t < T; ++t) {
    bundle.p_injection.push_back(prog.add_parameter(fmt::format("pes_{}", t), 0.0));
    for (int i = 0; i < nb; ++i) {
      // Reference angle pinned at the first bus.
      if (i == 0) {
        theta[t][i] = prog.add_variable(fmt::format("th_{}_{}", t, net.buses[i].id), 0.0, 0.0);
      } else {
        theta[t][i] = prog.add_variable(fmt::format("th_{}_{}", t, net.buses[i].id));
      }
    }
    for (size_t k = 0; k < net.generators.size(); ++k) {
      const auto& g = net.generators[k];
      VarId v = prog.add_variable(fmt::format("pg_{}_{}", t, k), g.pmin, g.pmax);
      pg[t].push_back(v);
      add_generator_cost(prog, g, v);
    }
    for (size_t e = 0; e < net.branches.size(); ++e) {
      flow[t].push_back(prog.add_variable(fmt::format("pf_{}_{}", t, e)));
    }
  }

  for (int t = 0; t < T; ++t) {
    // Flow definitions: pf = (th_i - th_j - shift) / (x * tap).
    for (size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      if (br.x == 0.0) throw std::invalid_argument("zero branch reactance");
      const double bdc = 1.0 / (br.x * br.tap);
      const int i = net.bus_index(br.from), j = net.bus_index(br.to);
      AffExpr def = AffExpr::variable(flow[t][e]);
      def.add_var(theta[t][i], -bdc);
      def.add_var(theta[t][j], bdc);
      def.add_const(bdc * br.shift);
      prog.add_linear(fmt::format("pfdef_{}_{}", t, e), std::move(def), Rel::Eq);

      const ThermalKey key{t, static_cast<int>(e), true};
      if (br.s_max && limit_included(screen, key)) {
        AffExpr up = AffExpr::variable(flow[t][e]);
        up.add_const(-*br.s_max);
        prog.add_linear(fmt::format("smax_{}_{}", t, e), std::move(up), Rel::Le);
        AffExpr dn = AffExpr::variable(flow[t][e], -1.0);
        dn.add_const(-*br.s_max);
        prog.add_linear(fmt::format("smin_{}_{}", t, e), std::move(dn), Rel::Le);
        bundle.included_limits.insert(key);
      }
    }
    // Nodal balance: generation + storage injection - flows out + flows in = load.
    for (int i = 0; i < nb; ++i) {
      const auto& bus = net.buses[i];
      AffExpr bal;
      for (size_t k = 0; k < net.generators.size(); ++k)
        if (net.bus_index(net.generators[k].bus) == i) bal.add_var(pg[t][k], 1.0);
      if (i == storage_pos) bal.add_param(bundle.p_injection[t], 1.0);
      for (size_t e = 0; e < net.branches.size(); ++e) {
        const auto& br = net.branches[e];
        if (net.bus_index(br.from) == i) bal.add_var(flow[t][e], -1.0);
        if (net.bus_index(br.to) == i) bal.add_var(flow[t][e], 1.0);
      }
      double pd = 0.0;
      for (const auto& l : inst.hourly_loads[t])
        if (net.bus_index(l.bus) == i) pd += l.pd;
      pd += bus.gs; // constant-impedance shunt as fixed demand at V = 1
      bal.add_const(-pd);
      bundle.active_balance_row[{t, i}] = static_cast<int>(prog.linear().size());
      prog.add_linear(fmt::format("pbal_{}_{}", t, bus.id), std::move(bal), Rel::Eq,
                      RowTag::Balance);
    }
  }

  prog.freeze();
  return bundle;
}

LowerLevelBundle build_jabr(const BilevelInstance& inst,
                            const std::optional<ThermalScreen>& screen) {
  check_connected(inst.network);
  const Network& net = inst.network;
  const int T = inst.horizon;
  const int nb = static_cast<int>(net.buses.size());
  const int ne = static_cast<int>(net.branches.size());
  const int storage_pos = net.bus_index(inst.storage.bus);

  LowerLevelBundle bundle;
  bundle.model = LowerLevelModel::Jabr;
  bundle.horizon = T;
  bundle.storage_bus = storage_pos;
  ConicProgram& prog = bundle.program;

  std::vector<std::vector<VarId>> w(T, std::vector<VarId>(nb));     // |V|^2
  std::vector<std::vector<VarId>> wr(T, std::vector<VarId>(ne));    // Vi Vj cos
  std::vector<std::vector<VarId>> wi(T, std::vector<VarId>(ne));    // Vi Vj sin
  std::vector<std::vector<VarId>> pg(T), qg(T);
  std::vector<std::vector<VarId>> pf(T, std::vector<VarId>(ne)), pt(T, std::vector<VarId>(ne));
  std::vector<std::vector<VarId>> qf(T, std::vector<VarId>(ne)), qt(T, std::vector<VarId>(ne));

  for (int t = 0; t < T; ++t) {
    bundle.p_injection.push_back(prog.add_parameter(fmt::format("pes_{}", t), 0.0));
    bundle.q_injection.push_back(prog.add_parameter(fmt::format("qes_{}", t), 0.0));
    for (int i = 0; i < nb; ++i) {
      const auto& bus = net.buses[i];
      w[t][i] = prog.add_variable(fmt::format("w_{}_{}", t, bus.id), bus.vmin * bus.vmin,
                                  bus.vmax * bus.vmax);
    }
    for (int e = 0; e < ne; ++e) {
      const auto& br = net.branches[e];
      const auto& bi = net.buses[net.bus_index(br.from)];
      const auto& bj = net.buses[net.bus_index(br.to)];
      const double pair_max = bi.vmax * bj.vmax;
      wr[t][e] = prog.add_variable(fmt::format("wr_{}_{}", t, e), 0.0, pair_max);
      wi[t][e] = prog.add_variable(fmt::format("wi_{}_{}", t, e), -pair_max, pair_max);
      pf[t][e] = prog.add_variable(fmt::format("pf_{}_{}", t, e));
      pt[t][e] = prog.add_variable(fmt::format("pt_{}_{}", t, e));
      qf[t][e] = prog.add_variable(fmt::format("qf_{}_{}", t, e));
      qt[t][e] = prog.add_variable(fmt::format("qt_{}_{}", t, e));
    }
    for (size_t k = 0; k < net.generators.size(); ++k) {
      const auto& g = net.generators[k];
      VarId p = prog.add_variable(fmt::format("pg_{}_{}", t, k), g.pmin, g.pmax);
      VarId q = prog.add_variable(fmt::format("qg_{}_{}", t, k), g.qmin, g.qmax);
      pg[t].push_back(p);
      qg[t].push_back(q);
      add_generator_cost(prog, net.generators[k], p);
    }
  }

  for (int t = 0; t < T; ++t) {
    for (int e = 0; e < ne; ++e) {
      const auto& br = net.branches[e];
      const int i = net.bus_index(br.from), j = net.bus_index(br.to);
      const double zmag2 = br.r * br.r + br.x * br.x;
      if (zmag2 == 0.0) throw std::invalid_argument("zero branch impedance");
      const double g = br.r / zmag2, b = -br.x / zmag2;
      const double tr = br.tap * std::cos(br.shift), ti = br.tap * std::sin(br.shift);
      const double tm2 = br.tap * br.tap;

      // From-side flows.
      AffExpr pfe = AffExpr::variable(pf[t][e]);
      pfe.add_var(w[t][i], -(g + br.g_fr) / tm2);
      pfe.add_var(wr[t][e], -(-g * tr + b * ti) / tm2);
      pfe.add_var(wi[t][e], -(-b * tr - g * ti) / tm2);
      prog.add_linear(fmt::format("pfdef_{}_{}", t, e), std::move(pfe), Rel::Eq);

      AffExpr qfe = AffExpr::variable(qf[t][e]);
      qfe.add_var(w[t][i], (b + br.b_fr) / tm2);
      qfe.add_var(wr[t][e], (-b * tr - g * ti) / tm2);
      qfe.add_var(wi[t][e], -(-g * tr + b * ti) / tm2);
      prog.add_linear(fmt::format("qfdef_{}_{}", t, e), std::move(qfe), Rel::Eq);

      // To-side flows (conjugate direction).
      AffExpr pte = AffExpr::variable(pt[t][e]);
      pte.add_var(w[t][j], -(g + br.g_to));
      pte.add_var(wr[t][e], -(-g * tr - b * ti) / tm2);
      pte.add_var(wi[t][e], (-b * tr + g * ti) / tm2);
      prog.add_linear(fmt::format("ptdef_{}_{}", t, e), std::move(pte), Rel::Eq);

      AffExpr qte = AffExpr::variable(qt[t][e]);
      qte.add_var(w[t][j], (b + br.b_to));
      qte.add_var(wr[t][e], (-b * tr + g * ti) / tm2);
      qte.add_var(wi[t][e], (-g * tr - b * ti) / tm2);
      prog.add_linear(fmt::format("qtdef_{}_{}", t, e), std::move(qte), Rel::Eq);

      // Rotated-cone pair product written as a standard SOC row:
      // (wi + wj) >= || (2 wr, 2 wi, wi - wj) ||.
      std::vector<AffExpr> cone(4);
      cone[0] = AffExpr::variable(w[t][i]) + AffExpr::variable(w[t][j]);
      cone[1] = AffExpr::variable(wr[t][e], 2.0);
      cone[2] = AffExpr::variable(wi[t][e], 2.0);
      cone[3] = AffExpr::variable(w[t][i]) - AffExpr::variable(w[t][j]);
      prog.add_soc(fmt::format("jabr_{}_{}", t, e), std::move(cone));

      // Apparent-power limits, each side its own cone where screened in.
      if (br.s_max) {
        const ThermalKey kf{t, e, true};
        if (limit_included(screen, kf)) {
          std::vector<AffExpr> sf(3);
          sf[0] = AffExpr(*br.s_max);
          sf[1] = AffExpr::variable(pf[t][e]);
          sf[2] = AffExpr::variable(qf[t][e]);
          prog.add_soc(fmt::format("smaxf_{}_{}", t, e), std::move(sf));
          bundle.included_limits.insert(kf);
        }
        const ThermalKey kt{t, e, false};
        if (limit_included(screen, kt)) {
          std::vector<AffExpr> st(3);
          st[0] = AffExpr(*br.s_max);
          st[1] = AffExpr::variable(pt[t][e]);
          st[2] = AffExpr::variable(qt[t][e]);
          prog.add_soc(fmt::format("smaxt_{}_{}", t, e), std::move(st));
          bundle.included_limits.insert(kt);
        }
      }
    }

    for (int i = 0; i < nb; ++i) {
      const auto& bus = net.buses[i];
      double pd = 0.0, qd = 0.0;
      for (const auto& l : inst.hourly_loads[t]) {
        if (net.bus_index(l.bus) == i) {
          pd += l.pd;
          qd += l.qd;
        }
      }
      AffExpr pbal;
      AffExpr qbal;
      for (size_t k = 0; k < net.generators.size(); ++k) {
        if (net.bus_index(net.generators[k].bus) == i) {
          pbal.add_var(pg[t][k], 1.0);
          qbal.add_var(qg[t][k], 1.0);
        }
      }
      if (i == storage_pos) {
        pbal.add_param(bundle.p_injection[t], 1.0);
        qbal.add_param(bundle.q_injection[t], 1.0);
      }
      for (int e = 0; e < ne; ++e) {
        const auto& br = net.branches[e];
        if (net.bus_index(br.from) == i) {
          pbal.add_var(pf[t][e], -1.0);
          qbal.add_var(qf[t][e], -1.0);
        }
        if (net.bus_index(br.to) == i) {
          pbal.add_var(pt[t][e], -1.0);
          qbal.add_var(qt[t][e], -1.0);
        }
      }
      pbal.add_var(w[t][i], -bus.gs);
      qbal.add_var(w[t][i], bus.bs);
      pbal.add_const(-pd);
      qbal.add_const(-qd);
      bundle.active_balance_row[{t, i}] = static_cast<int>(prog.linear().size());
      prog.add_linear(fmt::format("pbal_{}_{}", t, bus.id), std::move(pbal), Rel::Eq,
                      RowTag::Balance);
      bundle.reactive_balance_row[{t, i}] = static_cast<int>(prog.linear().size());
      prog.add_linear(fmt::format("qbal_{}_{}", t, bus.id), std::move(qbal), Rel::Eq,
                      RowTag::Balance);
    }
  }

  prog.freeze();
  return bundle;
}

LowerLevelBundle build_lower_level(const BilevelInstance& inst,
                                   const std::optional<ThermalScreen>& screen) {
  return inst.model == LowerLevelModel::DC ? build_dc(inst, screen) : build_jabr(inst, screen);
}

PriceSurface extract_prices(const LowerLevelBundle& bundle, const DualProgram& dual,
                            std::span<const double> dual_point) {
  PriceSurface s;
  s.horizon = bundle.horizon;
  s.has_reactive = !bundle.reactive_balance_row.empty();
  int nb = 0;
  for (const auto& [key, row] : bundle.active_balance_row) nb = std::max(nb, key.second + 1);
  s.num_buses = nb;
  s.lambda1.assign(s.horizon * nb, 0.0);
  if (s.has_reactive) s.lambda2.assign(s.horizon * nb, 0.0);

  // Balance rows are "supply - demand = 0" with the demand inside the
  // constant, so system expenses rise by -eta per unit of extra load.
  for (const auto& [key, row] : bundle.active_balance_row) {
    VarId dv = dual.row_dual.at(row);
    if (dv < 0 || dv >= static_cast<VarId>(dual_point.size()))
      throw std::invalid_argument("extract_prices: missing dual value");
    s.lambda1[key.first * nb + key.second] = -dual_point[dv];
  }
  for (const auto& [key, row] : bundle.reactive_balance_row) {
    VarId dv = dual.row_dual.at(row);
    s.lambda2[key.first * nb + key.second] = -dual_point[dv];
  }
  return s;
}

PriceSurface estimate_price_bounds(PriceSurface s, double active_width, double reactive_width) {
  if (active_width < 0 || reactive_width < 0)
    throw std::invalid_argument("price bound width must be nonnegative");
  const size_t n = s.lambda1.size();
  s.lambda1_lo.resize(n);
  s.lambda1_hi.resize(n);
  for (size_t i = 0; i < n; ++i) {
    s.lambda1_lo[i] = std::max(0.0, s.lambda1[i] - active_width);
    s.lambda1_hi[i] = s.lambda1[i] + active_width;
  }
  if (s.has_reactive) {
    s.lambda2_lo.resize(n);
    s.lambda2_hi.resize(n);
    for (size_t i = 0; i < n; ++i) {
      s.lambda2_lo[i] = std::max(0.0, s.lambda2[i] - reactive_width);
      s.lambda2_hi[i] = s.lambda2[i] + reactive_width;
    }
  }
  return s;
}

std::vector<std::pair<ThermalKey, double>> branch_loadings(const LowerLevelBundle& bundle,
                                                           const BilevelInstance& inst,
                                                           std::span<const double> point) {
  std::vector<std::pair<ThermalKey, double>> out;
  const Network& net = inst.network;
  const ConicProgram& prog = bundle.program;
  for (int t = 0; t < bundle.horizon; ++t) {
    for (size_t e = 0; e < net.branches.size(); ++e) {
      if (!net.branches[e].s_max) continue;
      if (bundle.model == LowerLevelModel::DC) {
        double p = point[prog.var(fmt::format("pf_{}_{}", t, e))];
        out.push_back({ThermalKey{t, static_cast<int>(e), true}, std::abs(p)});
      } else {
        double p = point[prog.var(fmt::format("pf_{}_{}", t, e))];
        double q = point[prog.var(fmt::format("qf_{}_{}", t, e))];
        out.push_back({ThermalKey{t, static_cast<int>(e), true}, std::hypot(p, q)});
        p = point[prog.var(fmt::format("pt_{}_{}", t, e))];
        q = point[prog.var(fmt::format("qt_{}_{}", t, e))];
        out.push_back({ThermalKey{t, static_cast<int>(e), false}, std::hypot(p, q)});
      }
    }
  }
  return out;
}

ThermalScreen screen_from_point(const BilevelInstance& inst, const LowerLevelBundle& bundle,
                                std::span<const double> point) {
  ThermalScreen screen;
  for (const auto& [key, loading] : branch_loadings(bundle, inst, point)) {
    const double smax = *inst.network.branches[key.branch].s_max;
    if (loading >= inst.thermal_screen_threshold * smax) screen.insert(key);
  }
  return screen;
}

ThermalScreen all_limits(const BilevelInstance& inst) {
  ThermalScreen screen;
  for (int t = 0; t < inst.horizon; ++t) {
    for (size_t e = 0; e < inst.network.branches.size(); ++e) {
      if (!inst.network.branches[e].s_max) continue;
      screen.insert(ThermalKey{t, static_cast<int>(e), true});
      if (inst.model == LowerLevelModel::Jabr)
        screen.insert(ThermalKey{t, static_cast<int>(e), false});
    }
  }
  return screen;
}

} // namespace stratbid
