#include "stratbid/upper.hpp"

#include <fmt/format.h>

namespace stratbid {

UpperLevelModel build_upper_level(const BilevelInstance& inst, bool reactive_bids,
                                  bool reactive_market, bool binaries) {
  const StorageSpec& es = inst.storage;
  const int T = inst.horizon;
  UpperLevelModel m;
  m.horizon = T;
  m.reactive = reactive_bids;
  m.binaries = binaries;

  auto add_var = [&](const std::string& name, double lb, double ub) {
    VarId id = static_cast<VarId>(m.vars.size());
    m.vars.push_back(VarInfo{name, lb, ub, false});
    return id;
  };
  auto add_bin = [&](const std::string& name) {
    VarId id = static_cast<VarId>(m.vars.size());
    m.vars.push_back(VarInfo{name, 0.0, 1.0, true});
    m.binary_vars.push_back(id);
    return id;
  };

  const double sbar = es.power_rating;
  for (int t = 0; t < T; ++t) {
    m.soe.push_back(add_var(fmt::format("soe_{}", t), 0.0, es.energy_capacity));
    m.p_ch.push_back(add_var(fmt::format("pch_{}", t), 0.0, sbar));
    m.p_dis.push_back(add_var(fmt::format("pdis_{}", t), 0.0, sbar));
    m.p_es.push_back(add_var(fmt::format("pes_{}", t), -sbar, sbar));
    if (binaries) m.x_p.push_back(add_bin(fmt::format("xp_{}", t)));
    if (reactive_bids) {
      m.q_ch.push_back(add_var(fmt::format("qch_{}", t), 0.0, sbar));
      m.q_dis.push_back(add_var(fmt::format("qdis_{}", t), 0.0, sbar));
      m.q_es.push_back(add_var(fmt::format("qes_{}", t), -sbar, sbar));
      if (binaries) m.x_q.push_back(add_bin(fmt::format("xq_{}", t)));
    } else if (reactive_market) {
      m.q_es.push_back(add_var(fmt::format("qes_{}", t), 0.0, 0.0));
    }
  }

  const double soe0 = es.initial_fraction * es.energy_capacity;
  for (int t = 0; t < T; ++t) {
    // soe_t - soe_{t-1} - eta_ch * pch_t + pdis_t / eta_dis = 0
    AffExpr rec = AffExpr::variable(m.soe[t]);
    if (t > 0) {
      rec.add_var(m.soe[t - 1], -1.0);
    } else {
      rec.add_const(-soe0);
    }
    rec.add_var(m.p_ch[t], -es.eta_charge);
    rec.add_var(m.p_dis[t], 1.0 / es.eta_discharge);
    m.rows.push_back({fmt::format("soe_rec_{}", t), std::move(rec), Rel::Eq});

    AffExpr def = AffExpr::variable(m.p_es[t]);
    def.add_var(m.p_dis[t], -1.0);
    def.add_var(m.p_ch[t], 1.0);
    m.rows.push_back({fmt::format("pes_def_{}", t), std::move(def), Rel::Eq});

    if (binaries) {
      AffExpr ch = AffExpr::variable(m.p_ch[t]);
      ch.add_var(m.x_p[t], -sbar);
      m.rows.push_back({fmt::format("pch_rate_{}", t), std::move(ch), Rel::Le});
      AffExpr dis = AffExpr::variable(m.p_dis[t]);
      dis.add_var(m.x_p[t], sbar);
      dis.add_const(-sbar);
      m.rows.push_back({fmt::format("pdis_rate_{}", t), std::move(dis), Rel::Le});
    }
    if (reactive_bids) {
      // Injection-positive, mirroring the active split.
      AffExpr qdef = AffExpr::variable(m.q_es[t]);
      qdef.add_var(m.q_dis[t], -1.0);
      qdef.add_var(m.q_ch[t], 1.0);
      m.rows.push_back({fmt::format("qes_def_{}", t), std::move(qdef), Rel::Eq});
      if (binaries) {
        AffExpr qc = AffExpr::variable(m.q_ch[t]);
        qc.add_var(m.x_q[t], -sbar);
        m.rows.push_back({fmt::format("qch_rate_{}", t), std::move(qc), Rel::Le});
        AffExpr qd = AffExpr::variable(m.q_dis[t]);
        qd.add_var(m.x_q[t], sbar);
        qd.add_const(-sbar);
        m.rows.push_back({fmt::format("qdis_rate_{}", t), std::move(qd), Rel::Le});
      }
    }
  }
  if (es.terminal == TerminalPolicy::Fixed) {
    AffExpr term = AffExpr::variable(m.soe[T - 1]);
    term.add_const(-soe0);
    m.rows.push_back({"soe_terminal", std::move(term), Rel::Eq});
  }
  return m;
}

} // namespace stratbid
