#include <fmt/format.h>

#include <stdexcept>

#include "stratbid/conic.hpp"

namespace stratbid {

// Lagrangian convention, primal minimizes:
//   L = f(v) + sum_eq eta * expr + sum_le mu * expr - sum_soc y^T x(v)
// with mu >= 0 and y in the cone.  Stationarity in v gives the dual rows;
// quadratic cost variables get a mirror z carrying the pattern
//   c_j + (A^T duals)_j + 2 q_j z_j = 0
// so the dual objective term -q z^2 equals the exact QP-dual value at any
// dual-feasible point.  The resulting gap identity at a joint point is
//   omega_p - omega_d = sum_pairs x.y + sum_j q_j (v_j - z_j)^2.
std::pair<DualProgram, PairingMap> dualize(const ConicProgram& p) {
  if (!p.frozen()) throw std::logic_error("dualize: primal must be frozen");

  DualProgram d;
  PairingMap pairing;
  ConicProgram& dp = d.program;

  for (const auto& par : p.params()) dp.add_parameter(par.name, par.value);

  // Stationarity accumulator per primal variable, seeded with the cost
  // gradient's constant part.
  std::vector<AffExpr> stat(p.num_vars());
  for (const auto& t : p.objective().lin.vars()) stat[t.id].add_const(t.coeff);
  for (const auto& [pid, v, c] : p.objective().param_bilin) stat[v].add_param(pid, c);

  AffExpr obj_lin; // omega_d affine part over dual variables
  obj_lin.add_const(p.objective().lin.constant());
  for (const auto& t : p.objective().lin.params()) obj_lin.add_param(t.id, t.coeff);

  d.row_dual.resize(p.linear().size(), -1);
  for (size_t i = 0; i < p.linear().size(); ++i) {
    const auto& con = p.linear()[i];
    VarId dv;
    if (con.rel == Rel::Eq) {
      dv = dp.add_variable(fmt::format("eq[{}]", con.name));
    } else {
      dv = dp.add_variable(fmt::format("mu[{}]", con.name), 0.0, kInf);
    }
    d.row_dual[i] = dv;
    for (const auto& t : con.expr.vars()) stat[t.id].add_var(dv, t.coeff);
    obj_lin.add_var(dv, con.expr.constant());
    for (const auto& t : con.expr.params())
      d.objective_param_bilin.emplace_back(t.id, dv, t.coeff);
    if (con.rel == Rel::Le) {
      ConePair pair;
      pair.kind = ConePair::Kind::Scalar;
      pair.primal_row = static_cast<int>(i);
      pair.dual_start = dv;
      pair.dim = 1;
      AffExpr slack = con.expr; // slack = -expr >= 0
      slack.scale(-1.0);
      pair.primal_comps.push_back(std::move(slack));
      pairing.pairs.push_back(std::move(pair));
    }
  }

  d.soc_dual_start.resize(p.soc().size(), -1);
  for (size_t r = 0; r < p.soc().size(); ++r) {
    const auto& cone = p.soc()[r];
    const int dim = static_cast<int>(cone.comps.size());
    VarId start = -1;
    std::vector<AffExpr> block;
    for (int k = 0; k < dim; ++k) {
      VarId yv = dp.add_variable(fmt::format("y[{}][{}]", cone.name, k));
      if (k == 0) start = yv;
      block.push_back(AffExpr::variable(yv));
      for (const auto& t : cone.comps[k].vars()) stat[t.id].add_var(yv, -t.coeff);
      obj_lin.add_var(yv, -cone.comps[k].constant());
      for (const auto& t : cone.comps[k].params())
        d.objective_param_bilin.emplace_back(t.id, yv, -t.coeff);
    }
    d.soc_dual_start[r] = start;
    dp.add_soc(fmt::format("cone[{}]", cone.name), std::move(block));

    ConePair pair;
    pair.kind = ConePair::Kind::Soc;
    pair.primal_row = static_cast<int>(r);
    pair.dual_start = start;
    pair.dim = dim;
    pair.primal_comps = cone.comps;
    pairing.pairs.push_back(std::move(pair));
  }

  // Quadratic mirrors, then the stationarity rows.
  std::vector<double> qcoef(p.num_vars(), 0.0);
  for (const auto& [v, q] : p.objective().quad) qcoef[v] = q;

  std::vector<VarId> mirror(p.num_vars(), -1);
  for (VarId v = 0; v < static_cast<VarId>(p.num_vars()); ++v) {
    if (qcoef[v] <= 0.0) continue;
    VarId z = dp.add_variable(fmt::format("zq[{}]", p.vars()[v].name));
    mirror[v] = z;
    d.quad_primal_var.push_back(v);
    d.quad_mirror_var.push_back(z);
    d.objective_quad.emplace_back(z, qcoef[v]);
  }

  for (VarId v = 0; v < static_cast<VarId>(p.num_vars()); ++v) {
    AffExpr row = stat[v];
    if (mirror[v] >= 0) {
      row.add_var(mirror[v], 2.0 * qcoef[v]);
      d.quad_mirror_row.push_back(static_cast<int>(dp.linear().size()));
      dp.add_linear(fmt::format("statq[{}]", p.vars()[v].name), std::move(row), Rel::Eq,
                    RowTag::Stationarity);
    } else {
      d.stationarity_var.push_back(v);
      d.stationarity_row.push_back(static_cast<int>(dp.linear().size()));
      dp.add_linear(fmt::format("stat[{}]", p.vars()[v].name), std::move(row), Rel::Eq,
                    RowTag::Stationarity);
    }
  }

  d.objective_lin = obj_lin;

  // Stored program minimizes -omega_d.
  AffExpr neg = obj_lin;
  neg.scale(-1.0);
  dp.set_objective_linear(std::move(neg));
  for (const auto& [z, q] : d.objective_quad) dp.add_objective_quadratic(z, q);
  for (const auto& [pid, dv, c] : d.objective_param_bilin)
    dp.add_objective_param_bilinear(pid, dv, -c);
  dp.freeze();

  return {std::move(d), std::move(pairing)};
}

} // namespace stratbid
