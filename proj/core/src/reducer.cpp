#include "stratbid/reducer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "stratbid/upper.hpp"

namespace stratbid {

namespace {

const std::map<std::string, Technique>& technique_table() {
  static const std::map<std::string, Technique> table = {
      {"PD", Technique::PD},       {"PD-S", Technique::PDS},   {"SD", Technique::SD},
      {"SD-R", Technique::SDR},    {"MC", Technique::MC},      {"CS", Technique::CS},
      {"CS-R", Technique::CSR},    {"CS-A", Technique::CSA},   {"CS-AR", Technique::CSAR},
      {"PF-SD", Technique::PFSD},  {"PF-CS", Technique::PFCS}, {"BE-SD", Technique::BESD},
      {"BE-PF", Technique::BEPF},  {"UE-SD", Technique::UESD}, {"UE-PF", Technique::UEPF},
      {"SM1", Technique::SM1},     {"SM2", Technique::SM2},
  };
  return table;
}

void apply_defaults(TechniqueSpec& s) {
  switch (s.kind) {
    case Technique::SDR: s.eps = 1.0; break;
    case Technique::CSR: s.eps = 0.01; break;
    case Technique::CSAR: s.eps = 1e-3; break;
    case Technique::SM1:
    case Technique::SM2: s.eps = 1e-4; break;
    case Technique::PFSD: s.pi = 100.0; break;
    case Technique::PFCS: s.pi = 10.0; break;
    case Technique::BEPF:
    case Technique::UEPF: s.pi = 100.0; break;
    default: break;
  }
}

} // namespace

TechniqueSpec TechniqueSpec::parse(const std::string& text) {
  std::vector<std::string> tokens;
  std::string tok;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!tok.empty()) tokens.push_back(std::exchange(tok, {}));
    } else {
      tok.push_back(c);
    }
  }
  if (!tok.empty()) tokens.push_back(tok);
  if (tokens.empty()) throw std::invalid_argument("empty technique string");

  auto it = technique_table().find(tokens[0]);
  if (it == technique_table().end()) {
    std::string valid;
    for (const auto& n : names()) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument(
        fmt::format("unknown technique '{}' (valid: {})", tokens[0], valid));
  }
  TechniqueSpec s;
  s.kind = it->second;
  apply_defaults(s);
  for (size_t i = 1; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bad technique parameter: " + tokens[i]);
    std::string key = tokens[i].substr(0, eq);
    double val = std::stod(tokens[i].substr(eq + 1));
    if (key == "eps") {
      s.eps = val;
    } else if (key == "pi") {
      s.pi = val;
    } else if (key == "D") {
      s.discretization = static_cast<int>(val);
    } else if (key == "binaries") {
      s.binaries = val != 0.0;
    } else {
      throw std::invalid_argument("unknown technique parameter: " + key);
    }
  }
  if (s.uses_eps() && s.eps <= 0) throw std::invalid_argument("eps must be positive");
  if (s.uses_pi() && s.pi <= 0) throw std::invalid_argument("pi must be positive");
  if (s.is_discretized() && s.discretization < 2)
    throw std::invalid_argument("D must be at least 2");
  return s;
}

const std::vector<std::string>& TechniqueSpec::names() {
  static const std::vector<std::string> n = [] {
    std::vector<std::string> v;
    for (const auto& [name, _] : technique_table()) v.push_back(name);
    return v;
  }();
  return n;
}

std::string TechniqueSpec::name() const {
  for (const auto& [name, kind] : technique_table())
    if (kind == this->kind) return name;
  return "?";
}

std::string TechniqueSpec::params_string() const {
  std::string out;
  if (uses_eps()) out += fmt::format("eps={:g}", eps);
  if (uses_pi()) out += fmt::format("{}pi={:g}", out.empty() ? "" : " ", pi);
  if (is_discretized()) out += fmt::format("{}D={}", out.empty() ? "" : " ", discretization);
  if (binaries) out += fmt::format("{}binaries=1", out.empty() ? "" : " ");
  return out;
}

bool TechniqueSpec::uses_eps() const {
  switch (kind) {
    case Technique::SDR:
    case Technique::CSR:
    case Technique::CSAR:
    case Technique::SM1:
    case Technique::SM2: return true;
    default: return false;
  }
}

bool TechniqueSpec::uses_pi() const {
  switch (kind) {
    case Technique::PFSD:
    case Technique::PFCS:
    case Technique::BEPF:
    case Technique::UEPF: return true;
    default: return false;
  }
}

bool TechniqueSpec::is_discretized() const {
  switch (kind) {
    case Technique::BESD:
    case Technique::BEPF:
    case Technique::UESD:
    case Technique::UEPF: return true;
    default: return false;
  }
}

bool TechniqueSpec::is_convex() const {
  switch (kind) {
    case Technique::PD:
    case Technique::PDS:
    case Technique::MC: return true;
    // BE/UE have convex continuous relaxations; the integrality marks make
    // the full problem MISOCP, handled by branch and bound.
    case Technique::BESD:
    case Technique::BEPF:
    case Technique::UESD:
    case Technique::UEPF: return true;
    default: return false;
  }
}

bool TechniqueSpec::needs_stationarity_rows() const {
  switch (kind) {
    case Technique::PDS:
    case Technique::CS:
    case Technique::CSR:
    case Technique::CSA:
    case Technique::CSAR:
    case Technique::SM1:
    case Technique::SM2: return true;
    default: return false;
  }
}

namespace {

// Remaps a lower-level expression into the joint registry: variable ids
// shift by `offset`, parameter references become promoted upper variables.
AffExpr remap(const AffExpr& e, VarId offset, const std::vector<VarId>& param_to_var) {
  AffExpr out;
  out.add_const(e.constant());
  for (const auto& t : e.vars()) out.add_var(t.id + offset, t.coeff);
  for (const auto& t : e.params()) out.add_var(param_to_var.at(t.id), t.coeff);
  return out;
}

struct Builder {
  const BilevelInstance& inst;
  const LowerLevelBundle& bundle;
  const DualProgram& dual;
  const PairingMap& pairing;
  const PriceSurface& surface;
  ReducedProblem r;
  std::vector<VarId> param_to_var; // primal ParamId -> registry var

  VarId add_var(const std::string& name, double lb = -kInf, double ub = kInf) {
    r.vars.push_back(VarInfo{name, lb, ub, false});
    return static_cast<VarId>(r.vars.size() - 1);
  }
  VarId add_bin(const std::string& name) {
    r.vars.push_back(VarInfo{name, 0.0, 1.0, true});
    VarId id = static_cast<VarId>(r.vars.size() - 1);
    r.integer_vars.push_back(id);
    return id;
  }
  void add_lin(std::string name, AffExpr e, Rel rel, BlockTag tag) {
    e.compact();
    r.linear.push_back(ReducedLinear{std::move(name), std::move(e), rel, tag});
  }
  void add_quad(std::string name, QuadExpr e, Rel rel, BlockTag tag) {
    e.compact();
    r.quad.push_back(ReducedQuad{std::move(name), std::move(e), rel, tag});
  }

  AffExpr lambda1(int t) const {
    int row = bundle.active_balance_row.at({t, bundle.storage_bus});
    return AffExpr::variable(r.reg_dual(dual.row_dual[row]), -1.0);
  }
  AffExpr lambda2(int t) const {
    int row = bundle.reactive_balance_row.at({t, bundle.storage_bus});
    return AffExpr::variable(r.reg_dual(dual.row_dual[row]), -1.0);
  }
  double l1_lo(int t) const { return surface.lambda1_lo[t * surface.num_buses + bundle.storage_bus]; }
  double l1_hi(int t) const { return surface.lambda1_hi[t * surface.num_buses + bundle.storage_bus]; }
  double l2_lo(int t) const { return surface.lambda2_lo[t * surface.num_buses + bundle.storage_bus]; }
  double l2_hi(int t) const { return surface.lambda2_hi[t * surface.num_buses + bundle.storage_bus]; }
};

// McCormick planes for w ~ p * lambda over p in [-sbar, sbar],
// lambda in [lo, hi]; lambda enters as an affine expression.
void add_envelopes(Builder& B, const std::string& prefix, VarId w, VarId p,
                   const AffExpr& lam, double sbar, double lo, double hi) {
  auto& add = B;
  {
    AffExpr e = AffExpr::variable(w, -1.0);
    e.add(lam, -sbar);
    e.add_var(p, lo);
    e.add_const(sbar * lo);
    add.add_lin(prefix + ".under1", std::move(e), Rel::Le, BlockTag::Technique);
  }
  {
    AffExpr e = AffExpr::variable(w, -1.0);
    e.add(lam, sbar);
    e.add_var(p, hi);
    e.add_const(-sbar * hi);
    add.add_lin(prefix + ".under2", std::move(e), Rel::Le, BlockTag::Technique);
  }
  {
    AffExpr e = AffExpr::variable(w);
    e.add(lam, -sbar);
    e.add_var(p, -lo);
    e.add_const(sbar * lo);
    add.add_lin(prefix + ".over1", std::move(e), Rel::Le, BlockTag::Technique);
  }
  {
    AffExpr e = AffExpr::variable(w);
    e.add(lam, sbar);
    e.add_var(p, -hi);
    e.add_const(-sbar * hi);
    add.add_lin(prefix + ".over2", std::move(e), Rel::Le, BlockTag::Technique);
  }
}

// Big-M box w in [lo * x, hi * x] (binary off switch).
void add_switch_box(Builder& B, const std::string& prefix, VarId w, const AffExpr& x_on,
                    double lo, double hi, double scale = 1.0) {
  {
    AffExpr e = x_on;
    e.scale(lo * scale);
    e.add_var(w, -1.0);
    B.add_lin(prefix + ".lo", std::move(e), Rel::Le, BlockTag::Technique);
  }
  {
    AffExpr e = x_on;
    e.scale(-hi * scale);
    e.add_var(w, 1.0);
    B.add_lin(prefix + ".hi", std::move(e), Rel::Le, BlockTag::Technique);
  }
}

// Window w in [lam - (1-x) hi, lam - (1-x) lo]: exact when x = 1.
void add_switch_window(Builder& B, const std::string& prefix, VarId w, VarId x,
                       const AffExpr& lam, double lo, double hi) {
  {
    AffExpr e = lam;
    e.add_var(x, hi);
    e.add_const(-hi);
    e.add_var(w, -1.0);
    B.add_lin(prefix + ".wlo", std::move(e), Rel::Le, BlockTag::Technique);
  }
  {
    AffExpr e = lam;
    e.scale(-1.0);
    e.add_var(x, -lo);
    e.add_const(lo);
    e.add_var(w, 1.0);
    B.add_lin(prefix + ".whi", std::move(e), Rel::Le, BlockTag::Technique);
  }
}

} // namespace

ReducedProblem reduce(const BilevelInstance& inst, const LowerLevelBundle& bundle,
                      const DualProgram& dual, const PairingMap& pairing,
                      const PriceSurface& surface, const TechniqueSpec& spec,
                      bool reactive_bids) {
  const bool has_reactive = !bundle.q_injection.empty();
  reactive_bids = reactive_bids && has_reactive;
  const bool discretized = spec.is_discretized();
  const bool want_binaries = spec.binaries || discretized;
  const bool smoothing_kind = spec.kind == Technique::SM1 || spec.kind == Technique::SM2;

  if (spec.needs_stationarity_rows() && dual.quad_primal_var.empty())
    throw std::invalid_argument("stationarity strengthening inapplicable: no generator has a quadratic cost bid");
  const bool need_bounds = spec.kind == Technique::MC || discretized;
  if (need_bounds && !surface.has_bounds())
    throw std::invalid_argument("technique requires estimated price bounds");

  Builder B{inst, bundle, dual, pairing, surface, {}, {}};
  ReducedProblem& r = B.r;
  r.spec = spec;
  r.horizon = inst.horizon;

  // --- upper level ---
  UpperLevelModel upper = build_upper_level(inst, reactive_bids, has_reactive, want_binaries);
  r.vars = upper.vars;
  r.num_upper = static_cast<int>(upper.vars.size());
  for (auto& row : upper.rows) B.add_lin(row.name, row.expr, row.rel, BlockTag::Upper);
  for (VarId b : upper.binary_vars) r.integer_vars.push_back(b);
  r.pes_vars = upper.p_es;
  r.qes_vars = upper.q_es;

  // --- promote the bid parameters ---
  B.param_to_var.assign(bundle.program.num_params(), -1);
  for (int t = 0; t < inst.horizon; ++t) {
    B.param_to_var[bundle.p_injection[t]] = upper.p_es[t];
    if (has_reactive) B.param_to_var[bundle.q_injection[t]] = upper.q_es[t];
  }

  // --- import the lower-level primal ---
  const ConicProgram& P = bundle.program;
  r.primal_offset = static_cast<VarId>(r.vars.size());
  for (const auto& v : P.vars()) r.vars.push_back(VarInfo{"ll." + v.name, -kInf, kInf, false});
  for (const auto& con : P.linear()) {
    if (smoothing_kind && con.rel == Rel::Le) continue; // absorbed by the pair rows
    B.add_lin("ll." + con.name, remap(con.expr, r.primal_offset, B.param_to_var), con.rel,
              BlockTag::Primal);
  }
  if (!smoothing_kind) {
    for (const auto& con : P.soc()) {
      std::vector<AffExpr> comps;
      for (const auto& c : con.comps) comps.push_back(remap(c, r.primal_offset, B.param_to_var));
      r.soc.push_back(ReducedSoc{"ll." + con.name, std::move(comps), BlockTag::Primal});
    }
  }

  // --- import the dual ---
  const ConicProgram& D = dual.program;
  r.dual_offset = static_cast<VarId>(r.vars.size());
  for (const auto& v : D.vars()) r.vars.push_back(VarInfo{"du." + v.name, -kInf, kInf, false});
  for (const auto& con : D.linear()) {
    if (con.rel == Rel::Le) {
      if (smoothing_kind) continue; // multiplier sign handled by the pair rows
      B.add_lin("du." + con.name, remap(con.expr, r.dual_offset, B.param_to_var), Rel::Le,
                BlockTag::Dual);
    } else {
      BlockTag tag = con.tag == RowTag::Stationarity ? BlockTag::Stationarity : BlockTag::Dual;
      B.add_lin("du." + con.name, remap(con.expr, r.dual_offset, B.param_to_var), Rel::Eq, tag);
    }
  }
  if (!smoothing_kind) {
    for (const auto& con : D.soc()) {
      std::vector<AffExpr> comps;
      for (const auto& c : con.comps) comps.push_back(remap(c, r.dual_offset, B.param_to_var));
      r.soc.push_back(ReducedSoc{"du." + con.name, std::move(comps), BlockTag::Dual});
    }
  }

  // --- registry pairs ---
  for (const auto& pair : pairing.pairs) {
    RegistryPair rp;
    rp.dim = pair.dim;
    rp.y_start = r.reg_dual(pair.dual_start);
    for (const auto& c : pair.primal_comps)
      rp.x.push_back(remap(c, r.primal_offset, B.param_to_var));
    r.pairs.push_back(std::move(rp));
  }

  // --- objective pieces over the registry ---
  r.omega_p = QuadExpr{};
  r.omega_p.add(remap(P.objective().lin, r.primal_offset, B.param_to_var));
  for (const auto& [v, q] : P.objective().quad)
    r.omega_p.add_product(r.reg_primal(v), r.reg_primal(v), q);
  for (const auto& [pid, v, c] : P.objective().param_bilin)
    r.omega_p.add_bilinear(AffExpr::variable(B.param_to_var[pid]),
                           AffExpr::variable(r.reg_primal(v)), c);

  r.omega_d = QuadExpr{};
  r.omega_d.add(remap(dual.objective_lin, r.dual_offset, B.param_to_var));
  for (const auto& [pid, dv, c] : dual.objective_param_bilin)
    r.omega_d.add_product(B.param_to_var[pid], r.reg_dual(dv), c);
  for (const auto& [z, q] : dual.objective_quad)
    r.omega_d.add_product(r.reg_dual(z), r.reg_dual(z), -q);

  r.profit = QuadExpr{};
  for (int t = 0; t < inst.horizon; ++t) {
    r.profit.add_bilinear(AffExpr::variable(upper.p_es[t]), B.lambda1(t));
    if (has_reactive)
      r.profit.add_bilinear(AffExpr::variable(upper.q_es[t]), B.lambda2(t));
  }

  // --- quadratic-cost stationarity rows with the primal variable ---
  auto add_stationarity_rows = [&] {
    std::vector<double> qcoef(P.num_vars(), 0.0);
    for (const auto& [v, q] : P.objective().quad) qcoef[v] = q;
    for (size_t k = 0; k < dual.quad_primal_var.size(); ++k) {
      const VarId pv = dual.quad_primal_var[k];
      const VarId z = dual.quad_mirror_var[k];
      AffExpr row = remap(D.linear()[dual.quad_mirror_row[k]].expr, r.dual_offset, B.param_to_var);
      row.add_var(r.reg_dual(z), -2.0 * qcoef[pv]);
      row.add_var(r.reg_primal(pv), 2.0 * qcoef[pv]);
      B.add_lin(fmt::format("statp[{}]", P.vars()[pv].name), std::move(row), Rel::Eq,
                BlockTag::Stationarity);
    }
  };

  // --- convexified objective (profit + omega_d - omega_p); the bid-price
  // bilinears cancel symbolically against the dual objective ---
  QuadExpr convexified = r.profit;
  convexified.add(r.omega_d, 1.0);
  convexified.add(r.omega_p, -1.0);
  convexified.compact(1e-30);

  auto pair_products_sum = [&]() {
    QuadExpr sum;
    for (const auto& pr : r.pairs)
      for (int k = 0; k < pr.dim; ++k)
        sum.add_bilinear(pr.x[k], AffExpr::variable(pr.y_start + k));
    return sum;
  };

  switch (spec.kind) {
    case Technique::PD:
      r.objective = convexified;
      break;
    case Technique::PDS:
      r.objective = convexified;
      add_stationarity_rows();
      break;
    case Technique::SD:
    case Technique::SDR: {
      r.objective = convexified;
      QuadExpr row = r.omega_p;
      row.add(r.omega_d, -1.0);
      if (spec.kind == Technique::SD) {
        B.add_quad("strong_duality", std::move(row), Rel::Eq, BlockTag::Technique);
      } else {
        row.add(AffExpr(-spec.eps));
        B.add_quad("strong_duality_relaxed", std::move(row), Rel::Le, BlockTag::Technique);
      }
      break;
    }
    case Technique::MC: {
      r.objective = convexified;
      QuadExpr row = r.omega_p;
      row.add(r.omega_d, -1.0);
      row.add(r.profit, -1.0); // cancels the bilinears; convex remainder
      const double sbar = inst.storage.power_rating;
      for (int t = 0; t < inst.horizon; ++t) {
        VarId wp = B.add_var(fmt::format("wp_{}", t));
        row.add(AffExpr::variable(wp));
        add_envelopes(B, fmt::format("mc_p_{}", t), wp, upper.p_es[t], B.lambda1(t), sbar,
                      B.l1_lo(t), B.l1_hi(t));
        if (reactive_bids && has_reactive) {
          VarId wq = B.add_var(fmt::format("wq_{}", t));
          row.add(AffExpr::variable(wq));
          add_envelopes(B, fmt::format("mc_q_{}", t), wq, upper.q_es[t], B.lambda2(t), sbar,
                        B.l2_lo(t), B.l2_hi(t));
        }
      }
      B.add_quad("sd_inequality", std::move(row), Rel::Le, BlockTag::Technique);
      break;
    }
    case Technique::CS:
    case Technique::CSR: {
      r.objective = convexified;
      add_stationarity_rows();
      for (size_t i = 0; i < r.pairs.size(); ++i) {
        QuadExpr row;
        for (int k = 0; k < r.pairs[i].dim; ++k)
          row.add_bilinear(r.pairs[i].x[k], AffExpr::variable(r.pairs[i].y_start + k));
        if (spec.kind == Technique::CS) {
          B.add_quad(fmt::format("cs[{}]", i), std::move(row), Rel::Eq, BlockTag::Technique);
        } else {
          row.add(AffExpr(-spec.eps));
          B.add_quad(fmt::format("cs[{}]", i), std::move(row), Rel::Le, BlockTag::Technique);
        }
      }
      break;
    }
    case Technique::CSA:
    case Technique::CSAR: {
      r.objective = convexified;
      add_stationarity_rows();
      QuadExpr sum = pair_products_sum();
      if (spec.kind == Technique::CSA) {
        B.add_quad("cs_aggregate", std::move(sum), Rel::Eq, BlockTag::Technique);
      } else {
        sum.add(AffExpr(-spec.eps * static_cast<double>(r.pairs.size())));
        B.add_quad("cs_aggregate", std::move(sum), Rel::Le, BlockTag::Technique);
      }
      break;
    }
    case Technique::PFSD: {
      r.objective = r.profit;
      r.objective.add(r.omega_d, 1.0 + spec.pi);
      r.objective.add(r.omega_p, -(1.0 + spec.pi));
      r.objective.compact(1e-30);
      break;
    }
    case Technique::PFCS: {
      r.objective = convexified;
      r.objective.add(pair_products_sum(), -spec.pi);
      if (!dual.quad_primal_var.empty()) add_stationarity_rows();
      break;
    }
    case Technique::BESD:
    case Technique::BEPF:
    case Technique::UESD:
    case Technique::UEPF: {
      const bool unary = spec.kind == Technique::UESD || spec.kind == Technique::UEPF;
      const double sbar = inst.storage.power_rating;
      const int D_steps = spec.discretization;
      const int nbits = unary ? D_steps : static_cast<int>(std::ceil(std::log2(D_steps)));
      const double denom = unary ? D_steps : (std::pow(2.0, nbits) - 1.0);

      QuadExpr wsum; // sum_t (wpch - wpdis + wqch - wqdis)
      for (int t = 0; t < inst.horizon; ++t) {
        struct Side {
          VarId ch, dis, es_ch, es_dis, x_dir;
          AffExpr lam;
          double lo, hi;
          std::string tag;
        };
        std::vector<Side> sides;
        sides.push_back({B.add_var(fmt::format("wpch_{}", t)),
                         B.add_var(fmt::format("wpdis_{}", t)), upper.p_ch[t], upper.p_dis[t],
                         upper.x_p[t], B.lambda1(t), B.l1_lo(t), B.l1_hi(t), "p"});
        if (reactive_bids && has_reactive)
          sides.push_back({B.add_var(fmt::format("wqch_{}", t)),
                           B.add_var(fmt::format("wqdis_{}", t)), upper.q_ch[t], upper.q_dis[t],
                           upper.x_q[t], B.lambda2(t), B.l2_lo(t), B.l2_hi(t), "q"});

        for (auto& side : sides) {
          wsum.add(AffExpr::variable(side.ch));
          wsum.add(AffExpr::variable(side.dis), -1.0);

          VarId y = B.add_var(fmt::format("y{}_{}", side.tag, t), 0.0, denom);
          AffExpr ydef = AffExpr::variable(y);
          AffExpr wmap; // (wch + wdis)/sbar - sum(weight * wbit)/denom
          wmap.add_var(side.ch, 1.0 / sbar);
          wmap.add_var(side.dis, 1.0 / sbar);
          AffExpr at_most_one;
          for (int bit = 0; bit < nbits; ++bit) {
            const double weight = unary ? (bit + 1.0) : std::pow(2.0, bit);
            VarId xb = B.add_bin(fmt::format("x{}e_{}_{}", side.tag, t, bit));
            VarId wb = B.add_var(fmt::format("w{}e_{}_{}", side.tag, t, bit));
            ydef.add_var(xb, -weight);
            wmap.add_var(wb, -weight / denom);
            if (unary) at_most_one.add_var(xb, 1.0);
            add_switch_box(B, fmt::format("env{}_{}_{}", side.tag, t, bit), wb,
                           AffExpr::variable(xb), side.lo, side.hi);
            add_switch_window(B, fmt::format("env{}_{}_{}", side.tag, t, bit), wb, xb, side.lam,
                              side.lo, side.hi);
          }
          B.add_lin(fmt::format("ydef{}_{}", side.tag, t), std::move(ydef), Rel::Eq,
                    BlockTag::Technique);
          if (unary) {
            at_most_one.add_const(-1.0);
            B.add_lin(fmt::format("one{}_{}", side.tag, t), std::move(at_most_one), Rel::Le,
                      BlockTag::Technique);
          }
          AffExpr grid; // (pch + pdis)/sbar = y/denom
          grid.add_var(side.es_ch, 1.0 / sbar);
          grid.add_var(side.es_dis, 1.0 / sbar);
          grid.add_var(y, -1.0 / denom);
          B.add_lin(fmt::format("grid{}_{}", side.tag, t), std::move(grid), Rel::Eq,
                    BlockTag::Technique);
          B.add_lin(fmt::format("wagg{}_{}", side.tag, t), std::move(wmap), Rel::Eq,
                    BlockTag::Technique);
          // Direction gates on the charge/discharge w parts.
          add_switch_box(B, fmt::format("wch{}_{}", side.tag, t), side.ch,
                         AffExpr::variable(side.x_dir), side.lo, side.hi, sbar);
          AffExpr x_off(1.0);
          x_off.add_var(side.x_dir, -1.0);
          add_switch_box(B, fmt::format("wdis{}_{}", side.tag, t), side.dis, x_off, side.lo,
                         side.hi, sbar);
        }
      }

      if (spec.kind == Technique::BESD || spec.kind == Technique::UESD) {
        r.objective = convexified;
        QuadExpr row = r.omega_p;
        row.add(r.omega_d, -1.0);
        row.add(r.profit, -1.0);
        row.add(wsum, 1.0);
        row.compact(1e-30);
        B.add_quad("sd_inequality", std::move(row), Rel::Le, BlockTag::Technique);
      } else {
        r.objective = r.profit;
        r.objective.add(r.omega_d, 1.0 + spec.pi);
        r.objective.add(r.omega_p, -(1.0 + spec.pi));
        r.objective.add(r.profit, spec.pi); // cancels pi * bilinears ...
        r.objective.add(wsum, -spec.pi);    // ... replaced by the linearization
        r.objective.compact(1e-30);
      }
      break;
    }
    case Technique::SM1:
    case Technique::SM2: {
      r.objective = convexified;
      add_stationarity_rows();
      const auto kind = spec.kind == Technique::SM1 ? smoothing::Kind::CHKS
                                                    : smoothing::Kind::Kanzow;
      for (size_t i = 0; i < r.pairs.size(); ++i) {
        SmoothedPairRow row;
        row.name = fmt::format("sm[{}]", i);
        row.kind = kind;
        row.eps = spec.eps;
        row.x = r.pairs[i].x;
        row.y_start = r.pairs[i].y_start;
        row.dim = r.pairs[i].dim;
        r.smooth.push_back(std::move(row));
      }
      break;
    }
  }

  r.objective.compact(1e-30);
  return r;
}

void ReducedProblem::validate() const {
  const size_t n = vars.size();
  std::vector<int> refs(n, 0);
  auto touch_aff = [&](const AffExpr& e) {
    for (const auto& t : e.vars()) {
      if (t.id < 0 || static_cast<size_t>(t.id) >= n)
        throw std::logic_error("registry reference out of range");
      ++refs[t.id];
    }
    if (e.has_params()) throw std::logic_error("unresolved parameter in reduced problem");
  };
  auto touch_quad = [&](const QuadExpr& e) {
    touch_aff(e.lin());
    for (const auto& t : e.quad()) {
      if (t.i < 0 || t.j < 0 || static_cast<size_t>(t.j) >= n)
        throw std::logic_error("registry reference out of range");
      ++refs[t.i];
      ++refs[t.j];
    }
  };
  for (const auto& c : linear) touch_aff(c.expr);
  for (const auto& c : soc)
    for (const auto& comp : c.comps) touch_aff(comp);
  for (const auto& c : quad) touch_quad(c.expr);
  for (const auto& c : smooth) {
    for (const auto& comp : c.x) touch_aff(comp);
    for (int k = 0; k < c.dim; ++k) {
      if (c.y_start + k < 0 || static_cast<size_t>(c.y_start + k) >= n)
        throw std::logic_error("smooth row dual block out of range");
      ++refs[c.y_start + k];
    }
  }
  touch_quad(objective);
  for (size_t i = 0; i < n; ++i) {
    if (refs[i] == 0)
      throw std::logic_error("registry symbol never referenced: " + vars[i].name);
  }
}

double profit_of(const ReducedProblem& r, std::span<const double> point) {
  return r.profit.eval(point);
}

double profit_of(std::span<const double> p_es, std::span<const double> q_es,
                 const PriceSurface& surface, int storage_bus) {
  double total = 0.0;
  for (int t = 0; t < surface.horizon; ++t) {
    if (t < static_cast<int>(p_es.size())) total += p_es[t] * surface.l1(t, storage_bus);
    if (surface.has_reactive && t < static_cast<int>(q_es.size()))
      total += q_es[t] * surface.l2(t, storage_bus);
  }
  return total;
}

} // namespace stratbid
