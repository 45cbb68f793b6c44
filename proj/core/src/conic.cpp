#include "stratbid/conic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stratbid {

VarId ConicProgram::add_variable(const std::string& name, double lb, double ub) {
  check_mutable();
  if (var_index_.count(name)) throw std::invalid_argument("duplicate variable: " + name);
  if (lb > ub) throw std::invalid_argument("empty bound interval for " + name);
  VarId id = static_cast<VarId>(vars_.size());
  vars_.push_back(VarInfo{name, lb, ub, false});
  var_index_.emplace(name, id);
  return id;
}

VarId ConicProgram::add_binary(const std::string& name) {
  VarId id = add_variable(name, 0.0, 1.0);
  vars_[id].is_binary = true;
  return id;
}

ParamId ConicProgram::add_parameter(const std::string& name, double value) {
  check_mutable();
  if (param_index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  ParamId id = static_cast<ParamId>(params_.size());
  params_.push_back(ParamInfo{name, value});
  param_index_.emplace(name, id);
  return id;
}

void ConicProgram::add_linear(const std::string& name, AffExpr expr, Rel rel, RowTag tag) {
  check_mutable();
  check_expr(expr);
  expr.compact();
  linear_.push_back(LinearCon{name, std::move(expr), rel, tag});
}

void ConicProgram::add_soc(const std::string& name, std::vector<AffExpr> comps, RowTag tag) {
  check_mutable();
  if (comps.size() < 2) throw std::invalid_argument("SOC row needs >= 2 components: " + name);
  for (auto& c : comps) {
    check_expr(c);
    c.compact();
  }
  soc_.push_back(SocCon{name, std::move(comps), tag});
}

void ConicProgram::set_objective_linear(AffExpr lin) {
  check_mutable();
  check_expr(lin);
  objective_.lin = std::move(lin);
}

void ConicProgram::add_objective_quadratic(VarId v, double coeff) {
  check_mutable();
  if (v < 0 || v >= static_cast<VarId>(vars_.size()))
    throw std::invalid_argument("objective quadratic on undeclared variable");
  if (coeff < 0.0) throw std::invalid_argument("negative quadratic objective coefficient (nonconvex)");
  if (coeff == 0.0) return;
  auto it = std::lower_bound(objective_.quad.begin(), objective_.quad.end(), v,
                             [](const auto& a, VarId b) { return a.first < b; });
  if (it != objective_.quad.end() && it->first == v) {
    it->second += coeff;
  } else {
    objective_.quad.insert(it, {v, coeff});
  }
}

void ConicProgram::add_objective_param_bilinear(ParamId p, VarId v, double coeff) {
  check_mutable();
  objective_.param_bilin.emplace_back(p, v, coeff);
}

void ConicProgram::add_objective_constant(double c) {
  check_mutable();
  objective_.lin.add_const(c);
}

void ConicProgram::freeze() {
  if (frozen_) return;
  for (VarId v = 0; v < static_cast<VarId>(vars_.size()); ++v) {
    const auto& info = vars_[v];
    if (info.lb == info.ub) {
      AffExpr e = AffExpr::variable(v);
      e.add_const(-info.lb);
      linear_.push_back(LinearCon{"fix[" + info.name + "]", std::move(e), Rel::Eq, RowTag::Bound});
      continue;
    }
    if (info.lb > -kInf) {
      AffExpr e = AffExpr::variable(v, -1.0);
      e.add_const(info.lb);
      linear_.push_back(LinearCon{"lb[" + info.name + "]", std::move(e), Rel::Le, RowTag::Bound});
    }
    if (info.ub < kInf) {
      AffExpr e = AffExpr::variable(v);
      e.add_const(-info.ub);
      linear_.push_back(LinearCon{"ub[" + info.name + "]", std::move(e), Rel::Le, RowTag::Bound});
    }
  }
  frozen_ = true;
}

VarId ConicProgram::var(const std::string& name) const {
  auto it = var_index_.find(name);
  if (it == var_index_.end()) throw std::invalid_argument("unknown variable: " + name);
  return it->second;
}

ParamId ConicProgram::param(const std::string& name) const {
  auto it = param_index_.find(name);
  if (it == param_index_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

std::optional<VarId> ConicProgram::try_var(const std::string& name) const {
  auto it = var_index_.find(name);
  if (it == var_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> ConicProgram::param_values() const {
  std::vector<double> v(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) v[i] = params_[i].value;
  return v;
}

void ConicProgram::set_param_value(ParamId p, double value) {
  params_.at(p).value = value;
}

EvalResult ConicProgram::evaluate(std::span<const double> point) const {
  auto pv = param_values();
  return evaluate(point, pv);
}

EvalResult ConicProgram::evaluate(std::span<const double> point,
                                  std::span<const double> param_values) const {
  if (point.size() != vars_.size())
    throw std::invalid_argument("evaluate: point size mismatch");
  EvalResult r;
  r.objective = objective_.lin.eval(point, param_values);
  for (const auto& [v, q] : objective_.quad) r.objective += q * point[v] * point[v];
  for (const auto& [p, v, c] : objective_.param_bilin) r.objective += c * param_values[p] * point[v];

  double worst = -kInf;
  for (const auto& con : linear_) {
    double val = con.expr.eval(point, param_values);
    worst = std::max(worst, con.rel == Rel::Eq ? std::abs(val) : val);
  }
  for (const auto& con : soc_) {
    double head = con.comps[0].eval(point, param_values);
    double tail2 = 0.0;
    for (size_t k = 1; k < con.comps.size(); ++k) {
      double c = con.comps[k].eval(point, param_values);
      tail2 += c * c;
    }
    worst = std::max(worst, std::sqrt(tail2) - head);
  }
  // Bounds are materialized at freeze; before freeze check them directly.
  if (!frozen_) {
    for (VarId v = 0; v < static_cast<VarId>(vars_.size()); ++v) {
      if (vars_[v].lb > -kInf) worst = std::max(worst, vars_[v].lb - point[v]);
      if (vars_[v].ub < kInf) worst = std::max(worst, point[v] - vars_[v].ub);
    }
  }
  r.max_infeasibility = (worst == -kInf) ? 0.0 : worst;
  return r;
}

namespace {

void format_aff(std::string& out, const AffExpr& e, const std::vector<VarInfo>& vars,
                const std::vector<ParamInfo>& params) {
  bool first = true;
  auto put = [&](double c, const std::string& sym) {
    if (c == 0.0) return;
    if (first) {
      out += fmt::format("{:g} {}", c, sym);
      first = false;
    } else {
      out += fmt::format(" {} {:g} {}", c < 0 ? '-' : '+', std::abs(c), sym);
    }
  };
  for (const auto& t : e.vars()) put(t.coeff, vars[t.id].name);
  for (const auto& t : e.params()) put(t.coeff, "$" + params[t.id].name);
  if (e.constant() != 0.0 || first) {
    if (first) {
      out += fmt::format("{:g}", e.constant());
    } else {
      out += fmt::format(" {} {:g}", e.constant() < 0 ? '-' : '+', std::abs(e.constant()));
    }
  }
}

} // namespace

std::string ConicProgram::dump() const {
  std::string out;
  out += fmt::format("vars {}\n", vars_.size());
  for (const auto& v : vars_) {
    out += fmt::format("  {} in [{:g}, {:g}]{}\n", v.name, v.lb, v.ub,
                       v.is_binary ? " binary" : "");
  }
  if (!params_.empty()) {
    out += fmt::format("params {}\n", params_.size());
    for (const auto& p : params_) out += fmt::format("  {} = {:g}\n", p.name, p.value);
  }
  out += "minimize\n  ";
  format_aff(out, objective_.lin, vars_, params_);
  for (const auto& [v, q] : objective_.quad)
    out += fmt::format(" + {:g} {}^2", q, vars_[v].name);
  for (const auto& [p, v, c] : objective_.param_bilin)
    out += fmt::format(" {} {:g} ${} {}", c < 0 ? '-' : '+', std::abs(c), params_[p].name,
                       vars_[v].name);
  out += "\nsubject to\n";
  for (const auto& con : linear_) {
    out += fmt::format("  {}: ", con.name);
    format_aff(out, con.expr, vars_, params_);
    out += con.rel == Rel::Eq ? " == 0\n" : " <= 0\n";
  }
  for (const auto& con : soc_) {
    out += fmt::format("  {}: soc(", con.name);
    for (size_t k = 0; k < con.comps.size(); ++k) {
      if (k) out += "; ";
      format_aff(out, con.comps[k], vars_, params_);
    }
    out += ")\n";
  }
  return out;
}

void ConicProgram::check_mutable() const {
  if (frozen_) throw std::logic_error("program is frozen");
}

void ConicProgram::check_expr(const AffExpr& e) const {
  if (e.max_var() >= static_cast<VarId>(vars_.size()))
    throw std::invalid_argument("expression references undeclared variable");
  for (const auto& t : e.params())
    if (t.id < 0 || t.id >= static_cast<ParamId>(params_.size()))
      throw std::invalid_argument("expression references undeclared parameter");
}

std::vector<double> PairingMap::primal_value(const ConePair& p, std::span<const double> point,
                                             std::span<const double> param_values) const {
  std::vector<double> x(p.dim);
  for (int k = 0; k < p.dim; ++k) x[k] = p.primal_comps[k].eval(point, param_values);
  return x;
}

std::vector<double> PairingMap::dual_value(const ConePair& p,
                                           std::span<const double> dual_point) const {
  std::vector<double> y(p.dim);
  for (int k = 0; k < p.dim; ++k) y[k] = dual_point[p.dual_start + k];
  return y;
}

double DualProgram::dual_objective(std::span<const double> dual_point,
                                   std::span<const double> param_values) const {
  double v = objective_lin.eval(dual_point, param_values);
  for (const auto& [p, var, c] : objective_param_bilin) v += c * param_values[p] * dual_point[var];
  for (const auto& [z, q] : objective_quad) v -= q * dual_point[z] * dual_point[z];
  return v;
}

GapResult duality_gap(const ConicProgram& primal, std::span<const double> primal_point,
                      const DualProgram& dual, std::span<const double> dual_point,
                      std::span<const double> param_values, double feas_tol) {
  EvalResult pe = primal.evaluate(primal_point, param_values);
  if (pe.max_infeasibility > feas_tol)
    throw std::invalid_argument(
        fmt::format("duality_gap: primal point infeasible ({:g})", pe.max_infeasibility));
  EvalResult de = dual.program.evaluate(dual_point, param_values);
  if (de.max_infeasibility > feas_tol)
    throw std::invalid_argument(
        fmt::format("duality_gap: dual point infeasible ({:g})", de.max_infeasibility));
  double od = dual.dual_objective(dual_point, param_values);
  GapResult g;
  g.absolute = pe.objective - od;
  g.relative_pct = g.absolute / std::max(1.0, std::abs(pe.objective)) * 100.0;
  return g;
}

} // namespace stratbid
