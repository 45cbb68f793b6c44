#include "stratbid/expr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stratbid {

namespace {

void insert_term(std::vector<LinTerm>& terms, int32_t id, double coeff) {
  auto it = std::lower_bound(terms.begin(), terms.end(), id,
                             [](const LinTerm& t, int32_t v) { return t.id < v; });
  if (it != terms.end() && it->id == id) {
    it->coeff += coeff;
  } else {
    terms.insert(it, LinTerm{id, coeff});
  }
}

void merge_scaled(std::vector<LinTerm>& dst, std::span<const LinTerm> src, double scale) {
  for (const auto& t : src) insert_term(dst, t.id, scale * t.coeff);
}

void drop_zeros(std::vector<LinTerm>& terms, double tol) {
  std::erase_if(terms, [tol](const LinTerm& t) { return std::abs(t.coeff) <= tol; });
}

} // namespace

AffExpr AffExpr::variable(VarId v, double coeff) {
  AffExpr e;
  e.add_var(v, coeff);
  return e;
}

AffExpr AffExpr::parameter(ParamId p, double coeff) {
  AffExpr e;
  e.add_param(p, coeff);
  return e;
}

AffExpr& AffExpr::add_var(VarId v, double coeff) {
  insert_term(vars_, v, coeff);
  return *this;
}

AffExpr& AffExpr::add_param(ParamId p, double coeff) {
  insert_term(params_, p, coeff);
  return *this;
}

AffExpr& AffExpr::add_const(double c) {
  constant_ += c;
  return *this;
}

AffExpr& AffExpr::add(const AffExpr& other, double scale) {
  merge_scaled(vars_, other.vars_, scale);
  merge_scaled(params_, other.params_, scale);
  constant_ += scale * other.constant_;
  return *this;
}

void AffExpr::scale(double s) {
  for (auto& t : vars_) t.coeff *= s;
  for (auto& t : params_) t.coeff *= s;
  constant_ *= s;
}

void AffExpr::compact(double drop_tol) {
  drop_zeros(vars_, drop_tol);
  drop_zeros(params_, drop_tol);
}

double AffExpr::eval(std::span<const double> point, std::span<const double> param_values) const {
  double v = constant_;
  for (const auto& t : vars_) v += t.coeff * point[t.id];
  for (const auto& t : params_) v += t.coeff * param_values[t.id];
  return v;
}

double AffExpr::eval(std::span<const double> point) const {
  if (!params_.empty()) throw std::logic_error("AffExpr::eval: unbound parameters");
  double v = constant_;
  for (const auto& t : vars_) v += t.coeff * point[t.id];
  return v;
}

VarId AffExpr::max_var() const {
  return vars_.empty() ? -1 : vars_.back().id;
}

AffExpr operator+(AffExpr a, const AffExpr& b) {
  a.add(b, 1.0);
  return a;
}

AffExpr operator-(AffExpr a, const AffExpr& b) {
  a.add(b, -1.0);
  return a;
}

AffExpr operator*(double s, AffExpr a) {
  a.scale(s);
  return a;
}

QuadExpr& QuadExpr::add_product(VarId i, VarId j, double coeff) {
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(quad_.begin(), quad_.end(), std::pair{i, j},
                             [](const QuadTerm& t, const std::pair<VarId, VarId>& p) {
                               return std::pair{t.i, t.j} < p;
                             });
  if (it != quad_.end() && it->i == i && it->j == j) {
    it->coeff += coeff;
  } else {
    quad_.insert(it, QuadTerm{i, j, coeff});
  }
  return *this;
}

QuadExpr& QuadExpr::add_bilinear(const AffExpr& a, const AffExpr& b, double coeff) {
  if (a.has_params() || b.has_params())
    throw std::logic_error("QuadExpr::add_bilinear: factors must be parameter-free");
  for (const auto& ta : a.vars())
    for (const auto& tb : b.vars())
      add_product(ta.id, tb.id, coeff * ta.coeff * tb.coeff);
  // a * b.const carries the a.const * b.const part; b's variables then get
  // scaled by a.const alone.
  if (b.constant() != 0.0) lin_.add(a, coeff * b.constant());
  if (a.constant() != 0.0) {
    AffExpr b_lin_only;
    for (const auto& tb : b.vars()) b_lin_only.add_var(tb.id, tb.coeff);
    lin_.add(b_lin_only, coeff * a.constant());
  }
  return *this;
}

QuadExpr& QuadExpr::add(const QuadExpr& other, double scale) {
  lin_.add(other.lin_, scale);
  for (const auto& t : other.quad_) add_product(t.i, t.j, scale * t.coeff);
  return *this;
}

QuadExpr& QuadExpr::add(const AffExpr& other, double scale) {
  lin_.add(other, scale);
  return *this;
}

void QuadExpr::compact(double drop_tol) {
  lin_.compact(drop_tol);
  std::erase_if(quad_, [drop_tol](const QuadTerm& t) { return std::abs(t.coeff) <= drop_tol; });
}

double QuadExpr::eval(std::span<const double> point) const {
  double v = lin_.eval(point);
  for (const auto& t : quad_) v += t.coeff * point[t.i] * point[t.j];
  return v;
}

void QuadExpr::add_gradient(std::span<const double> point, std::span<double> grad, double scale) const {
  for (const auto& t : lin_.vars()) grad[t.id] += scale * t.coeff;
  for (const auto& t : quad_) {
    if (t.i == t.j) {
      grad[t.i] += scale * 2.0 * t.coeff * point[t.i];
    } else {
      grad[t.i] += scale * t.coeff * point[t.j];
      grad[t.j] += scale * t.coeff * point[t.i];
    }
  }
}

} // namespace stratbid
