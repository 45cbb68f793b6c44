#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace stratbid {

using VarId = int32_t;
using ParamId = int32_t;

/// One `coeff * symbol` term of a sparse linear form.
struct LinTerm {
  int32_t id = -1;
  double coeff = 0.0;
};

/// Affine expression over declared variables and parameters:
///   sum(c_i * v_i) + sum(d_j * p_j) + constant.
/// Terms are kept sorted by id with duplicates merged.
class AffExpr {
public:
  AffExpr() = default;
  explicit AffExpr(double c) : constant_(c) {}

  static AffExpr variable(VarId v, double coeff = 1.0);
  static AffExpr parameter(ParamId p, double coeff = 1.0);

  AffExpr& add_var(VarId v, double coeff);
  AffExpr& add_param(ParamId p, double coeff);
  AffExpr& add_const(double c);
  AffExpr& add(const AffExpr& other, double scale = 1.0);

  void scale(double s);
  void compact(double drop_tol = 0.0);

  double constant() const { return constant_; }
  std::span<const LinTerm> vars() const { return vars_; }
  std::span<const LinTerm> params() const { return params_; }
  bool has_params() const { return !params_.empty(); }

  /// Value with every parameter replaced by `param_values[id]`.
  double eval(std::span<const double> point, std::span<const double> param_values) const;
  double eval(std::span<const double> point) const;

  /// Largest id referenced, -1 when the expression has no variable terms.
  VarId max_var() const;

  bool operator==(const AffExpr&) const = default;

private:
  std::vector<LinTerm> vars_;
  std::vector<LinTerm> params_;
  double constant_ = 0.0;
};

AffExpr operator+(AffExpr a, const AffExpr& b);
AffExpr operator-(AffExpr a, const AffExpr& b);
AffExpr operator*(double s, AffExpr a);

/// One `coeff * v_i * v_j` product term, stored with i <= j.
struct QuadTerm {
  VarId i = -1;
  VarId j = -1;
  double coeff = 0.0;
};

/// Quadratic expression over variables only (parameters must already be
/// resolved or promoted): affine part plus sum of products.
class QuadExpr {
public:
  QuadExpr() = default;
  QuadExpr(AffExpr lin) : lin_(std::move(lin)) {}

  AffExpr& lin() { return lin_; }
  const AffExpr& lin() const { return lin_; }
  std::span<const QuadTerm> quad() const { return quad_; }

  QuadExpr& add_product(VarId i, VarId j, double coeff);
  /// Adds coeff * a * b, expanding into variable products.  Both factors
  /// must be parameter-free.
  QuadExpr& add_bilinear(const AffExpr& a, const AffExpr& b, double coeff = 1.0);
  QuadExpr& add(const QuadExpr& other, double scale = 1.0);
  QuadExpr& add(const AffExpr& other, double scale = 1.0);
  void compact(double drop_tol = 0.0);

  double eval(std::span<const double> point) const;
  /// Accumulates the gradient at `point` into `grad` (dense, pre-sized).
  void add_gradient(std::span<const double> point, std::span<double> grad, double scale = 1.0) const;
  /// Constant Hessian triplets (i, j, value) with i <= j, halves implied:
  /// the Hessian entry for i != j is `coeff` on both (i,j) and (j,i); for
  /// i == j it is `2 * coeff`.
  std::span<const QuadTerm> hessian_upper() const { return quad_; }

  bool is_affine() const { return quad_.empty(); }

private:
  AffExpr lin_;
  std::vector<QuadTerm> quad_;
};

} // namespace stratbid
