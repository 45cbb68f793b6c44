#pragma once

#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stratbid/expr.hpp"

namespace stratbid {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Origin tag for constraint blocks; reductions keep blocks apart by tag.
enum class RowTag {
  General,
  Bound,        // materialized variable bound
  Balance,      // nodal power balance (price rows)
  Stationarity, // dual stationarity row
  Technique,    // added by a reduction technique
  Upper,        // upper-level constraint
};

struct VarInfo {
  std::string name;
  double lb = -kInf;
  double ub = kInf;
  bool is_binary = false;
};

struct ParamInfo {
  std::string name;
  double value = 0.0; // default binding
};

enum class Rel { Eq, Le }; // expr == 0 or expr <= 0

struct LinearCon {
  std::string name;
  AffExpr expr; // normalized: expr (rel) 0
  Rel rel = Rel::Eq;
  RowTag tag = RowTag::General;
};

/// Second-order cone row: comps[0] >= || comps[1..] ||, each component affine.
struct SocCon {
  std::string name;
  std::vector<AffExpr> comps;
  RowTag tag = RowTag::General;
};

/// Convex objective: minimize lin + sum(q_v * v^2) + sum(c * param * var).
/// The quadratic part is diagonal by construction; the param-bilinear part
/// collapses into the linear part once parameters take values.
struct ConicObjective {
  AffExpr lin;
  std::vector<std::pair<VarId, double>> quad; // q >= 0, sorted by var
  std::vector<std::tuple<ParamId, VarId, double>> param_bilin;
};

struct EvalResult {
  double objective = 0.0;
  double max_infeasibility = 0.0; // largest signed violation, <= 0 means feasible
};

/// Immutable-after-freeze symbolic convex program with linear rows, SOC
/// rows and a diagonal convex quadratic objective.  Bounds declared on
/// variables are materialized into tagged rows at freeze time so that the
/// primal-dual pairing covers them; an exact lb == ub pair becomes one
/// equality row.
class ConicProgram {
public:
  VarId add_variable(const std::string& name, double lb = -kInf, double ub = kInf);
  VarId add_binary(const std::string& name);
  ParamId add_parameter(const std::string& name, double value = 0.0);

  void add_linear(const std::string& name, AffExpr expr, Rel rel, RowTag tag = RowTag::General);
  void add_soc(const std::string& name, std::vector<AffExpr> comps, RowTag tag = RowTag::General);
  void set_objective_linear(AffExpr lin);
  void add_objective_quadratic(VarId v, double coeff); // coeff >= 0
  void add_objective_param_bilinear(ParamId p, VarId v, double coeff);
  void add_objective_constant(double c);

  /// Materializes bounds as rows and locks the program.
  void freeze();
  bool frozen() const { return frozen_; }

  size_t num_vars() const { return vars_.size(); }
  size_t num_params() const { return params_.size(); }
  const std::vector<VarInfo>& vars() const { return vars_; }
  const std::vector<ParamInfo>& params() const { return params_; }
  const std::vector<LinearCon>& linear() const { return linear_; }
  const std::vector<SocCon>& soc() const { return soc_; }
  const ConicObjective& objective() const { return objective_; }

  VarId var(const std::string& name) const;
  ParamId param(const std::string& name) const;
  std::optional<VarId> try_var(const std::string& name) const;

  /// Current parameter bindings as a dense vector.
  std::vector<double> param_values() const;
  void set_param_value(ParamId p, double value);

  /// Objective value and max signed constraint violation at a point.
  EvalResult evaluate(std::span<const double> point) const;
  EvalResult evaluate(std::span<const double> point, std::span<const double> param_values) const;

  /// Stable plain-text listing for golden tests and debugging.
  std::string dump() const;

private:
  void check_mutable() const;
  void check_expr(const AffExpr& e) const;

  std::vector<VarInfo> vars_;
  std::vector<ParamInfo> params_;
  std::unordered_map<std::string, VarId> var_index_;
  std::unordered_map<std::string, ParamId> param_index_;
  std::vector<LinearCon> linear_;
  std::vector<SocCon> soc_;
  ConicObjective objective_;
  bool frozen_ = false;
};

/// One primal/dual cone pair.  The primal side is an affine slack vector of
/// the primal program (scalar for linear inequalities); the dual side is a
/// contiguous block of dual variables of the same dimension.
struct ConePair {
  enum class Kind { Scalar, Soc };
  Kind kind = Kind::Scalar;
  int primal_row = -1;      // index into linear() or soc() of the primal
  VarId dual_start = -1;    // first dual variable of the y block
  int dim = 1;

  /// Affine expressions of the primal cone vector x = (x0, xbar).
  std::vector<AffExpr> primal_comps;
};

/// Bijection between primal cone rows (including scalar pairs from linear
/// inequalities) and dual cone variable blocks.
struct PairingMap {
  std::vector<ConePair> pairs;

  /// x vector of a pair at a primal point (parameters bound).
  std::vector<double> primal_value(const ConePair& p, std::span<const double> point,
                                   std::span<const double> param_values) const;
  /// y vector of a pair at a dual point.
  std::vector<double> dual_value(const ConePair& p, std::span<const double> dual_point) const;
};

/// Dual program with bookkeeping linking it back to the primal.  The dual
/// is itself a ConicProgram (maximization stored negated: the stored
/// objective minimizes -dual objective).  Quadratic primal costs dualize
/// through mirror variables carrying the stationarity row pattern
/// c + sum(A^T y) + 2 q z = 0, which keeps weak duality valid at any
/// dual-feasible point.
struct DualProgram {
  ConicProgram program;

  /// Dual variable of each primal linear row (equality: free; inequality:
  /// the nonnegative multiplier).
  std::vector<VarId> row_dual;
  /// First dual variable of the cone block of each primal SOC row.
  std::vector<VarId> soc_dual_start;
  /// Mirror variable z for each primal variable with quadratic cost
  /// (parallel arrays).
  std::vector<VarId> quad_primal_var;
  std::vector<VarId> quad_mirror_var;
  /// Index into program.linear() of each mirror's stationarity row.
  std::vector<int> quad_mirror_row;
  /// Stationarity row of every primal variable without quadratic cost,
  /// parallel to `stationarity_var`.
  std::vector<VarId> stationarity_var;
  std::vector<int> stationarity_row;

  /// Ω^d as an expression over dual variables and primal parameters:
  /// affine part + parameter-dual bilinears + diagonal quadratic mirrors.
  /// (The stored program minimizes the negation of this.)
  AffExpr objective_lin;                                    // over dual vars
  std::vector<std::tuple<ParamId, VarId, double>> objective_param_bilin;
  std::vector<std::pair<VarId, double>> objective_quad;     // -q * z^2 terms, coeff = q

  double dual_objective(std::span<const double> dual_point,
                        std::span<const double> param_values) const;
};

/// Mechanical dualization of a frozen convex program.
/// Returns the dual program and the complete primal-dual cone pairing.
std::pair<DualProgram, PairingMap> dualize(const ConicProgram& p);

struct GapResult {
  double absolute = 0.0;
  double relative_pct = 0.0;
};

/// Ω^p - Ω^d between feasible primal and dual points; throws
/// std::invalid_argument when either point is infeasible beyond `feas_tol`.
GapResult duality_gap(const ConicProgram& primal, std::span<const double> primal_point,
                      const DualProgram& dual, std::span<const double> dual_point,
                      std::span<const double> param_values, double feas_tol = 1e-6);

} // namespace stratbid
