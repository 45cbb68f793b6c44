#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#include "stratbid/nlp.hpp"

namespace stratbid {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Inequality rows whose gradient support exceeds this stay as explicit
// KKT borders instead of being condensed (keeps the factor sparse).
constexpr int kWideRow = 24;

std::pair<double, double> bounds_of(const ReducedProblem& r, const BoundOverrides& ov, VarId v) {
  if (!ov.empty()) return ov[v];
  return {r.vars[v].lb, r.vars[v].ub};
}

using SparseGrad = std::vector<std::pair<int, double>>;

void eval_grad(const QuadExpr& q, std::span<const double> v, SparseGrad& g) {
  g.clear();
  for (const auto& t : q.lin().vars()) g.emplace_back(t.id, t.coeff);
  for (const auto& t : q.quad()) {
    if (t.i == t.j) {
      g.emplace_back(t.i, 2.0 * t.coeff * v[t.i]);
    } else {
      g.emplace_back(t.i, t.coeff * v[t.j]);
      g.emplace_back(t.j, t.coeff * v[t.i]);
    }
  }
  std::sort(g.begin(), g.end());
  size_t w = 0;
  for (size_t i = 0; i < g.size(); ++i) {
    if (w > 0 && g[w - 1].first == g[i].first) {
      g[w - 1].second += g[i].second;
    } else {
      g[w++] = g[i];
    }
  }
  g.resize(w);
}

int static_support(const QuadExpr& q) {
  std::vector<int> s;
  for (const auto& t : q.lin().vars()) s.push_back(t.id);
  for (const auto& t : q.quad()) {
    s.push_back(t.i);
    s.push_back(t.j);
  }
  std::sort(s.begin(), s.end());
  return static_cast<int>(std::unique(s.begin(), s.end()) - s.begin());
}

/// Compiled smoothing row with its local support and affine lift.
struct SmoothRowC {
  smoothing::Kind kind;
  double eps;
  int dim;
  std::vector<VarId> support;
  MatrixXd lift;       // (2 dim) x |support|
  VectorXd lift_const; // (2 dim)

  void local_xy(std::span<const double> v, VectorXd& xy) const {
    xy = lift_const;
    for (int c = 0; c < lift.cols(); ++c) xy += lift.col(c) * v[support[c]];
  }
};

SmoothRowC compile_smooth(const SmoothedPairRow& row) {
  SmoothRowC c;
  c.kind = row.kind;
  c.eps = row.eps;
  c.dim = row.dim;
  std::vector<VarId> sup;
  for (const auto& e : row.x)
    for (const auto& t : e.vars()) sup.push_back(t.id);
  for (int k = 0; k < row.dim; ++k) sup.push_back(row.y_start + k);
  std::sort(sup.begin(), sup.end());
  sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
  c.support = sup;
  c.lift = MatrixXd::Zero(2 * row.dim, static_cast<int>(sup.size()));
  c.lift_const = VectorXd::Zero(2 * row.dim);
  auto col_of = [&](VarId v) {
    return static_cast<int>(std::lower_bound(sup.begin(), sup.end(), v) - sup.begin());
  };
  for (int k = 0; k < row.dim; ++k) {
    c.lift_const(k) = row.x[k].constant();
    for (const auto& t : row.x[k].vars()) c.lift(k, col_of(t.id)) += t.coeff;
    c.lift(row.dim + k, col_of(row.y_start + k)) = 1.0;
  }
  return c;
}

void smooth_eval(const SmoothRowC& c, std::span<const double> v, VectorXd& res, MatrixXd* jac_v) {
  VectorXd xy;
  c.local_xy(v, xy);
  res = smoothing::residual(c.kind, xy.head(c.dim), xy.tail(c.dim), c.eps);
  if (jac_v) {
    auto J = smoothing::jacobian(c.kind, xy.head(c.dim), xy.tail(c.dim), c.eps);
    MatrixXd jxy(c.dim, 2 * c.dim);
    jxy << J.dx, J.dy;
    *jac_v = jxy * c.lift;
  }
}

/// Local Hessian of mult' * residual via central differences of the
/// analytic Jacobian (first-order data stays exact).
MatrixXd smooth_hess_local(const SmoothRowC& c, const VectorXd& xy, const VectorXd& mult) {
  const int d2 = 2 * c.dim;
  MatrixXd H = MatrixXd::Zero(d2, d2);
  VectorXd p = xy;
  for (int j = 0; j < d2; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(xy(j)));
    p(j) = xy(j) + h;
    auto Jp = smoothing::jacobian(c.kind, p.head(c.dim), p.tail(c.dim), c.eps);
    p(j) = xy(j) - h;
    auto Jm = smoothing::jacobian(c.kind, p.head(c.dim), p.tail(c.dim), c.eps);
    p(j) = xy(j);
    MatrixXd jd(c.dim, d2);
    jd << (Jp.dx - Jm.dx), (Jp.dy - Jm.dy);
    H.col(j) = jd.transpose() * mult / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

struct Compiled {
  int n = 0;
  QuadExpr obj; // minimize
  std::vector<QuadExpr> eq;
  std::vector<SmoothRowC> sm;
  std::vector<QuadExpr> ineq;
  std::vector<bool> wide; // per inequality row
  int n_sm_rows = 0;
  int n_wide = 0;
};

Compiled compile(const ReducedProblem& r, const BoundOverrides& ov) {
  Compiled c;
  c.n = static_cast<int>(r.vars.size());
  c.obj.add(r.objective, -1.0);

  for (const auto& row : r.linear) {
    if (row.rel == Rel::Eq) {
      c.eq.push_back(QuadExpr(row.expr));
    } else {
      c.ineq.push_back(QuadExpr(row.expr));
    }
  }
  for (const auto& row : r.quad) {
    if (row.rel == Rel::Eq) {
      c.eq.push_back(row.expr);
    } else {
      c.ineq.push_back(row.expr);
    }
  }
  for (const auto& cone : r.soc) {
    QuadExpr q;
    for (size_t k = 1; k < cone.comps.size(); ++k) q.add_bilinear(cone.comps[k], cone.comps[k]);
    q.add_bilinear(cone.comps[0], cone.comps[0], -1.0);
    c.ineq.push_back(std::move(q));
    AffExpr head = cone.comps[0];
    head.scale(-1.0);
    c.ineq.push_back(QuadExpr(std::move(head)));
  }
  for (const auto& row : r.smooth) {
    c.sm.push_back(compile_smooth(row));
    c.n_sm_rows += row.dim;
  }
  for (VarId v = 0; v < static_cast<VarId>(r.vars.size()); ++v) {
    auto [lb, ub] = bounds_of(r, ov, v);
    if (lb == ub) {
      AffExpr e = AffExpr::variable(v);
      e.add_const(-lb);
      c.eq.push_back(QuadExpr(std::move(e)));
      continue;
    }
    if (lb > -kInf) {
      AffExpr e = AffExpr::variable(v, -1.0);
      e.add_const(lb);
      c.ineq.push_back(QuadExpr(std::move(e)));
    }
    if (ub < kInf) {
      AffExpr e = AffExpr::variable(v);
      e.add_const(-ub);
      c.ineq.push_back(QuadExpr(std::move(e)));
    }
  }
  c.wide.resize(c.ineq.size());
  for (size_t i = 0; i < c.ineq.size(); ++i) {
    c.wide[i] = static_support(c.ineq[i]) > kWideRow;
    if (c.wide[i]) ++c.n_wide;
  }
  return c;
}

} // namespace

double reduced_infeasibility(const ReducedProblem& r, std::span<const double> point,
                             const BoundOverrides& overrides) {
  double worst = 0.0;
  for (const auto& row : r.linear) {
    const double val = row.expr.eval(point);
    worst = std::max(worst, row.rel == Rel::Eq ? std::abs(val) : val);
  }
  for (const auto& row : r.quad) {
    const double val = row.expr.eval(point);
    worst = std::max(worst, row.rel == Rel::Eq ? std::abs(val) : val);
  }
  for (const auto& cone : r.soc) {
    double head = cone.comps[0].eval(point);
    double tail2 = 0.0;
    for (size_t k = 1; k < cone.comps.size(); ++k) {
      const double ck = cone.comps[k].eval(point);
      tail2 += ck * ck;
    }
    worst = std::max(worst, std::sqrt(tail2) - head);
  }
  for (const auto& row : r.smooth) {
    auto c = compile_smooth(row);
    VectorXd res;
    smooth_eval(c, point, res, nullptr);
    worst = std::max(worst, res.lpNorm<Eigen::Infinity>());
  }
  for (VarId v = 0; v < static_cast<VarId>(r.vars.size()); ++v) {
    auto [lb, ub] = bounds_of(r, overrides, v);
    if (lb > -kInf) worst = std::max(worst, lb - point[v]);
    if (ub < kInf) worst = std::max(worst, point[v] - ub);
  }
  return worst;
}

NlpSolution solve_nlp(const ReducedProblem& r, std::span<const double> start,
                      const SolveOptions& opts, const BoundOverrides& overrides) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Compiled c = compile(r, overrides);
  const int n = c.n;
  const int n_scalar_eq = static_cast<int>(c.eq.size());
  const int n_eq = n_scalar_eq + c.n_sm_rows;
  const int n_in = static_cast<int>(c.ineq.size());

  // Unknown layout: [dv (n); dy (n_eq); dz_wide (n_wide)].
  std::vector<int> wide_index(n_in, -1);
  {
    int w = 0;
    for (int i = 0; i < n_in; ++i)
      if (c.wide[i]) wide_index[i] = w++;
  }
  const int dim = n + n_eq + c.n_wide;

  VectorXd v = Eigen::Map<const VectorXd>(start.data(), start.size());
  VectorXd y = VectorXd::Zero(n_eq);
  VectorXd s(n_in), zi(n_in), ci(n_in);

  auto eval_ineqs = [&](const VectorXd& vv, VectorXd& out) {
    std::span<const double> sp(vv.data(), n);
    out.resize(n_in);
    for (int i = 0; i < n_in; ++i) out(i) = c.ineq[i].eval(sp);
  };

  eval_ineqs(v, ci);
  double mu = 0.1;
  for (int i = 0; i < n_in; ++i) s(i) = std::max(1e-4, -ci(i));
  for (int i = 0; i < n_in; ++i) zi(i) = mu / s(i);

  double nu = 1.0;
  int iter = 0;
  SolveStatus verdict = SolveStatus::IterationLimit;
  double best_kkt = kInf;
  int stall = 0;

  std::vector<SparseGrad> jin(n_in), jeq(n_scalar_eq);
  VectorXd ce(n_scalar_eq);
  std::vector<VectorXd> smres(c.sm.size());
  std::vector<MatrixXd> smjac(c.sm.size());

  auto merit = [&](const VectorXd& vv, const VectorXd& ss) {
    std::span<const double> sp(vv.data(), n);
    double m = c.obj.eval(sp);
    for (int i = 0; i < n_in; ++i) m -= mu * std::log(ss(i));
    for (const auto& q : c.eq) m += nu * std::abs(q.eval(sp));
    for (const auto& srow : c.sm) {
      VectorXd res;
      smooth_eval(srow, sp, res, nullptr);
      m += nu * res.lpNorm<1>();
    }
    VectorXd cti;
    // inline to avoid capture clash
    cti.resize(n_in);
    for (int i = 0; i < n_in; ++i) cti(i) = c.ineq[i].eval(sp);
    for (int i = 0; i < n_in; ++i) m += nu * std::abs(cti(i) + ss(i));
    return m;
  };

  for (iter = 0; iter < opts.max_iterations; ++iter) {
    if (elapsed() > opts.time_limit_s) {
      verdict = SolveStatus::TimeLimit;
      break;
    }
    std::span<const double> vs(v.data(), n);

    // Residuals and first-order data.
    for (int i = 0; i < n_scalar_eq; ++i) {
      ce(i) = c.eq[i].eval(vs);
      eval_grad(c.eq[i], vs, jeq[i]);
    }
    for (size_t i = 0; i < c.sm.size(); ++i) smooth_eval(c.sm[i], vs, smres[i], &smjac[i]);
    eval_ineqs(v, ci);
    VectorXd ri = ci + s;
    for (int i = 0; i < n_in; ++i) eval_grad(c.ineq[i], vs, jin[i]);

    VectorXd rstat = VectorXd::Zero(n);
    c.obj.add_gradient(vs, std::span<double>(rstat.data(), n));
    for (int i = 0; i < n_scalar_eq; ++i)
      for (const auto& [a, g] : jeq[i]) rstat(a) += y(i) * g;
    {
      int yk = n_scalar_eq;
      for (size_t i = 0; i < c.sm.size(); ++i) {
        const auto& srow = c.sm[i];
        for (int k = 0; k < srow.dim; ++k)
          for (int col = 0; col < smjac[i].cols(); ++col)
            rstat(srow.support[col]) += y(yk + k) * smjac[i](k, col);
        yk += srow.dim;
      }
    }
    for (int i = 0; i < n_in; ++i)
      for (const auto& [a, g] : jin[i]) rstat(a) += zi(i) * g;

    double feas_inf = 0.0;
    for (int i = 0; i < n_scalar_eq; ++i) feas_inf = std::max(feas_inf, std::abs(ce(i)));
    for (const auto& res : smres) feas_inf = std::max(feas_inf, res.lpNorm<Eigen::Infinity>());
    if (n_in) feas_inf = std::max(feas_inf, ri.lpNorm<Eigen::Infinity>());
    const double comp_inf = n_in ? (s.array() * zi.array()).abs().maxCoeff() : 0.0;
    const double mult_scale =
        std::max(1.0, std::max(n_eq ? y.lpNorm<Eigen::Infinity>() : 0.0,
                               n_in ? zi.lpNorm<Eigen::Infinity>() : 0.0) /
                          100.0);
    const double kkt_err =
        std::max({rstat.lpNorm<Eigen::Infinity>() / mult_scale, feas_inf, comp_inf});

    if (opts.trace) {
      fmt::print(*opts.trace, "nlp iter={} merit={:.8e} mu={:.2e} infeas={:.3e} kkt={:.3e}\n",
                 iter, merit(v, s), mu, feas_inf, kkt_err);
    }
    if (kkt_err <= opts.opt_tol && feas_inf <= opts.feas_tol) {
      verdict = SolveStatus::Optimal;
      break;
    }
    if (kkt_err < best_kkt * 0.95) {
      best_kkt = kkt_err;
      stall = 0;
    } else if (++stall > 60) {
      verdict = feas_inf <= opts.feas_tol ? SolveStatus::Feasible : SolveStatus::InfeasiblePoint;
      break;
    }

    const double comp_err = n_in ? (s.array() * zi.array() - mu).abs().maxCoeff() : 0.0;
    if (std::max({rstat.lpNorm<Eigen::Infinity>() / mult_scale, feas_inf, comp_err}) <= 10.0 * mu) {
      mu = std::max(opts.opt_tol / 10.0, std::min(0.2 * mu, std::pow(mu, 1.2)));
      stall = 0;
    }

    // KKT assembly.
    std::vector<Triplet> tr;
    auto add_sym = [&](int i, int j, double val) {
      if (val == 0.0) return;
      if (i == j) {
        tr.emplace_back(i, i, val);
      } else {
        tr.emplace_back(i, j, val);
        tr.emplace_back(j, i, val);
      }
    };
    auto add_quad_hess = [&](const QuadExpr& q, double w) {
      if (w == 0.0) return;
      for (const auto& t : q.hessian_upper())
        add_sym(t.i, t.j, w * (t.i == t.j ? 2.0 * t.coeff : t.coeff));
    };
    add_quad_hess(c.obj, 1.0);
    for (int i = 0; i < n_scalar_eq; ++i) add_quad_hess(c.eq[i], y(i));
    {
      int yk = n_scalar_eq;
      for (size_t i = 0; i < c.sm.size(); ++i) {
        const auto& srow = c.sm[i];
        VectorXd xy;
        srow.local_xy(vs, xy);
        MatrixXd Hxy = smooth_hess_local(srow, xy, y.segment(yk, srow.dim));
        MatrixXd Hv = srow.lift.transpose() * Hxy * srow.lift;
        for (int a = 0; a < Hv.rows(); ++a)
          for (int b = a; b < Hv.cols(); ++b) add_sym(srow.support[a], srow.support[b], Hv(a, b));
        yk += srow.dim;
      }
    }
    for (int i = 0; i < n_in; ++i) add_quad_hess(c.ineq[i], zi(i));
    // Condensed narrow rows.
    for (int i = 0; i < n_in; ++i) {
      if (c.wide[i]) continue;
      const double sigma = zi(i) / s(i);
      for (size_t a = 0; a < jin[i].size(); ++a)
        for (size_t b = a; b < jin[i].size(); ++b)
          add_sym(jin[i][a].first, jin[i][b].first, sigma * jin[i][a].second * jin[i][b].second);
    }
    // Equality borders.
    for (int i = 0; i < n_scalar_eq; ++i)
      for (const auto& [a, g] : jeq[i]) {
        tr.emplace_back(n + i, a, g);
        tr.emplace_back(a, n + i, g);
      }
    {
      int yk = n_scalar_eq;
      for (size_t i = 0; i < c.sm.size(); ++i) {
        const auto& srow = c.sm[i];
        for (int k = 0; k < srow.dim; ++k)
          for (int col = 0; col < smjac[i].cols(); ++col)
            if (smjac[i](k, col) != 0.0) {
              tr.emplace_back(n + yk + k, srow.support[col], smjac[i](k, col));
              tr.emplace_back(srow.support[col], n + yk + k, smjac[i](k, col));
            }
        yk += srow.dim;
      }
    }
    // Wide inequality borders: J_i dv - (s_i/z_i) dz_i = -r_i - (mu - s z)/z.
    for (int i = 0; i < n_in; ++i) {
      if (!c.wide[i]) continue;
      const int row = n + n_eq + wide_index[i];
      for (const auto& [a, g] : jin[i]) {
        tr.emplace_back(row, a, g);
        tr.emplace_back(a, row, g);
      }
      tr.emplace_back(row, row, -s(i) / zi(i));
    }

    // RHS.
    VectorXd rhs = VectorXd::Zero(dim);
    rhs.head(n) = -rstat;
    for (int i = 0; i < n_in; ++i) {
      if (c.wide[i]) continue;
      const double coeff = (zi(i) * ri(i) - (mu - s(i) * zi(i))) / s(i);
      for (const auto& [a, g] : jin[i]) rhs(a) -= coeff * g;
    }
    for (int i = 0; i < n_scalar_eq; ++i) rhs(n + i) = -ce(i);
    {
      int yk = n_scalar_eq;
      for (const auto& res : smres)
        for (int k = 0; k < res.size(); ++k) rhs(n + yk++) = -res(k);
    }
    for (int i = 0; i < n_in; ++i) {
      if (!c.wide[i]) continue;
      rhs(n + n_eq + wide_index[i]) = -ri(i) - (mu - s(i) * zi(i)) / zi(i);
    }

    // Factor with inertia correction.
    VectorXd sol;
    double delta = 0.0;
    bool solved = false;
    for (int attempt = 0; attempt < 14 && !solved; ++attempt) {
      std::vector<Triplet> tr2 = tr;
      for (int i = 0; i < n; ++i) tr2.emplace_back(i, i, delta + 1e-11);
      for (int i = n; i < dim; ++i) tr2.emplace_back(i, i, -1e-11);
      SpMat K(dim, dim);
      K.setFromTriplets(tr2.begin(), tr2.end());
      Eigen::SimplicialLDLT<SpMat> ldlt(K);
      if (ldlt.info() == Eigen::Success) {
        VectorXd D = ldlt.vectorD();
        int negs = 0;
        bool bad = false;
        for (int i = 0; i < D.size(); ++i) {
          if (D(i) < 0) ++negs;
          if (D(i) == 0.0 || !std::isfinite(D(i))) bad = true;
        }
        if (!bad && negs == dim - n) {
          sol = ldlt.solve(rhs);
          VectorXd resid = rhs - K * sol;
          sol += ldlt.solve(resid);
          resid = rhs - K * sol;
          sol += ldlt.solve(resid);
          solved = sol.allFinite();
        }
      }
      if (!solved) delta = (delta == 0.0) ? 1e-8 : delta * 100.0;
    }
    if (!solved) {
      verdict = SolveStatus::InfeasiblePoint;
      break;
    }

    VectorXd dv = sol.head(n);
    VectorXd dy = sol.segment(n, n_eq);
    VectorXd ds(n_in), dz(n_in);
    for (int i = 0; i < n_in; ++i) {
      double jdv = 0.0;
      for (const auto& [a, g] : jin[i]) jdv += g * dv(a);
      ds(i) = -ri(i) - jdv;
      if (c.wide[i]) {
        dz(i) = sol(n + n_eq + wide_index[i]);
      } else {
        dz(i) = (mu - s(i) * zi(i) - zi(i) * ds(i)) / s(i);
      }
    }

    const double tau_ftb = 0.995;
    double alpha_max = 1.0, alpha_z = 1.0;
    for (int i = 0; i < n_in; ++i) {
      if (ds(i) < 0) alpha_max = std::min(alpha_max, -tau_ftb * s(i) / ds(i));
      if (dz(i) < 0) alpha_z = std::min(alpha_z, -tau_ftb * zi(i) / dz(i));
    }

    nu = std::max({1.0, nu, 2.0 * (n_eq ? dy.lpNorm<Eigen::Infinity>() : 0.0),
                   2.0 * (n_in ? zi.lpNorm<Eigen::Infinity>() : 0.0)});
    const double m0 = merit(v, s);
    double alpha = alpha_max;
    bool accepted = false;
    for (int ls = 0; ls < 45; ++ls) {
      VectorXd vt = v + alpha * dv;
      VectorXd st = s + alpha * ds;
      if ((st.array() > 0).all()) {
        const double mt = merit(vt, st);
        if (mt < m0 - 1e-4 * alpha * std::max(0.0, m0 - mt) || mt < m0) {
          v = vt;
          s = st;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
      if (alpha < 1e-13) break;
    }
    if (!accepted) {
      nu *= 10.0;
      if (nu > 1e14) {
        verdict = feas_inf <= opts.feas_tol ? SolveStatus::Feasible : SolveStatus::InfeasiblePoint;
        break;
      }
      continue;
    }
    y += alpha * dy;
    zi += std::min(alpha, alpha_z) * dz;
    for (int i = 0; i < n_in; ++i) zi(i) = std::max(zi(i), 1e-16);

    if (opts.trace) fmt::print(*opts.trace, "nlp iter={} step={:.4f}\n", iter, alpha);
  }

  NlpSolution out;
  std::span<const double> vs(v.data(), n);
  out.point.assign(v.data(), v.data() + n);
  out.objective = r.objective.eval(vs);
  out.max_infeasibility = reduced_infeasibility(r, vs, overrides);
  out.iterations = iter;
  out.wall_time_s = elapsed();
  if (verdict == SolveStatus::Optimal && out.max_infeasibility > 10.0 * opts.feas_tol)
    verdict = SolveStatus::InfeasiblePoint;
  if (verdict == SolveStatus::IterationLimit && out.max_infeasibility <= opts.feas_tol)
    verdict = SolveStatus::Feasible;
  out.status = verdict;
  return out;
}

NlpSolution multistart(const ReducedProblem& r, std::span<const double> start,
                       const SolveOptions& opts, const BoundOverrides& overrides) {
  const auto t0 = std::chrono::steady_clock::now();
  NlpSolution best;
  bool have = false;
  int total_iters = 0;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-opts.perturbation_radius, opts.perturbation_radius);

  const int count = std::max(1, opts.multistart_count);
  for (int k = 0; k < count; ++k) {
    std::vector<double> pt(start.begin(), start.end());
    if (k > 0) {
      // Perturbation radius applies in per-variable scaled units.
      for (size_t i = 0; i < pt.size(); ++i) {
        const double scale = std::max(1.0, std::abs(start[i]));
        pt[i] += scale * unif(rng);
        auto [lb, ub] = bounds_of(r, overrides, static_cast<VarId>(i));
        pt[i] = std::clamp(pt[i], lb, ub);
      }
    }
    SolveOptions o = opts;
    o.time_limit_s =
        opts.time_limit_s - std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.time_limit_s <= 0 && have) break;
    NlpSolution sol = solve_nlp(r, pt, o, overrides);
    total_iters += sol.iterations;
    const bool better = [&] {
      if (!have) return true;
      if (sol.ok() != best.ok()) return sol.ok();
      if (sol.ok()) {
        if (sol.objective != best.objective) return sol.objective > best.objective;
        return std::lexicographical_compare(sol.point.begin(), sol.point.end(), best.point.begin(),
                                            best.point.end());
      }
      return sol.max_infeasibility < best.max_infeasibility;
    }();
    if (better) {
      best = sol;
      have = true;
    }
  }
  best.iterations = total_iters;
  best.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

bool is_conic_representable(const ReducedProblem& r) {
  if (!r.smooth.empty()) return false;
  for (const auto& q : r.quad) {
    if (q.expr.is_affine()) continue;
    if (q.rel == Rel::Eq) return false;
    for (const auto& t : q.expr.quad())
      if (t.i != t.j || t.coeff < 0) return false;
  }
  for (const auto& t : r.objective.quad())
    if (t.i != t.j || t.coeff > 0) return false;
  return true;
}

ConicProgram to_conic(const ReducedProblem& r, const BoundOverrides& overrides) {
  if (!is_conic_representable(r)) throw std::logic_error("reduced problem is not conic");
  ConicProgram p;
  for (VarId v = 0; v < static_cast<VarId>(r.vars.size()); ++v) {
    auto [lb, ub] = bounds_of(r, overrides, v);
    p.add_variable(r.vars[v].name, lb, ub);
  }
  for (const auto& row : r.linear) p.add_linear(row.name, row.expr, row.rel);
  for (const auto& cone : r.soc) {
    auto comps = cone.comps;
    p.add_soc(cone.name, std::move(comps));
  }
  for (const auto& row : r.quad) {
    if (row.expr.is_affine()) {
      p.add_linear(row.name, row.expr.lin(), row.rel);
      continue;
    }
    // sum q u^2 + a'u + c <= 0  as  ||(1 + a'u + c; 2 sqrt(q) u)|| <= 1 - a'u - c
    const AffExpr& lin = row.expr.lin();
    std::vector<AffExpr> comps;
    AffExpr head = lin;
    head.scale(-1.0);
    head.add_const(1.0);
    comps.push_back(std::move(head));
    AffExpr second = lin;
    second.add_const(1.0);
    comps.push_back(std::move(second));
    for (const auto& t : row.expr.quad())
      comps.push_back(AffExpr::variable(t.i, 2.0 * std::sqrt(t.coeff)));
    p.add_soc(row.name, std::move(comps));
  }
  AffExpr lin = r.objective.lin();
  lin.scale(-1.0);
  p.set_objective_linear(std::move(lin));
  for (const auto& t : r.objective.quad()) p.add_objective_quadratic(t.i, -t.coeff);
  p.freeze();
  return p;
}

std::vector<double> default_start(const ReducedProblem& r) {
  std::vector<double> pt(r.vars.size(), 0.0);
  for (size_t i = 0; i < r.vars.size(); ++i) {
    const auto& v = r.vars[i];
    if (v.lb > -kInf && v.ub < kInf) {
      pt[i] = 0.5 * (v.lb + v.ub);
    } else if (v.lb > -kInf) {
      pt[i] = v.lb;
    } else if (v.ub < kInf) {
      pt[i] = v.ub;
    }
  }
  return pt;
}

NlpSolution solve_reduced(const ReducedProblem& r, std::span<const double> start,
                          const SolveOptions& opts, const BoundOverrides& overrides) {
  if (r.integer_vars.empty() && is_conic_representable(r)) {
    ConicProgram p = to_conic(r, overrides);
    ConicSolution cs = solve_conic(p, opts);
    NlpSolution out;
    out.status = cs.status;
    out.point = cs.point;
    out.objective = r.objective.eval(cs.point);
    out.max_infeasibility = reduced_infeasibility(r, cs.point, overrides);
    out.iterations = cs.iterations;
    out.wall_time_s = cs.wall_time_s;
    return out;
  }
  return multistart(r, start, opts, overrides);
}

} // namespace stratbid
