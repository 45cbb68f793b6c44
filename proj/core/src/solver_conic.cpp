#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <chrono>
#include <cmath>
#include <ostream>

#include "stratbid/solver.hpp"

namespace stratbid {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::InfeasiblePoint: return "infeasible-point";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration-limit";
    case SolveStatus::TimeLimit: return "time-limit";
  }
  return "?";
}

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kStaticReg = 1e-9;

/// Problem in the slack standard form
///   min c'v + v'Qv   s.t.  A v = b,  G v + s = h,  s in K,
/// K a product of an LP cone block and SOC blocks.
struct StandardForm {
  int n = 0, p = 0, m = 0; // vars, equalities, cone rows
  int n_lp = 0;
  std::vector<int> soc_dims;
  VectorXd c, b, h, qdiag;
  double obj_const = 0.0;
  SpMat A, G;
  // Primal-row bookkeeping for dual extraction.
  std::vector<int> eq_of_row;  // linear row -> A row (or -1)
  std::vector<int> lp_of_row;  // linear row -> G row (or -1)
  std::vector<int> soc_start;  // SOC row -> G row of the block head
};

StandardForm compile(const ConicProgram& p, std::span<const double> pv) {
  StandardForm f;
  f.n = static_cast<int>(p.num_vars());
  f.c = VectorXd::Zero(f.n);
  f.qdiag = VectorXd::Zero(f.n);
  for (const auto& t : p.objective().lin.vars()) f.c(t.id) += t.coeff;
  for (const auto& [pid, v, cc] : p.objective().param_bilin) f.c(v) += cc * pv[pid];
  for (const auto& [v, q] : p.objective().quad) f.qdiag(v) += q;
  f.obj_const = p.objective().lin.constant();
  for (const auto& t : p.objective().lin.params()) f.obj_const += t.coeff * pv[t.id];

  std::vector<Triplet> ta, tg;
  std::vector<double> b, h;
  f.eq_of_row.assign(p.linear().size(), -1);
  f.lp_of_row.assign(p.linear().size(), -1);
  for (size_t i = 0; i < p.linear().size(); ++i) {
    const auto& con = p.linear()[i];
    double k = con.expr.constant();
    for (const auto& t : con.expr.params()) k += t.coeff * pv[t.id];
    if (con.rel == Rel::Eq) {
      f.eq_of_row[i] = static_cast<int>(b.size());
      for (const auto& t : con.expr.vars())
        ta.emplace_back(static_cast<int>(b.size()), t.id, t.coeff);
      b.push_back(-k);
    } else {
      f.lp_of_row[i] = static_cast<int>(h.size());
      for (const auto& t : con.expr.vars())
        tg.emplace_back(static_cast<int>(h.size()), t.id, t.coeff);
      h.push_back(-k);
    }
  }
  f.n_lp = static_cast<int>(h.size());
  for (const auto& cone : p.soc()) {
    f.soc_start.push_back(static_cast<int>(h.size()));
    f.soc_dims.push_back(static_cast<int>(cone.comps.size()));
    for (const auto& comp : cone.comps) {
      double k = comp.constant();
      for (const auto& t : comp.params()) k += t.coeff * pv[t.id];
      for (const auto& t : comp.vars())
        tg.emplace_back(static_cast<int>(h.size()), t.id, -t.coeff);
      h.push_back(k);
    }
  }
  f.p = static_cast<int>(b.size());
  f.m = static_cast<int>(h.size());
  f.A.resize(f.p, f.n);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.G.resize(f.m, f.n);
  f.G.setFromTriplets(tg.begin(), tg.end());
  f.b = Eigen::Map<VectorXd>(b.data(), b.size());
  f.h = Eigen::Map<VectorXd>(h.data(), h.size());
  return f;
}

struct ConeOps {
  const StandardForm& f;

  double degree() const { return f.n_lp + static_cast<double>(f.soc_dims.size()); }

  bool in_cone(const VectorXd& s, double margin = 0.0) const {
    for (int i = 0; i < f.n_lp; ++i)
      if (s(i) <= margin) return false;
    int at = f.n_lp;
    for (int d : f.soc_dims) {
      if (s(at) <= margin) return false;
      if (s(at) * s(at) - s.segment(at + 1, d - 1).squaredNorm() <= margin) return false;
      at += d;
    }
    return true;
  }

  /// Shifts u into the cone interior ECOS-style: u + (1 + alpha) e.
  void bring_to_cone(VectorXd& u) const {
    double alpha = -1e30;
    for (int i = 0; i < f.n_lp; ++i) alpha = std::max(alpha, -u(i));
    int at = f.n_lp;
    for (int d : f.soc_dims) {
      alpha = std::max(alpha, u.segment(at + 1, d - 1).norm() - u(at));
      at += d;
    }
    if (alpha < 0) return;
    for (int i = 0; i < f.n_lp; ++i) u(i) += 1.0 + alpha;
    at = f.n_lp;
    for (int d : f.soc_dims) {
      u(at) += 1.0 + alpha;
      at += d;
    }
  }

  /// Largest step in [0, cap] keeping u + t du inside the cone.
  double max_step(const VectorXd& u, const VectorXd& du, double cap) const {
    double t = cap;
    for (int i = 0; i < f.n_lp; ++i)
      if (du(i) < 0) t = std::min(t, -u(i) / du(i));
    int at = f.n_lp;
    for (int d : f.soc_dims) {
      const double u0 = u(at), du0 = du(at);
      const auto ub = u.segment(at + 1, d - 1);
      const auto dub = du.segment(at + 1, d - 1);
      // (u0 + t du0)^2 - ||ub + t dub||^2 >= 0, head >= 0
      const double a = du0 * du0 - dub.squaredNorm();
      const double bq = 2.0 * (u0 * du0 - ub.dot(dub));
      const double cq = u0 * u0 - ub.squaredNorm();
      double tcone = cap;
      const double disc = bq * bq - 4.0 * a * cq;
      if (std::abs(a) < 1e-300) {
        if (bq < 0) tcone = -cq / bq;
      } else if (disc >= 0) {
        const double sq = std::sqrt(disc);
        double r1 = (-bq - sq) / (2 * a), r2 = (-bq + sq) / (2 * a);
        if (r1 > r2) std::swap(r1, r2);
        if (a > 0) {
          // boundary violated between the roots; forward crossing at r1
          if (r1 > 0) tcone = r1;
        } else {
          // interior lies between the roots; exit at r2
          tcone = r2 > 0 ? r2 : 0.0;
        }
      }
      if (du0 < 0) tcone = std::min(tcone, -u0 / du0);
      t = std::min(t, std::max(0.0, tcone));
      at += d;
    }
    return t;
  }

  /// Jordan product u o v.
  VectorXd prod(const VectorXd& u, const VectorXd& v) const {
    VectorXd out(f.m);
    for (int i = 0; i < f.n_lp; ++i) out(i) = u(i) * v(i);
    int at = f.n_lp;
    for (int d : f.soc_dims) {
      out(at) = u.segment(at, d).dot(v.segment(at, d));
      out.segment(at + 1, d - 1) =
          u(at) * v.segment(at + 1, d - 1) + v(at) * u.segment(at + 1, d - 1);
      at += d;
    }
    return out;
  }

  /// Jordan division lambda \ w (solve lambda o x = w).
  VectorXd div(const VectorXd& lambda, const VectorXd& w) const {
    VectorXd out(f.m);
    for (int i = 0; i < f.n_lp; ++i) out(i) = w(i) / lambda(i);
    int at = f.n_lp;
    for (int d : f.soc_dims) {
      const double l0 = lambda(at);
      const auto lb = lambda.segment(at + 1, d - 1);
      const double det = l0 * l0 - lb.squaredNorm();
      const double x0 = (l0 * w(at) - lb.dot(w.segment(at + 1, d - 1))) / det;
      out(at) = x0;
      out.segment(at + 1, d - 1) = (w.segment(at + 1, d - 1) - x0 * lb) / l0;
      at += d;
    }
    return out;
  }

  VectorXd identity() const {
    VectorXd e = VectorXd::Zero(f.m);
    for (int i = 0; i < f.n_lp; ++i) e(i) = 1.0;
    int at = f.n_lp;
    for (int d : f.soc_dims) {
      e(at) = 1.0;
      at += d;
    }
    return e;
  }
};

/// Nesterov-Todd scaling state: W with s = W lambda, z = W^{-1} lambda.
struct NTScaling {
  const StandardForm& f;
  VectorXd w_lp;               // sqrt(s/z) per LP row
  std::vector<double> eta;     // per SOC cone
  std::vector<VectorXd> wbar;  // normalized scaling point (a; q), a^2 - |q|^2 = 1

  explicit NTScaling(const StandardForm& sf) : f(sf) {}

  bool update(const VectorXd& s, const VectorXd& z) {
    w_lp = (s.head(f.n_lp).array() / z.head(f.n_lp).array()).sqrt();
    if (!w_lp.allFinite()) return false;
    eta.clear();
    wbar.clear();
    int at = f.n_lp;
    for (int d : f.soc_dims) {
      const double sres = s(at) * s(at) - s.segment(at + 1, d - 1).squaredNorm();
      const double zres = z(at) * z(at) - z.segment(at + 1, d - 1).squaredNorm();
      if (sres <= 0 || zres <= 0) return false;
      const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      VectorXd sbar = s.segment(at, d) / snorm;
      VectorXd zbar = z.segment(at, d) / znorm;
      double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
      VectorXd wb(d);
      wb(0) = (0.5 / gamma) * (sbar(0) + zbar(0));
      wb.tail(d - 1) = (0.5 / gamma) * (sbar.tail(d - 1) - zbar.tail(d - 1));
      wbar.push_back(wb);
      eta.push_back(std::sqrt(snorm / znorm));
      at += d;
    }
    return true;
  }

  /// W u (scaling applied):  LP: w .* u;  SOC: eta (2 wbar wbar' - J) ... no,
  /// W = eta (2 wbar wbar' - J)^{1/2}; the closed form below applies W.
  VectorXd apply(const VectorXd& u) const {
    VectorXd out(f.m);
    out.head(f.n_lp) = w_lp.array() * u.head(f.n_lp).array();
    int at = f.n_lp;
    for (size_t k = 0; k < f.soc_dims.size(); ++k) {
      const int d = f.soc_dims[k];
      const auto& wb = wbar[k];
      const double a = wb(0);
      const auto q = wb.tail(d - 1);
      const double zeta = q.dot(u.segment(at + 1, d - 1));
      out(at) = eta[k] * (a * u(at) + zeta);
      out.segment(at + 1, d - 1) =
          eta[k] * (u.segment(at + 1, d - 1) + (u(at) + zeta / (1.0 + a)) * q);
      at += d;
    }
    return out;
  }

  /// W^{-1} u: same form with the reflected scaling point and 1/eta.
  VectorXd apply_inv(const VectorXd& u) const {
    VectorXd out(f.m);
    out.head(f.n_lp) = u.head(f.n_lp).array() / w_lp.array();
    int at = f.n_lp;
    for (size_t k = 0; k < f.soc_dims.size(); ++k) {
      const int d = f.soc_dims[k];
      const auto& wb = wbar[k];
      const double a = wb(0);
      const auto q = wb.tail(d - 1);
      const double zeta = q.dot(u.segment(at + 1, d - 1));
      out(at) = (a * u(at) - zeta) / eta[k];
      out.segment(at + 1, d - 1) =
          (u.segment(at + 1, d - 1) + (-u(at) + zeta / (1.0 + a)) * q) / eta[k];
      at += d;
    }
    return out;
  }
};

class KktSystem {
public:
  KktSystem(const StandardForm& f) : f_(f), dim_(f.n + f.p + f.m) {
    // Assemble the constant pattern with unit scaling blocks.
    std::vector<Triplet> tr;
    for (int i = 0; i < f.n; ++i) tr.emplace_back(i, i, 2.0 * f.qdiag(i) + kStaticReg);
    for (int k = 0; k < f_.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(f_.A, k); it; ++it) {
        tr.emplace_back(f.n + it.row(), it.col(), it.value());
        tr.emplace_back(it.col(), f.n + it.row(), it.value());
      }
    for (int k = 0; k < f_.G.outerSize(); ++k)
      for (SpMat::InnerIterator it(f_.G, k); it; ++it) {
        tr.emplace_back(f.n + f.p + it.row(), it.col(), it.value());
        tr.emplace_back(it.col(), f.n + f.p + it.row(), it.value());
      }
    for (int i = 0; i < f.p; ++i) tr.emplace_back(f.n + i, f.n + i, -kStaticReg);
    for (int i = 0; i < f.n_lp; ++i) {
      const int r = f.n + f.p + i;
      tr.emplace_back(r, r, -1.0);
    }
    int at = f.n_lp;
    for (int d : f.soc_dims) {
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          tr.emplace_back(f.n + f.p + at + r, f.n + f.p + at + c, r == c ? -1.0 : 0.0);
      at += d;
    }
    K_.resize(dim_, dim_);
    K_.setFromTriplets(tr.begin(), tr.end());
    ldlt_.analyzePattern(K_);
  }

  /// Refreshes the -W^2 block and refactorizes.
  bool factorize(const NTScaling* nt) {
    for (int i = 0; i < f_.n_lp; ++i) {
      const int r = f_.n + f_.p + i;
      const double w2 = nt ? nt->w_lp(i) * nt->w_lp(i) : 1.0;
      K_.coeffRef(r, r) = -w2 - kStaticReg;
    }
    int at = f_.n_lp;
    for (size_t k = 0; k < f_.soc_dims.size(); ++k) {
      const int d = f_.soc_dims[k];
      Eigen::MatrixXd W2;
      if (nt) {
        const auto& wb = nt->wbar[k];
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d);
        for (int i = 1; i < d; ++i) J(i, i) = -1.0;
        W2 = nt->eta[k] * nt->eta[k] * (2.0 * wb * wb.transpose() - J);
      } else {
        W2 = Eigen::MatrixXd::Identity(d, d);
      }
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          K_.coeffRef(f_.n + f_.p + at + r, f_.n + f_.p + at + c) =
              -W2(r, c) - (r == c ? kStaticReg : 0.0);
      at += d;
    }
    ldlt_.factorize(K_);
    return ldlt_.info() == Eigen::Success;
  }

  /// Solves K [dx; dy; dz] = [rx; ry; rz] with iterative refinement.
  void solve(const VectorXd& rhs, VectorXd& sol, int refine_steps = 2) const {
    sol = ldlt_.solve(rhs);
    for (int it = 0; it < refine_steps; ++it) {
      VectorXd resid = rhs - K_ * sol;
      // The factorization already carries the static regularization, so
      // refining against K_ converges to the regularized system's solution.
      sol += ldlt_.solve(resid);
    }
  }

private:
  const StandardForm& f_;
  int dim_;
  SpMat K_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

struct Residuals {
  VectorXd rd, rp, rg;
  double pres = 0.0, dres = 0.0, gap = 0.0, relgap = 0.0, pobj = 0.0, dobj = 0.0;
};

Residuals compute_residuals(const StandardForm& f, const VectorXd& v, const VectorXd& y,
                            const VectorXd& z, const VectorXd& s) {
  Residuals r;
  VectorXd qv = f.qdiag.array() * v.array();
  r.rd = f.c + 2.0 * qv;
  if (f.p > 0) r.rd += f.A.transpose() * y;
  if (f.m > 0) r.rd += f.G.transpose() * z;
  r.rp = f.p > 0 ? VectorXd(f.A * v - f.b) : VectorXd();
  r.rg = f.m > 0 ? VectorXd(f.G * v + s - f.h) : VectorXd();
  const double bscale = std::max(1.0, f.b.size() ? f.b.lpNorm<Eigen::Infinity>() : 0.0);
  const double hscale = std::max(1.0, f.h.size() ? f.h.lpNorm<Eigen::Infinity>() : 0.0);
  const double cscale = std::max(1.0, f.c.lpNorm<Eigen::Infinity>());
  r.pres = std::max(f.p ? r.rp.lpNorm<Eigen::Infinity>() / bscale : 0.0,
                    f.m ? r.rg.lpNorm<Eigen::Infinity>() / hscale : 0.0);
  r.dres = r.rd.lpNorm<Eigen::Infinity>() / cscale;
  r.gap = f.m ? s.dot(z) : 0.0;
  r.pobj = f.c.dot(v) + v.dot(qv) + f.obj_const;
  r.relgap = r.gap / std::max(1.0, std::abs(r.pobj));
  return r;
}

} // namespace

ConicSolution solve_conic(const ConicProgram& p, const SolveOptions& opts) {
  auto pv = p.param_values();
  return solve_conic(p, pv, opts);
}

ConicSolution solve_conic(const ConicProgram& prog, std::span<const double> param_values,
                          const SolveOptions& opts) {
  if (!prog.frozen()) throw std::logic_error("solve_conic: program must be frozen");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  StandardForm f = compile(prog, param_values);
  ConeOps cone{f};
  ConicSolution out;
  out.point.assign(f.n, 0.0);
  out.row_duals.assign(prog.linear().size(), 0.0);
  out.soc_duals.assign(prog.soc().size(), {});

  auto finish = [&](SolveStatus st, const VectorXd& v, const VectorXd& y, const VectorXd& z,
                    int iters) {
    out.status = st;
    out.iterations = iters;
    for (int i = 0; i < f.n; ++i) out.point[i] = v(i);
    for (size_t i = 0; i < prog.linear().size(); ++i) {
      if (f.eq_of_row[i] >= 0) out.row_duals[i] = y(f.eq_of_row[i]);
      if (f.lp_of_row[i] >= 0) out.row_duals[i] = z(f.lp_of_row[i]);
    }
    for (size_t r = 0; r < prog.soc().size(); ++r) {
      const int d = f.soc_dims[r];
      out.soc_duals[r].assign(z.data() + f.soc_start[r], z.data() + f.soc_start[r] + d);
    }
    auto ev = prog.evaluate(out.point, param_values);
    out.objective = ev.objective;
    out.max_infeasibility = ev.max_infeasibility;
    out.wall_time_s = elapsed();
    return out;
  };

  // Equality-constrained QP special case: one KKT solve.
  if (f.m == 0) {
    KktSystem kkt(f);
    if (!kkt.factorize(nullptr)) {
      out.status = SolveStatus::InfeasiblePoint;
      return out;
    }
    VectorXd rhs(f.n + f.p);
    rhs.head(f.n) = -f.c;
    rhs.tail(f.p) = f.b;
    VectorXd sol;
    kkt.solve(rhs, sol);
    return finish(SolveStatus::Optimal, sol.head(f.n), sol.tail(f.p), VectorXd(), 1);
  }

  KktSystem kkt(f);
  if (!kkt.factorize(nullptr)) {
    out.status = SolveStatus::InfeasiblePoint;
    return out;
  }

  // ECOS-style initialization from two unit-scaling KKT solves.
  VectorXd v, y, z, s;
  {
    VectorXd rhs(f.n + f.p + f.m), sol;
    rhs.setZero();
    rhs.tail(f.m) = f.h;
    if (f.p > 0) rhs.segment(f.n, f.p) = f.b;
    kkt.solve(rhs, sol);
    v = sol.head(f.n);
    s = f.h - f.G * v;
    cone.bring_to_cone(s);

    rhs.setZero();
    rhs.head(f.n) = -f.c - 2.0 * (f.qdiag.array() * v.array()).matrix();
    kkt.solve(rhs, sol);
    y = f.p > 0 ? VectorXd(sol.segment(f.n, f.p)) : VectorXd();
    z = sol.tail(f.m);
    cone.bring_to_cone(z);
  }

  NTScaling nt(f);
  const double mdeg = cone.degree();
  int iter = 0;
  SolveStatus verdict = SolveStatus::IterationLimit;

  for (iter = 0; iter < opts.max_iterations; ++iter) {
    Residuals res = compute_residuals(f, v, y, z, s);
    const double mu = res.gap / mdeg;
    if (opts.trace) {
      fmt::print(*opts.trace, "conic iter={} pobj={:.9e} gap={:.3e} pres={:.3e} dres={:.3e}\n",
                 iter, res.pobj, res.gap, res.pres, res.dres);
    }
    if (res.pres <= opts.feas_tol && res.dres <= opts.opt_tol &&
        (res.gap <= opts.opt_tol || res.relgap <= opts.opt_tol)) {
      verdict = SolveStatus::Optimal;
      break;
    }
    // Primal infeasibility certificate: A'y + G'z ~ 0 with b'y + h'z < 0.
    {
      VectorXd cert = f.G.transpose() * z;
      if (f.p > 0) cert += f.A.transpose() * y;
      const double d = -((f.p ? f.b.dot(y) : 0.0) + f.h.dot(z));
      const double ynorm = std::max(1.0, std::max(f.p ? y.lpNorm<Eigen::Infinity>() : 0.0,
                                                  z.lpNorm<Eigen::Infinity>()));
      if (d > 1e-4 * ynorm && cert.lpNorm<Eigen::Infinity>() <= 1e-9 * ynorm &&
          res.pres > opts.feas_tol) {
        verdict = SolveStatus::Infeasible;
        break;
      }
    }
    if (res.pobj < -1e13) {
      verdict = SolveStatus::Unbounded;
      break;
    }
    if (elapsed() > opts.time_limit_s) {
      verdict = SolveStatus::TimeLimit;
      break;
    }

    if (!nt.update(s, z)) {
      verdict = SolveStatus::InfeasiblePoint;
      break;
    }
    VectorXd lambda = nt.apply(z); // = W z = W^{-T} s
    if (!kkt.factorize(&nt)) {
      verdict = SolveStatus::InfeasiblePoint;
      break;
    }

    auto solve_direction = [&](const VectorXd& rc) {
      // rc is the scaled complementarity rhs: lambda o (W dz + W^{-1} ds) = rc.
      const VectorXd w_rc = nt.apply(cone.div(lambda, rc));
      VectorXd rhs(f.n + f.p + f.m);
      rhs.head(f.n) = -res.rd;
      if (f.p > 0) rhs.segment(f.n, f.p) = -res.rp;
      rhs.tail(f.m) = -res.rg - w_rc;
      VectorXd sol;
      kkt.solve(rhs, sol);
      struct Dir {
        VectorXd dv, dy, dz, ds;
      } d;
      d.dv = sol.head(f.n);
      d.dy = f.p > 0 ? VectorXd(sol.segment(f.n, f.p)) : VectorXd();
      d.dz = sol.tail(f.m);
      d.ds = w_rc - nt.apply(nt.apply(d.dz));
      return d;
    };

    // Predictor.
    VectorXd rc_aff = -cone.prod(lambda, lambda);
    auto aff = solve_direction(rc_aff);
    double alpha_aff = std::min(cone.max_step(s, aff.ds, 1.0), cone.max_step(z, aff.dz, 1.0));
    const double mu_aff =
        (s + alpha_aff * aff.ds).dot(z + alpha_aff * aff.dz) / mdeg;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(1.0, std::max(1e-8, sigma));

    // Corrector with the Mehrotra term.
    VectorXd corr = cone.prod(nt.apply_inv(aff.ds), nt.apply(aff.dz));
    VectorXd rc = rc_aff - corr + sigma * mu * cone.identity();
    auto dir = solve_direction(rc);
    double alpha =
        0.99 * std::min(cone.max_step(s, dir.ds, 1.0 / 0.99), cone.max_step(z, dir.dz, 1.0 / 0.99));
    alpha = std::min(alpha, 1.0);
    if (alpha <= 1e-12) {
      verdict = res.pres <= opts.feas_tol ? SolveStatus::Feasible : SolveStatus::InfeasiblePoint;
      break;
    }

    v += alpha * dir.dv;
    if (f.p > 0) y += alpha * dir.dy;
    z += alpha * dir.dz;
    s += alpha * dir.ds;
  }

  if (verdict == SolveStatus::IterationLimit) {
    Residuals res = compute_residuals(f, v, y, z, s);
    if (res.pres <= opts.feas_tol) verdict = SolveStatus::Feasible;
  }
  return finish(verdict, v, y, z, iter);
}

std::vector<double> dual_point_from_solution(const DualProgram& dual, const ConicSolution& sol) {
  std::vector<double> point(dual.program.num_vars(), 0.0);
  for (size_t i = 0; i < dual.row_dual.size(); ++i) {
    if (dual.row_dual[i] >= 0) point[dual.row_dual[i]] = sol.row_duals[i];
  }
  for (size_t r = 0; r < dual.soc_dual_start.size(); ++r) {
    const auto& block = sol.soc_duals[r];
    for (size_t k = 0; k < block.size(); ++k) point[dual.soc_dual_start[r] + k] = block[k];
  }
  for (size_t k = 0; k < dual.quad_mirror_var.size(); ++k)
    point[dual.quad_mirror_var[k]] = sol.point[dual.quad_primal_var[k]];
  return point;
}

} // namespace stratbid
