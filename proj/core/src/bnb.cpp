#include "stratbid/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace stratbid {

namespace {

constexpr double kIntTol = 1e-6;

NlpSolution relax_solve(const ReducedProblem& r, std::span<const double> start,
                        const SolveOptions& opts, const BoundOverrides& ov) {
  if (is_conic_representable(r)) {
    ConicProgram p = to_conic(r, ov);
    ConicSolution cs = solve_conic(p, opts);
    NlpSolution out;
    out.status = cs.status;
    out.point = cs.point;
    out.objective = cs.point.empty() ? 0.0 : r.objective.eval(cs.point);
    out.max_infeasibility = cs.max_infeasibility;
    out.iterations = cs.iterations;
    out.wall_time_s = cs.wall_time_s;
    return out;
  }
  SolveOptions o = opts;
  o.multistart_count = std::max(1, opts.multistart_count / 4);
  return multistart(r, start, o, ov);
}

int most_fractional(const ReducedProblem& r, const std::vector<double>& point) {
  int pick = -1;
  double best = kIntTol;
  for (VarId v : r.integer_vars) {
    const double frac = std::abs(point[v] - std::round(point[v]));
    if (frac > best) {
      best = frac;
      pick = v;
    }
  }
  return pick;
}

} // namespace

BnbSolution branch_and_bound(const ReducedProblem& r, std::span<const double> start,
                             const SolveOptions& opts, bool exhaustive) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (r.integer_vars.empty()) {
    BnbSolution out;
    out.best = solve_reduced(r, start, opts);
    out.nodes = 1;
    out.proven = out.best.status == SolveStatus::Optimal;
    return out;
  }

  BoundOverrides base(r.vars.size());
  for (size_t i = 0; i < r.vars.size(); ++i) base[i] = {r.vars[i].lb, r.vars[i].ub};

  BnbSolution out;
  bool have_incumbent = false;

  if (exhaustive) {
    const size_t k = r.integer_vars.size();
    if (k > 20) throw std::invalid_argument("exhaustive enumeration limited to 20 binaries");
    const uint64_t total = uint64_t(1) << k;
    for (uint64_t mask = 0; mask < total; ++mask) {
      BoundOverrides ov = base;
      for (size_t b = 0; b < k; ++b) {
        const double val = (mask >> b) & 1 ? 1.0 : 0.0;
        ov[r.integer_vars[b]] = {val, val};
      }
      NlpSolution sol = relax_solve(r, start, opts, ov);
      ++out.nodes;
      if (sol.ok() && (!have_incumbent || sol.objective > out.best.objective)) {
        out.best = sol;
        have_incumbent = true;
      }
      if (elapsed() > opts.time_limit_s) break;
    }
    out.proven = out.nodes == static_cast<long>(total);
    out.mip_gap_pct = out.proven ? 0.0 : 100.0;
    if (!have_incumbent) out.best.status = SolveStatus::InfeasiblePoint;
    return out;
  }

  struct Node {
    double bound;
    long id;
    BoundOverrides ov;
    std::vector<double> point;
    bool operator<(const Node& other) const {
      if (bound != other.bound) return bound < other.bound; // max-heap on bound
      return id > other.id;
    }
  };

  std::priority_queue<Node> open;
  long next_id = 0;

  NlpSolution root = relax_solve(r, start, opts, base);
  ++out.nodes;
  if (!root.ok()) {
    out.best = root;
    out.mip_gap_pct = 100.0;
    return out;
  }
  open.push(Node{root.objective, next_id++, base, root.point});

  double best_bound = root.objective;
  while (!open.empty()) {
    if (elapsed() > opts.time_limit_s) {
      out.best.status = have_incumbent ? out.best.status : SolveStatus::TimeLimit;
      best_bound = std::max(best_bound, open.top().bound);
      break;
    }
    Node node = open.top();
    open.pop();
    best_bound = node.bound;
    if (have_incumbent && node.bound <= out.best.objective + 1e-9 * std::max(1.0, std::abs(out.best.objective)))
      break; // best-first: nothing better remains

    const int branch_var = most_fractional(r, node.point);
    if (branch_var < 0) {
      // integral relaxation solution
      if (!have_incumbent || node.bound > out.best.objective) {
        NlpSolution sol;
        sol.status = SolveStatus::Optimal;
        sol.point = node.point;
        sol.objective = node.bound;
        sol.max_infeasibility = reduced_infeasibility(r, node.point, node.ov);
        out.best = sol;
        have_incumbent = true;
      }
      continue;
    }
    for (int side = 0; side < 2; ++side) {
      BoundOverrides ov = node.ov;
      const double val = side == 0 ? std::floor(node.point[branch_var] + kIntTol)
                                   : std::ceil(node.point[branch_var] - kIntTol);
      ov[branch_var] = {val, val};
      NlpSolution sol = relax_solve(r, node.point, opts, ov);
      ++out.nodes;
      if (!sol.ok()) continue;
      if (have_incumbent && sol.objective <= out.best.objective) continue;
      if (most_fractional(r, sol.point) < 0) {
        if (!have_incumbent || sol.objective > out.best.objective) {
          out.best = sol;
          have_incumbent = true;
        }
      } else {
        open.push(Node{sol.objective, next_id++, std::move(ov), sol.point});
      }
    }
  }

  if (open.empty()) best_bound = have_incumbent ? out.best.objective : best_bound;
  if (have_incumbent) {
    out.mip_gap_pct =
        (best_bound - out.best.objective) / std::max(1.0, std::abs(out.best.objective)) * 100.0;
    out.proven = out.mip_gap_pct <= 1e-6;
  } else {
    out.best.status = SolveStatus::InfeasiblePoint;
    out.mip_gap_pct = 100.0;
  }
  return out;
}

} // namespace stratbid
