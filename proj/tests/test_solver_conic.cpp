#include <cmath>
#include <random>

#include "doctest.h"
#include "stratbid/solver.hpp"

using namespace stratbid;

TEST_CASE("textbook LP: min x s.t. x >= 1") {
  ConicProgram p;
  VarId x = p.add_variable("x", 1.0, kInf);
  p.set_objective_linear(AffExpr::variable(x));
  p.freeze();
  auto sol = solve_conic(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.point[x] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
  // bound row dual = 1
  REQUIRE(sol.row_duals.size() == 1);
  CHECK(sol.row_duals[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("norm minimization: min x0 s.t. ||(3,4)|| <= x0") {
  ConicProgram p;
  VarId x0 = p.add_variable("x0");
  std::vector<AffExpr> comps{AffExpr::variable(x0), AffExpr(3.0), AffExpr(4.0)};
  p.add_soc("norm", comps);
  p.set_objective_linear(AffExpr::variable(x0));
  p.freeze();
  auto sol = solve_conic(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("SOCP: min x0 s.t. ||xbar|| <= x0, xbar = c has optimum ||c||") {
  ConicProgram p;
  VarId x0 = p.add_variable("x0");
  VarId x1 = p.add_variable("x1", 1.5, 1.5);
  VarId x2 = p.add_variable("x2", -2.0, -2.0);
  std::vector<AffExpr> comps{AffExpr::variable(x0), AffExpr::variable(x1),
                             AffExpr::variable(x2)};
  p.add_soc("norm", comps);
  p.set_objective_linear(AffExpr::variable(x0));
  p.freeze();
  auto sol = solve_conic(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(std::hypot(1.5, 2.0)).epsilon(1e-7));
}

TEST_CASE("infeasible LP gets a certificate") {
  ConicProgram q;
  VarId y = q.add_variable("y");
  AffExpr ge1 = AffExpr::variable(y, -1.0);
  ge1.add_const(1.0); // 1 - y <= 0 : y >= 1
  q.add_linear("ge", ge1, Rel::Le);
  AffExpr le0 = AffExpr::variable(y); // y <= 0
  q.add_linear("le", le0, Rel::Le);
  q.set_objective_linear(AffExpr::variable(y));
  q.freeze();
  auto sol = solve_conic(q);
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("equality-constrained QP solves in one shot") {
  // min x^2 + y^2 s.t. x + y = 2 -> x = y = 1
  ConicProgram p;
  VarId x = p.add_variable("x");
  VarId y = p.add_variable("y");
  AffExpr row = AffExpr::variable(x) + AffExpr::variable(y);
  row.add_const(-2.0);
  p.add_linear("sum", row, Rel::Eq);
  p.add_objective_quadratic(x, 1.0);
  p.add_objective_quadratic(y, 1.0);
  p.freeze();
  auto sol = solve_conic(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.point[x] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.point[y] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("QP with bounds and dual extraction") {
  // min x^2 - 2x s.t. x <= 0.5: optimum at bound, multiplier 1.
  ConicProgram p;
  VarId x = p.add_variable("x", -kInf, 0.5);
  p.set_objective_linear(AffExpr::variable(x, -2.0));
  p.add_objective_quadratic(x, 1.0);
  p.freeze();
  auto sol = solve_conic(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.point[x] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sol.row_duals[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("parameters shift the optimum") {
  // min x s.t. x >= p, with p = 3.
  ConicProgram p;
  VarId x = p.add_variable("x");
  ParamId load = p.add_parameter("load", 3.0);
  AffExpr row = AffExpr::variable(x, -1.0);
  row.add_param(load, 1.0);
  p.add_linear("ge", row, Rel::Le);
  p.set_objective_linear(AffExpr::variable(x));
  p.freeze();
  auto sol = solve_conic(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-7));
  p.set_param_value(load, 5.0);
  sol = solve_conic(p);
  CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("random solvable programs close the duality gap") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.2, 1.5);
  std::uniform_int_distribution<int> nvars(2, 7), nles(1, 4), dims(2, 4);

  int solved = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = nvars(rng);
    ConicProgram p;
    std::vector<double> v0(n);
    for (int i = 0; i < n; ++i) {
      v0[i] = unif(rng);
      p.add_variable("v" + std::to_string(i), -5.0, 5.0); // keeps it bounded
    }
    const int m = nles(rng);
    for (int r = 0; r < m; ++r) {
      AffExpr e;
      for (int i = 0; i < n; ++i) e.add_var(i, unif(rng));
      e.add_const(-e.eval(v0, {}) - pos(rng));
      p.add_linear("le" + std::to_string(r), e, Rel::Le);
    }
    {
      const int d = dims(rng);
      std::vector<AffExpr> comps(d);
      double tail2 = 0.0;
      for (int k = 1; k < d; ++k) {
        for (int i = 0; i < n; ++i) comps[k].add_var(i, 0.5 * unif(rng));
        const double val = comps[k].eval(v0, {});
        tail2 += val * val;
      }
      comps[0] = AffExpr(std::sqrt(tail2) + pos(rng));
      p.add_soc("cone", comps);
    }
    AffExpr cost;
    for (int i = 0; i < n; ++i) cost.add_var(i, unif(rng));
    p.set_objective_linear(cost);
    for (int i = 0; i < n; ++i)
      if (unif(rng) > 0.4) p.add_objective_quadratic(i, pos(rng));
    p.freeze();

    auto [dual, pairing] = dualize(p);
    auto sol = solve_conic(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    ++solved;
    CHECK(sol.max_infeasibility <= 1e-7);

    // |omega_p - omega_d| small at the reported primal/dual pair.
    auto dpt = dual_point_from_solution(dual, sol);
    auto de = dual.program.evaluate(dpt, {});
    CHECK(de.max_infeasibility <= 1e-6);
    const double od = dual.dual_objective(dpt, {});
    CHECK(std::abs(sol.objective - od) <= 1e-7 * std::max(1.0, std::abs(sol.objective)));
  }
  CHECK(solved == 50);
}

TEST_CASE("dual of the dual of an LP returns the primal value") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.2, 1.5);
  std::uniform_int_distribution<int> nvars(2, 5), nles(1, 3);

  for (int trial = 0; trial < 20; ++trial) {
    const int n = nvars(rng);
    ConicProgram p;
    std::vector<double> v0(n);
    for (int i = 0; i < n; ++i) {
      v0[i] = unif(rng);
      p.add_variable("v" + std::to_string(i), -4.0, 4.0);
    }
    for (int r = 0; r < nles(rng); ++r) {
      AffExpr e;
      for (int i = 0; i < n; ++i) e.add_var(i, unif(rng));
      e.add_const(-e.eval(v0, {}) - pos(rng));
      p.add_linear("le" + std::to_string(r), e, Rel::Le);
    }
    AffExpr cost;
    for (int i = 0; i < n; ++i) cost.add_var(i, unif(rng));
    p.set_objective_linear(cost);
    p.freeze();

    auto primal_sol = solve_conic(p);
    REQUIRE(primal_sol.status == SolveStatus::Optimal);

    auto [dual, pairing1] = dualize(p);
    (void)pairing1;
    auto dual_sol = solve_conic(dual.program);
    REQUIRE(dual_sol.status == SolveStatus::Optimal);
    // stored dual program minimizes -omega_d
    CHECK(-dual_sol.objective ==
          doctest::Approx(primal_sol.objective).epsilon(1e-7));

    auto [bidual, pairing2] = dualize(dual.program);
    (void)pairing2;
    auto bidual_sol = solve_conic(bidual.program);
    REQUIRE(bidual_sol.status == SolveStatus::Optimal);
    // and the dual of the dual recovers the primal optimum
    CHECK(-bidual_sol.objective ==
          doctest::Approx(-primal_sol.objective).epsilon(1e-7));
  }
}
