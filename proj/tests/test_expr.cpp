#include "doctest.h"
#include "stratbid/expr.hpp"

using namespace stratbid;

TEST_CASE("affine expressions merge and evaluate") {
  AffExpr e;
  e.add_var(2, 1.5);
  e.add_var(0, 2.0);
  e.add_var(2, 0.5);
  e.add_const(3.0);
  const double pt[] = {1.0, 0.0, 2.0};
  CHECK(e.eval(pt) == doctest::Approx(2.0 + 4.0 + 3.0));
  CHECK(e.vars().size() == 2);
  CHECK(e.vars()[0].id == 0);
  CHECK(e.max_var() == 2);
}

TEST_CASE("parameters evaluate separately") {
  AffExpr e = AffExpr::parameter(1, 4.0);
  e.add_var(0, 1.0);
  const double pt[] = {2.0};
  const double pv[] = {0.0, 0.25};
  CHECK(e.eval(pt, pv) == doctest::Approx(3.0));
  CHECK_THROWS(e.eval(pt));
}

TEST_CASE("quadratic expansion of affine products") {
  // (x0 + 2)(x1 - 1) = x0 x1 - x0 + 2 x1 - 2
  AffExpr a = AffExpr::variable(0);
  a.add_const(2.0);
  AffExpr b = AffExpr::variable(1);
  b.add_const(-1.0);
  QuadExpr q;
  q.add_bilinear(a, b);
  const double pt[] = {3.0, 5.0};
  CHECK(q.eval(pt) == doctest::Approx((3.0 + 2.0) * (5.0 - 1.0)));

  double grad[2] = {0, 0};
  q.add_gradient(pt, grad);
  CHECK(grad[0] == doctest::Approx(5.0 - 1.0));
  CHECK(grad[1] == doctest::Approx(3.0 + 2.0));
}

TEST_CASE("product terms merge symmetrically") {
  QuadExpr q;
  q.add_product(3, 1, 2.0);
  q.add_product(1, 3, -2.0);
  q.compact();
  CHECK(q.quad().empty());
}
