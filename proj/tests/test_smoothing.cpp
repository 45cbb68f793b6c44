#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "doctest.h"
#include "stratbid/smoothing.hpp"

using namespace stratbid::smoothing;
using Eigen::VectorXd;

namespace {

// Independent root finder for the scalar residual in y0 at fixed x0.
double bisect_root_y0(Kind kind, double x0, double eps) {
  auto f = [&](double y0) {
    VectorXd x(1), y(1);
    x(0) = x0;
    y(0) = y0;
    return residual(kind, x, y, eps)(0);
  };
  double lo = 0.0, hi = 1.0;
  while (f(hi) < 0.0) hi *= 2.0; // residual increases in y0
  while (f(lo) > 0.0) lo -= 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("scalar CHKS root satisfies the product law") {
  // eps = 0.1, x0 = 0.2 -> y0 = eps^2 / x0 = 0.05
  const double y0 = bisect_root_y0(Kind::CHKS, 0.2, 0.1);
  CHECK(y0 == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("scalar Kanzow root satisfies the product law") {
  const double y0 = bisect_root_y0(Kind::Kanzow, 0.2, 0.1);
  CHECK(y0 == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("CHKS with equal points and zero tail roots at x0 = eps") {
  VectorXd x(3), y(3);
  x << 1e-3, 0.0, 0.0;
  y = x;
  // F(0) = 1, residual head = x0 - eps
  VectorXd r = chks_residual(x, y, 1e-3);
  CHECK(r(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(r(1) == doctest::Approx(0.0));
  CHECK(r(2) == doctest::Approx(0.0));
}

TEST_CASE("CHKS scalar limit: strict complementarity as eps -> 0") {
  VectorXd x(1), y(1);
  x << 1.0;
  y << 0.0;
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    VectorXd r = chks_residual(x, y, eps);
    CHECK(std::abs(r(0)) < 2.0 * eps);
  }
}

TEST_CASE("Kanzow at the origin") {
  VectorXd x = VectorXd::Zero(3), y = VectorXd::Zero(3);
  VectorXd r = kanzow_residual(x, y, 1.0);
  CHECK(r(0) == doctest::Approx(-std::sqrt(2.0)));
  CHECK(r(1) == doctest::Approx(0.0));
  CHECK(r(2) == doctest::Approx(0.0));
}

TEST_CASE("Kanzow exactness at eps = 0 on strictly complementary boundary pairs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 2 + static_cast<int>(trial % 4);
    VectorXd tail(dim - 1);
    for (int i = 0; i < dim - 1; ++i) tail(i) = unif(rng);
    if (tail.norm() < 1e-3) continue;
    VectorXd x(dim);
    x(0) = tail.norm();
    x.tail(dim - 1) = tail;
    VectorXd y = VectorXd::Zero(dim);
    VectorXd r = kanzow_residual(x, y, 0.0);
    CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("product law for vector pairs at smoothed roots") {
  // At a CHKS root, x = eps (F1 u1 + F2 u2) pairs with y so that x.y = eps^2.
  // Build a root directly: pick y, solve x from the residual equation by
  // Newton on the 2-vector, then check the inner product.
  VectorXd y(3);
  y << 0.8, 0.3, -0.2;
  const double eps = 1e-2;
  VectorXd x(3);
  x << 1.0, 0.1, 0.1;
  for (int it = 0; it < 100; ++it) {
    VectorXd r = chks_residual(x, y, eps);
    auto J = jacobian(Kind::CHKS, x, y, eps);
    x -= J.dx.fullPivLu().solve(r);
    if (r.norm() < 1e-14) break;
  }
  CHECK(chks_residual(x, y, eps).norm() <= 1e-12);
  CHECK(x.dot(y) == doctest::Approx(eps * eps).epsilon(1e-8));
}

TEST_CASE("jacobians match central finite differences") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  for (Kind kind : {Kind::CHKS, Kind::Kanzow}) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int dim = 1 + trial % 5;
      VectorXd x(dim), y(dim);
      x(0) = pos(rng);
      y(0) = pos(rng);
      for (int i = 1; i < dim; ++i) {
        x(i) = 0.5 * unif(rng);
        y(i) = 0.5 * unif(rng);
      }
      const double eps = 0.1 * pos(rng);
      auto J = jacobian(kind, x, y, eps);
      const double h = 1e-6;
      for (int j = 0; j < dim; ++j) {
        VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        VectorXd col = (residual(kind, xp, y, eps) - residual(kind, xm, y, eps)) / (2 * h);
        const double denom = std::max(1.0, col.lpNorm<Eigen::Infinity>());
        worst = std::max(worst, (J.dx.col(j) - col).lpNorm<Eigen::Infinity>() / denom);
        VectorXd yp = y, ym = y;
        yp(j) += h;
        ym(j) -= h;
        col = (residual(kind, x, yp, eps) - residual(kind, x, ym, eps)) / (2 * h);
        worst = std::max(worst, (J.dy.col(j) - col).lpNorm<Eigen::Infinity>() / denom);
      }
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("Kanzow jacobians swap under argument swap") {
  VectorXd x(4), y(4);
  x << 1.2, 0.3, -0.1, 0.5;
  y << 0.9, -0.2, 0.4, 0.1;
  auto J1 = jacobian(Kind::Kanzow, x, y, 0.05);
  auto J2 = jacobian(Kind::Kanzow, y, x, 0.05);
  CHECK((J1.dx - J2.dy).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((J1.dy - J2.dx).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("residual decreases with eps on strictly complementary pairs") {
  VectorXd x(3), y(3);
  x << 1.0, 0.6, 0.8;
  y << 0.5, -0.3, -0.4; // anti-parallel boundary pair: x.y = 0.5 - 0.18 - 0.32 = 0
  REQUIRE(std::abs(x.dot(y)) < 1e-12);
  for (Kind kind : {Kind::CHKS, Kind::Kanzow}) {
    double prev = 1e100;
    for (double eps : {1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const double n = residual(kind, x, y, eps).norm();
      CHECK(n < prev);
      prev = n;
      CHECK(n <= 4.0 * eps * eps / 0.25); // C * eps^2 with a generous fitted C
    }
  }
}
