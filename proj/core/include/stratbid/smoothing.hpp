#pragma once

#include <Eigen/Dense>

namespace stratbid::smoothing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Kind { CHKS, Kanzow };

/// Chen-Harker-Kanzow-Smale residual for one cone pair x = (x0, xbar),
/// y = (y0, ybar):
///   r = x - eps * (F(psi1/eps) u1 + F(psi2/eps) u2)
///   F(a)   = (sqrt(a^2 + 4) + a) / 2
///   psi_n  = x0 - y0 + (-1)^n ||xbar - ybar||
///   u_n    = (1/2, (-1)^n (xbar - ybar) / (2 ||xbar - ybar||))
/// Scalar pairs collapse to x0 - eps * F((x0 - y0)/eps); any root satisfies
/// x0 y0 = eps^2 with x0, y0 > 0.
VectorXd chks_residual(const VectorXd& x, const VectorXd& y, double eps);

/// Kanzow (Fischer-Burmeister variant) residual:
///   r = x + y - (sqrt(psi1) u1 + sqrt(psi2) u2)
///   psi_n = ||x||^2 + ||y||^2 + 2 eps^2 + 2 (-1)^n ||x0 xbar + y0 ybar||
///   u_n   = (1/2, (-1)^n (x0 xbar + y0 ybar) / (2 ||x0 xbar + y0 ybar||))
/// Scalar pairs collapse to x0 + y0 - sqrt(x0^2 + y0^2 + 2 eps^2).
VectorXd kanzow_residual(const VectorXd& x, const VectorXd& y, double eps);

VectorXd residual(Kind kind, const VectorXd& x, const VectorXd& y, double eps);

struct Jacobians {
  MatrixXd dx; // d residual / d x
  MatrixXd dy; // d residual / d y
};

/// Analytic Jacobians of the residuals.  At degenerate directions (the
/// normalized tail direction is 0/0) the fixed canonical direction
/// (first tail coordinate) is substituted; the residual value does not
/// depend on that choice.
Jacobians jacobian(Kind kind, const VectorXd& x, const VectorXd& y, double eps);

} // namespace stratbid::smoothing
