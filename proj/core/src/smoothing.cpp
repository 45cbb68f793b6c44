#include "stratbid/smoothing.hpp"

#include <cmath>
#include <stdexcept>

namespace stratbid::smoothing {

namespace {

constexpr double kDegenerate = 1e-150;

double chks_f(double a) { return (std::sqrt(a * a + 4.0) + a) / 2.0; }
double chks_fp(double a) { return (a / std::sqrt(a * a + 4.0) + 1.0) / 2.0; }

void check_pair(const VectorXd& x, const VectorXd& y, double eps) {
  if (x.size() != y.size()) throw std::invalid_argument("cone pair dimension mismatch");
  if (x.size() < 1) throw std::invalid_argument("empty cone vector");
  if (eps < 0.0) throw std::invalid_argument("negative smoothing parameter");
}

// Normalized tail direction with the canonical fallback at 0/0.
VectorXd direction(const VectorXd& d, double nu) {
  VectorXd n = VectorXd::Zero(d.size());
  if (d.size() == 0) return n;
  if (nu > kDegenerate) {
    n = d / nu;
  } else {
    n(0) = 1.0;
  }
  return n;
}

} // namespace

VectorXd chks_residual(const VectorXd& x, const VectorXd& y, double eps) {
  check_pair(x, y, eps);
  const int m = static_cast<int>(x.size()) - 1;
  if (m == 0) {
    VectorXd r(1);
    r(0) = x(0) - eps * chks_f((x(0) - y(0)) / eps);
    return r;
  }
  const VectorXd d = x.tail(m) - y.tail(m);
  const double nu = d.norm();
  const VectorXd nhat = direction(d, nu);

  VectorXd r = x;
  for (int n = 1; n <= 2; ++n) {
    const double sn = (n == 1) ? -1.0 : 1.0;
    const double psi = x(0) - y(0) + sn * nu;
    const double f = eps * chks_f(psi / eps);
    r(0) -= f / 2.0;
    r.tail(m) -= (f * sn / 2.0) * nhat;
  }
  return r;
}

VectorXd kanzow_residual(const VectorXd& x, const VectorXd& y, double eps) {
  check_pair(x, y, eps);
  const int m = static_cast<int>(x.size()) - 1;
  const double s2 = x.squaredNorm() + y.squaredNorm() + 2.0 * eps * eps;
  if (m == 0) {
    VectorXd r(1);
    r(0) = x(0) + y(0) - std::sqrt(s2);
    return r;
  }
  const VectorXd mix = x(0) * x.tail(m) + y(0) * y.tail(m);
  const double nu = mix.norm();
  const VectorXd nhat = direction(mix, nu);

  VectorXd r = x + y;
  for (int n = 1; n <= 2; ++n) {
    const double sn = (n == 1) ? -1.0 : 1.0;
    const double g = std::sqrt(std::max(0.0, s2 + 2.0 * sn * nu));
    r(0) -= g / 2.0;
    r.tail(m) -= (g * sn / 2.0) * nhat;
  }
  return r;
}

VectorXd residual(Kind kind, const VectorXd& x, const VectorXd& y, double eps) {
  return kind == Kind::CHKS ? chks_residual(x, y, eps) : kanzow_residual(x, y, eps);
}

namespace {

Jacobians chks_jacobian(const VectorXd& x, const VectorXd& y, double eps) {
  const int dim = static_cast<int>(x.size());
  const int m = dim - 1;
  Jacobians J{MatrixXd::Identity(dim, dim), MatrixXd::Zero(dim, dim)};
  if (m == 0) {
    const double fp = chks_fp((x(0) - y(0)) / eps);
    J.dx(0, 0) = 1.0 - fp;
    J.dy(0, 0) = fp;
    return J;
  }
  const VectorXd d = x.tail(m) - y.tail(m);
  const double nu = d.norm();
  const VectorXd nhat = direction(d, nu);
  const MatrixXd proj = MatrixXd::Identity(m, m) - nhat * nhat.transpose();

  const double psi1 = x(0) - y(0) - nu;
  const double psi2 = x(0) - y(0) + nu;
  const double f1 = eps * chks_f(psi1 / eps);
  const double f2 = eps * chks_f(psi2 / eps);
  const double fp1 = chks_fp(psi1 / eps);
  const double fp2 = chks_fp(psi2 / eps);

  // r = x - Phi(x - y): dx = I - Phi', dy = Phi'.
  MatrixXd phi(dim, dim);
  phi(0, 0) = (fp1 + fp2) / 2.0;
  phi.block(0, 1, 1, m) = ((fp2 - fp1) / 2.0) * nhat.transpose();
  phi.block(1, 0, m, 1) = ((fp2 - fp1) / 2.0) * nhat;
  const double tang = (nu > kDegenerate) ? (f2 - f1) / (2.0 * nu) : chks_fp((x(0) - y(0)) / eps);
  phi.block(1, 1, m, m) =
      ((fp1 + fp2) / 2.0) * nhat * nhat.transpose() + tang * proj;
  J.dx = MatrixXd::Identity(dim, dim) - phi;
  J.dy = phi;
  return J;
}

// One-sided Jacobian block of the Kanzow residual with respect to the pair
// member (a0, abar); the other member enters through psi and the mixed
// direction only.
void kanzow_block(MatrixXd& out, const VectorXd& a, double nu,
                  const VectorXd& nhat, double g1, double g2) {
  const int dim = static_cast<int>(a.size());
  const int m = dim - 1;
  out = MatrixXd::Identity(dim, dim);
  const MatrixXd proj = MatrixXd::Identity(m, m) - nhat * nhat.transpose();
  const double a0 = a(0);
  const VectorXd abar = a.tail(m);
  const double nni = nhat.dot(abar); // d nu / d a0
  const double g[2] = {g1, g2};
  for (int n = 1; n <= 2; ++n) {
    const double sn = (n == 1) ? -1.0 : 1.0;
    const double gn = g[n - 1];
    // head row
    out(0, 0) -= (a0 + sn * nni) / (2.0 * gn);
    out.block(0, 1, 1, m) -= (abar.transpose() + sn * a0 * nhat.transpose()) / (2.0 * gn);
    // tail rows: d(g_n)*u_n tail + g_n * d(u_n tail)
    out.block(1, 0, m, 1) -= (sn * (a0 + sn * nni) / (2.0 * gn)) * nhat;
    out.block(1, 1, m, m) -= (sn / (2.0 * gn)) * nhat * (abar.transpose() + sn * a0 * nhat.transpose());
  }
  const double tang = (nu > kDegenerate)
                          ? (g2 - g1) / (2.0 * nu)
                          : 1.0 / std::max(g1, kDegenerate);
  out.block(1, 0, m, 1) -= tang * (proj * abar);
  out.block(1, 1, m, m) -= (tang * a0) * proj;
}

Jacobians kanzow_jacobian(const VectorXd& x, const VectorXd& y, double eps) {
  const int dim = static_cast<int>(x.size());
  const int m = dim - 1;
  Jacobians J{MatrixXd::Zero(dim, dim), MatrixXd::Zero(dim, dim)};
  const double s2 = x.squaredNorm() + y.squaredNorm() + 2.0 * eps * eps;
  if (m == 0) {
    const double g = std::sqrt(s2);
    J.dx(0, 0) = 1.0 - x(0) / g;
    J.dy(0, 0) = 1.0 - y(0) / g;
    return J;
  }
  const VectorXd mix = x(0) * x.tail(m) + y(0) * y.tail(m);
  const double nu = mix.norm();
  const VectorXd nhat = direction(mix, nu);
  const double g1 = std::sqrt(std::max(kDegenerate, s2 - 2.0 * nu));
  const double g2 = std::sqrt(s2 + 2.0 * nu);
  kanzow_block(J.dx, x, nu, nhat, g1, g2);
  kanzow_block(J.dy, y, nu, nhat, g1, g2);
  return J;
}

} // namespace

Jacobians jacobian(Kind kind, const VectorXd& x, const VectorXd& y, double eps) {
  check_pair(x, y, eps);
  return kind == Kind::CHKS ? chks_jacobian(x, y, eps) : kanzow_jacobian(x, y, eps);
}

} // namespace stratbid::smoothing
