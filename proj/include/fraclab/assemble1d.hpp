#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fraclab/operators.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/util.hpp"

namespace fraclab {

// ---------------------------------------------------------------------------
// 1-D spectral basis: u_n(x) = (1-X^2)^s * p_n(X) with p_n the orthonormal
// Jacobi(s,s) polynomials and X the reference coordinate of the interval.
// The fractional Laplacian acts diagonally on this family inside the
// interval,
//     (-Delta)^s u_n = [Gamma(n+1+2s)/n!] * p_n      on (-1,1),
// which the test suite re-derives from the singular-integral definition by
// adaptive quadrature before anything downstream relies on it. Stiffness is
// therefore diagonal; mass entries are exact Gauss-Jacobi integrals of
// p_n p_m against (1-X^2)^{2s}.
// ---------------------------------------------------------------------------

/// Diagonal eigenvalue of the spectral basis on the reference interval.
inline double spectral_diag_eigenvalue(double s, int n) {
  return std::exp(std::lgamma(n + 1.0 + 2.0 * s) - std::lgamma(n + 1.0));
}

inline DiscreteOperator assemble_1d_spectral(double s, int N, const Domain& interval) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidOrder("s must lie in (0,1)");
  if (N < 2) throw InvalidOrder("basis size must be at least 2");
  if (interval.kind != Domain::Kind::Interval) throw Error("spectral basis needs an interval");
  DiscreteOperator op;
  op.method = DiscreteOperator::Method::Spectral1D;
  op.s = s;
  op.N = N;
  op.domain = interval;
  const double e = 0.5 * (interval.b - interval.a);

  op.stiffness = Eigen::MatrixXd::Zero(N, N);
  for (int n = 0; n < N; ++n)
    op.stiffness(n, n) = std::pow(e, 1.0 - 2.0 * s) * spectral_diag_eigenvalue(s, n);

  const JacobiRecurrence rec(s, s, N + 1);
  const Quad1D q = gauss_jacobi(N, 2.0 * s, 2.0 * s);
  Eigen::MatrixXd P(q.nodes.size(), N);
  Eigen::VectorXd vals(N);
  for (int i = 0; i < q.nodes.size(); ++i) {
    rec.orthonormal_values(q.nodes[i], vals);
    P.row(i) = vals;
  }
  op.mass = e * (P.transpose() * q.weights.asDiagonal() * P);
  op.mass = 0.5 * (op.mass + op.mass.transpose().eval());
  return op;
}

/// Values of the polynomial parts p_n at reference coordinate X.
inline Eigen::VectorXd spectral_poly_values(const DiscreteOperator& op, double X) {
  const JacobiRecurrence rec(op.s, op.s, op.N + 1);
  Eigen::VectorXd vals(op.N);
  rec.orthonormal_values(X, vals);
  return vals;
}

/// Pointwise value of a spectral-coefficient function (zero outside).
inline double spectral_eval(const DiscreteOperator& op, const Eigen::VectorXd& coeffs, double x) {
  const double c = 0.5 * (op.domain.a + op.domain.b), e = 0.5 * (op.domain.b - op.domain.a);
  const double X = (x - c) / e;
  if (X <= -1.0 || X >= 1.0) return 0.0;
  return std::pow(1.0 - X * X, op.s) * spectral_poly_values(op, X).dot(coeffs);
}

/// Endpoint values of the polynomial part scaled to u/delta^s; converges to
/// the true density only like N^{-4s}, kept for diagnostics.
inline std::pair<double, double> spectral_endpoint_density_raw(const DiscreteOperator& op,
                                                               const Eigen::VectorXd& coeffs) {
  const double e = 0.5 * (op.domain.b - op.domain.a);
  const double f = std::pow(2.0, op.s) / std::pow(e, op.s);
  const double da = f * spectral_poly_values(op, -1.0).dot(coeffs);
  const double db = f * spectral_poly_values(op, 1.0).dot(coeffs);
  return {da, db};
}

/// Boundary densities u/delta^s at the two endpoints {a, b} through the
/// boundary kernel of the interval: the ball Green function behaves like
/// G(x,y) ~ kappa/s (1-|X|^2)^s (1-|Y|^2)^s |X-Y|^{-n} at the boundary, so
/// for an eigenfunction u = lambda (-Delta)^{-s} u,
///   d(+-1) = lambda 2^{-s}/(Gamma(s)Gamma(1+s)) int p(Y)(1-+Y)^{2s-1}(1+-Y)^{2s} dY
/// in reference coordinates. The integrand is weight x polynomial, so the
/// Gauss-Jacobi rules evaluate it exactly; accuracy is then set by the
/// eigenpair itself, not by endpoint summation of the series.
inline std::pair<double, double> spectral_endpoint_density(const DiscreteOperator& op,
                                                           const Eigen::VectorXd& coeffs,
                                                           double lambda = -1.0) {
  const double s = op.s;
  const double e = 0.5 * (op.domain.b - op.domain.a);
  if (lambda < 0.0) {
    const double num = coeffs.dot(op.stiffness * coeffs);
    const double den = coeffs.dot(op.mass * coeffs);
    lambda = num / den;
  }
  const double lambda_ref = std::pow(e, 2.0 * s) * lambda;
  const double pref = lambda_ref * std::pow(2.0, -s) / (std::tgamma(s) * std::tgamma(1.0 + s));
  const Quad1D qb = gauss_jacobi(op.N + 8, 2.0 * s - 1.0, 2.0 * s);
  const Quad1D qa = gauss_jacobi(op.N + 8, 2.0 * s, 2.0 * s - 1.0);
  double accb = 0.0, acca = 0.0;
  for (int i = 0; i < qb.nodes.size(); ++i)
    accb += qb.weights[i] * spectral_poly_values(op, qb.nodes[i]).dot(coeffs);
  for (int i = 0; i < qa.nodes.size(); ++i)
    acca += qa.weights[i] * spectral_poly_values(op, qa.nodes[i]).dot(coeffs);
  const double scale = std::pow(e, -s);
  return {scale * pref * acca, scale * pref * accb};
}

namespace detail {

/// Weighted pairing int f u_n u_m for the spectral basis; exact for the mass
/// itself, extra quadrature nodes absorb a smooth coefficient.
inline Eigen::MatrixXd spectral_weighted_mass(const DiscreteOperator& op, const ScalarField& f) {
  if (f.kind == ScalarField::Kind::Constant) return f.value * op.mass;
  const double c = 0.5 * (op.domain.a + op.domain.b), e = 0.5 * (op.domain.b - op.domain.a);
  const JacobiRecurrence rec(op.s, op.s, op.N + 1);
  const Quad1D q = gauss_jacobi(op.N + 24, 2.0 * op.s, 2.0 * op.s);
  Eigen::MatrixXd P(q.nodes.size(), op.N);
  Eigen::VectorXd vals(op.N), w(q.nodes.size());
  for (int i = 0; i < q.nodes.size(); ++i) {
    rec.orthonormal_values(q.nodes[i], vals);
    P.row(i) = vals;
    w[i] = q.weights[i] * f.eval1(c + e * q.nodes[i]);
  }
  Eigen::MatrixXd M = e * (P.transpose() * w.asDiagonal() * P);
  return 0.5 * (M + M.transpose().eval());
}

/// int divpsi u_n u_m for the spectral basis.
inline Eigen::MatrixXd spectral_mass_derivative(const DiscreteOperator& op,
                                                const PerturbationField& psi) {
  const double c = 0.5 * (op.domain.a + op.domain.b), e = 0.5 * (op.domain.b - op.domain.a);
  const JacobiRecurrence rec(op.s, op.s, op.N + 1);
  const Quad1D q = gauss_jacobi(op.N + 24, 2.0 * op.s, 2.0 * op.s);
  Eigen::MatrixXd P(q.nodes.size(), op.N);
  Eigen::VectorXd vals(op.N), w(q.nodes.size());
  for (int i = 0; i < q.nodes.size(); ++i) {
    rec.orthonormal_values(q.nodes[i], vals);
    P.row(i) = vals;
    w[i] = q.weights[i] * psi.deriv1(c + e * q.nodes[i]);
  }
  Eigen::MatrixXd M = e * (P.transpose() * w.asDiagonal() * P);
  return 0.5 * (M + M.transpose().eval());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1-D uniform grid collocation: cell-centered nodes, exact cell integrals of
// the kernel for every interior pair (ratio-corrected midpoint weights), a
// quadratic model on the singular own cell, and the exact Dirichlet tail over
// the complement. The same routine assembles the pulled-back form of eq-type
// |xi - eta + psi(xi) - psi(eta)|^{-1-2s} with Jacobian factors; the zero
// field reproduces the base matrices bitwise.
// ---------------------------------------------------------------------------

namespace detail {

struct Grid1DData {
  double h = 0.0;
  std::vector<double> nodes;
};

inline Grid1DData make_grid1d(double s, double h, const Domain& interval) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidOrder("s must lie in (0,1)");
  if (interval.kind != Domain::Kind::Interval) throw Error("1-D grid needs an interval");
  const double len = interval.b - interval.a;
  const int m = static_cast<int>(std::llround(len / h));
  if (m < 8) throw GridTooCoarse("interval must hold at least 8 nodes");
  Grid1DData g;
  g.h = len / m;
  g.nodes.resize(m);
  for (int i = 0; i < m; ++i) g.nodes[i] = interval.a + (i + 0.5) * g.h;
  return g;
}

/// exact-cell/midpoint weight ratios r_k for pair distance k*h
inline std::vector<double> pair_ratios_1d(double s, int m) {
  std::vector<double> r(m, 1.0);
  for (int k = 1; k < m; ++k) {
    const double exact =
        (std::pow(k - 0.5, -2.0 * s) - std::pow(k + 0.5, -2.0 * s)) / (2.0 * s);
    r[k] = exact / std::pow(static_cast<double>(k), -1.0 - 2.0 * s);
  }
  return r;
}

}  // namespace detail

/// Shared 1-D assembly: `psi == nullptr` gives the unperturbed operator.
inline DiscreteOperator assemble_1d_core(double s, double h, const Domain& interval,
                                         const PerturbationField* psi) {
  const detail::Grid1DData g = detail::make_grid1d(s, h, interval);
  const int m = static_cast<int>(g.nodes.size());
  const double C = fractional_constant(1, s);
  const double hh = g.h;

  std::vector<double> pv(m, 0.0), pd(m, 0.0), J(m, 1.0);
  double psi_a = 0.0, psi_b = 0.0;
  if (psi) {
    for (int i = 0; i < m; ++i) {
      pv[i] = psi->eval1(g.nodes[i]);
      pd[i] = psi->deriv1(g.nodes[i]);
      J[i] = 1.0 + pd[i];
      if (J[i] <= 0.0) throw TooLarge("perturbation folds the grid");
    }
    psi_a = psi->eval1(interval.a);
    psi_b = psi->eval1(interval.b);
  }
  const double a_p = interval.a + psi_a, b_p = interval.b + psi_b;

  const std::vector<double> ratio = detail::pair_ratios_1d(s, m);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);

  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const double dx = (g.nodes[i] - g.nodes[j]) + (pv[i] - pv[j]);
      const double w =
          ratio[j - i] * C * hh * hh * J[i] * J[j] * std::pow(std::abs(dx), -1.0 - 2.0 * s);
      A(i, j) -= w;
      A(j, i) -= w;
      A(i, i) += w;
      A(j, j) += w;
    }
    // singular own cell: quadratic model, local metric (1+psi')^{1-2s}
    const double csing = C * std::pow(0.5 * hh, 2.0 - 2.0 * s) / ((2.0 - 2.0 * s) * hh * hh) *
                         std::pow(J[i], 1.0 - 2.0 * s);
    A(i, i) += 2.0 * hh * csing;
    if (i > 0) A(i, i - 1) -= hh * csing;
    if (i + 1 < m) A(i, i + 1) -= hh * csing;
    // exact exterior tail of the (pushed) interval seen from the pushed node
    const double z = g.nodes[i] + pv[i];
    const double tail =
        C * (std::pow(z - a_p, -2.0 * s) + std::pow(b_p - z, -2.0 * s)) / (2.0 * s);
    A(i, i) += hh * J[i] * tail;
  }
  A = 0.5 * (A + A.transpose().eval());

  DiscreteOperator op;
  op.method = DiscreteOperator::Method::Grid1D;
  op.s = s;
  op.domain = interval;
  op.h = hh;
  op.nodes1 = g.nodes;
  op.stiffness = std::move(A);
  op.mass = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) op.mass(i, i) = hh * J[i];
  return op;
}

inline DiscreteOperator assemble_1d_grid(double s, double h, const Domain& interval) {
  return assemble_1d_core(s, h, interval, nullptr);
}

/// Derivative of the transformed 1-D stiffness at amplitude 0, assembled from
/// the closed-form kernel (divergence terms plus the radial correction).
inline Eigen::MatrixXd derivative_kernel_1d(const DiscreteOperator& base,
                                            const PerturbationField& psi) {
  const int m = base.size();
  const double s = base.s, hh = base.h, C = fractional_constant(1, s);
  const Domain& interval = base.domain;
  std::vector<double> pv(m), pd(m);
  for (int i = 0; i < m; ++i) {
    pv[i] = psi.eval1(base.nodes1[i]);
    pd[i] = psi.deriv1(base.nodes1[i]);
  }
  const double psi_a = psi.eval1(interval.a), psi_b = psi.eval1(interval.b);
  const std::vector<double> ratio = detail::pair_ratios_1d(s, m);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const double dx = base.nodes1[i] - base.nodes1[j];
      const double bracket = pd[i] + pd[j] - (1.0 + 2.0 * s) * (pv[i] - pv[j]) / dx;
      const double w =
          ratio[j - i] * C * hh * hh * bracket * std::pow(std::abs(dx), -1.0 - 2.0 * s);
      K(i, j) -= w;
      K(j, i) -= w;
      K(i, i) += w;
      K(j, j) += w;
    }
    const double csing_dot = C * std::pow(0.5 * hh, 2.0 - 2.0 * s) /
                             ((2.0 - 2.0 * s) * hh * hh) * (1.0 - 2.0 * s) * pd[i];
    K(i, i) += 2.0 * hh * csing_dot;
    if (i > 0) K(i, i - 1) -= hh * csing_dot;
    if (i + 1 < m) K(i, i + 1) -= hh * csing_dot;

    const double xa = base.nodes1[i] - interval.a, xb = interval.b - base.nodes1[i];
    const double tail0 = C * (std::pow(xa, -2.0 * s) + std::pow(xb, -2.0 * s)) / (2.0 * s);
    const double tail_dot = -C * (std::pow(xa, -1.0 - 2.0 * s) * (pv[i] - psi_a) +
                                  std::pow(xb, -1.0 - 2.0 * s) * (psi_b - pv[i]));
    K(i, i) += hh * (pd[i] * tail0 + tail_dot);
  }
  return 0.5 * (K + K.transpose().eval());
}

}  // namespace fraclab
