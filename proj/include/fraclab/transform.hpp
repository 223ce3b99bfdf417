#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fraclab/assemble1d.hpp"
#include "fraclab/assemble2d.hpp"
#include "fraclab/operators.hpp"

namespace fraclab {

// ---------------------------------------------------------------------------
// pulled-back form, derivative kernel, and coefficient modifications
// ---------------------------------------------------------------------------

/// Assemble the transformed bilinear form on the unchanged reference nodes:
/// kernel |xi-eta+psi(xi)-psi(eta)|^{-(n+2s)} with Jacobian factors, mass
/// weighted by J_psi. The zero field reproduces `base` bit for bit.
inline DiscreteOperator assemble_transformed_form(const DiscreteOperator& base,
                                                  const PerturbationField& psi) {
  if (psi.c1_norm_bound() >= 1.0) throw TooLarge("perturbation C1 norm bound must stay below 1");
  DiscreteOperator op = base;
  if (base.method == DiscreteOperator::Method::Grid1D) {
    op = assemble_1d_core(base.s, base.h, base.domain, &psi);
    op.pure_fractional = psi.c1_norm_bound() == 0.0;
  } else if (base.method == DiscreteOperator::Method::Grid2D) {
    op.stiffness = assemble_2d_matrix(*base.geom2, base.s, &psi, false);
    const int m = base.size();
    op.mass = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      const Mat2 J = psi.jacobian2(base.geom2->nodes[i]);
      op.mass(i, i) = base.h * base.h * (Mat2::Identity() + J).determinant();
    }
    op.pure_fractional = psi.c1_norm_bound() == 0.0;
  } else {
    throw Error("transformed form is assembled on grid discretizations");
  }
  return op;
}

namespace detail {

/// In-out part of the 1-D derivative kernel: int over eta outside (a,b) of
/// K(xi,eta) d eta, closed where the field is affine or has left its window.
inline double spectral_kernel_tail(const DiscreteOperator& op, const PerturbationField& psi,
                                   double xi) {
  const double s = op.s, C = fractional_constant(1, s);
  const double a = op.domain.a, b = op.domain.b;
  if (psi.family == PerturbationField::Family::Affine1D) {
    const double lin = psi.amplitude * psi.lin1;
    return 0.5 * C * lin * (1.0 - 2.0 * s) *
           (std::pow(xi - a, -2.0 * s) + std::pow(b - xi, -2.0 * s)) / (2.0 * s);
  }
  // windowed field: numeric panels over the window overhang, analytic beyond
  const double L = psi.win_b - psi.win_a;
  const double Ml = psi.win_a - 0.7 * L, Mr = psi.win_b + 0.7 * L;
  const double pvx = psi.eval1(xi), pdx = psi.deriv1(xi);
  const Quad1D base = gauss_legendre(10);
  double acc = 0.0;
  auto K = [&](double eta) {
    const double d = xi - eta;
    return 0.5 * C *
           (pdx + psi.deriv1(eta) - (1.0 + 2.0 * s) * (pvx - psi.eval1(eta)) / d) *
           std::pow(std::abs(d), -1.0 - 2.0 * s);
  };
  {  // right overhang (b, Mr), graded towards b
    Quad1D q = graded_panels(0.0, Mr - b, 12, 0.55, base);
    for (int i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * K(b + q.nodes[i]);
    acc += 0.5 * C *
           (pdx * std::pow(Mr - xi, -2.0 * s) / (2.0 * s) + pvx * std::pow(Mr - xi, -1.0 - 2.0 * s));
  }
  {  // left overhang (Ml, a), graded towards a
    Quad1D q = graded_panels(0.0, a - Ml, 12, 0.55, base);
    for (int i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * K(a - q.nodes[i]);
    acc += 0.5 * C *
           (pdx * std::pow(xi - Ml, -2.0 * s) / (2.0 * s) - pvx * std::pow(xi - Ml, -1.0 - 2.0 * s));
  }
  return acc;
}

}  // namespace detail

/// Derivative kernel pairing for the 1-D spectral basis by graded quadrature
/// of the singular double integral (the volumetric route on the high-accuracy
/// discretization).
inline Eigen::MatrixXd spectral_derivative_kernel(const DiscreteOperator& op,
                                                  const PerturbationField& psi) {
  const double s = op.s, C = fractional_constant(1, s);
  const double a = op.domain.a, b = op.domain.b;
  const int N = op.N;
  const JacobiRecurrence rec(s, s, N + 1);
  const double c = 0.5 * (a + b), e = 0.5 * (b - a);

  auto basis_at = [&](double x, Eigen::VectorXd& out) {
    const double X = (x - c) / e;
    if (X <= -1.0 || X >= 1.0) {
      out.setZero();
      return;
    }
    rec.orthonormal_values(X, out);
    out *= std::pow(1.0 - X * X, s);
  };

  // outer rule: panels graded into both endpoints
  const Quad1D g10 = gauss_legendre(10);
  Quad1D xi_lo = graded_panels(a, c, 12, 0.6, g10);
  Quad1D xi_hi = graded_panels(0.0, c - a, 12, 0.6, g10);  // mirrored towards b
  std::vector<double> xs, xw;
  for (int i = 0; i < xi_lo.nodes.size(); ++i) {
    xs.push_back(xi_lo.nodes[i]);
    xw.push_back(xi_lo.weights[i]);
  }
  for (int i = 0; i < xi_hi.nodes.size(); ++i) {
    xs.push_back(b - xi_hi.nodes[i]);
    xw.push_back(xi_hi.weights[i]);
  }

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd uxi(N), ueta(N), diff(N);

  for (std::size_t ix = 0; ix < xs.size(); ++ix) {
    const double xi = xs[ix], wxi = xw[ix];
    basis_at(xi, uxi);
    const double pvx = psi.eval1(xi), pdx = psi.deriv1(xi);
    // in-in: eta = xi + tau, folded, tau graded into the diagonal
    Quad1D tq = graded_panels(0.0, b - xi, 16, 0.5, g10);
    for (int it = 0; it < tq.nodes.size(); ++it) {
      const double tau = tq.nodes[it];
      if (tau <= 0.0) continue;
      const double eta = xi + tau;
      basis_at(eta, ueta);
      const double bracket =
          pdx + psi.deriv1(eta) - (1.0 + 2.0 * s) * (pvx - psi.eval1(eta)) / (xi - eta);
      const double K = 0.5 * C * bracket * std::pow(tau, -1.0 - 2.0 * s);
      diff = uxi - ueta;
      M.noalias() += (2.0 * wxi * tq.weights[it] * K) * (diff * diff.transpose());
    }
    // in-out both sides
    const double T = detail::spectral_kernel_tail(op, psi, xi);
    M.noalias() += (2.0 * wxi * T) * (uxi * uxi.transpose());
  }
  return 0.5 * (M + M.transpose().eval());
}

/// Matrix of pairings of the first-variation kernel of the transformed form;
/// equals the amplitude-derivative at 0 of assemble_transformed_form.
inline Eigen::MatrixXd assemble_derivative_kernel(const DiscreteOperator& base,
                                                  const PerturbationField& psi) {
  switch (base.method) {
    case DiscreteOperator::Method::Grid1D:
      return derivative_kernel_1d(base, psi);
    case DiscreteOperator::Method::Grid2D:
      return assemble_2d_matrix(*base.geom2, base.s, &psi, true);
    case DiscreteOperator::Method::Spectral1D:
      return spectral_derivative_kernel(base, psi);
  }
  throw Error("unreachable");
}

/// Amplitude-derivative at 0 of the transformed mass (the J_psi weight).
inline Eigen::MatrixXd mass_derivative(const DiscreteOperator& base,
                                       const PerturbationField& psi) {
  const int m = base.size();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  if (base.method == DiscreteOperator::Method::Grid1D) {
    for (int i = 0; i < m; ++i) M(i, i) = base.h * psi.deriv1(base.nodes1[i]);
  } else if (base.method == DiscreteOperator::Method::Grid2D) {
    for (int i = 0; i < m; ++i)
      M(i, i) = base.h * base.h * psi.jacobian2(base.geom2->nodes[i]).trace();
  } else {
    M = detail::spectral_mass_derivative(base, psi);
  }
  return M;
}

// ---------------------------------------------------------------------------
// potential and weight modifications
// ---------------------------------------------------------------------------

/// stiffness += a-weighted L^2 pairing; IndefiniteForm if positivity is lost.
inline DiscreteOperator assemble_potential(const DiscreteOperator& base, const ScalarField& a) {
  DiscreteOperator out = base;
  out.pure_fractional = false;
  if (base.method == DiscreteOperator::Method::Spectral1D) {
    out.stiffness += detail::spectral_weighted_mass(base, a);
  } else {
    const std::vector<double> av = base.sample_field(a);
    const double cell =
        base.method == DiscreteOperator::Method::Grid1D ? base.h : base.h * base.h;
    for (int i = 0; i < base.size(); ++i) out.stiffness(i, i) += cell * av[i];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(out.stiffness);
  if (llt.info() != Eigen::Success)
    throw IndefiniteForm("potential term destroys positive definiteness");
  return out;
}

/// mass := alpha-weighted L^2 pairing; NonPositiveWeight unless alpha > 0.
inline DiscreteOperator assemble_weight(const DiscreteOperator& base, const ScalarField& alpha) {
  DiscreteOperator out = base;
  out.pure_fractional = false;
  if (base.method == DiscreteOperator::Method::Spectral1D) {
    out.mass = detail::spectral_weighted_mass(base, alpha);
    Eigen::LLT<Eigen::MatrixXd> llt(out.mass);
    if (llt.info() != Eigen::Success) throw NonPositiveWeight("weight is not positive");
  } else {
    const std::vector<double> av = base.sample_field(alpha);
    for (double v : av)
      if (!(v > 0.0)) throw NonPositiveWeight("weight must be positive on every node");
    const double cell =
        base.method == DiscreteOperator::Method::Grid1D ? base.h : base.h * base.h;
    out.mass = Eigen::MatrixXd::Zero(base.size(), base.size());
    for (int i = 0; i < base.size(); ++i) out.mass(i, i) = cell * av[i];
  }
  return out;
}

}  // namespace fraclab
