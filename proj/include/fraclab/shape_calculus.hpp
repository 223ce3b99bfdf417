#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fraclab/assemble1d.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/spectrum.hpp"
#include "fraclab/transform.hpp"

namespace fraclab {

/// Values of u/delta^s on the nodes of a BoundaryQuadrature.
struct BoundaryDensity {
  std::vector<double> values;
  double max_magnitude = 0.0;
  double max_fit_residual = 0.0;  // 2-D extraction only
};

namespace detail {

/// Bilinear interpolation of nodal grid values, zero outside the grid polygon.
inline double grid2_interpolate(const DiscreteOperator& op, const Eigen::VectorXd& phi,
                                const Vec2& p) {
  const Grid2DGeometry& g = *op.geom2;
  const double fx = (p.x() - g.origin.x()) / g.h - 0.5;
  const double fy = (p.y() - g.origin.y()) / g.h - 0.5;
  const int ix = static_cast<int>(std::floor(fx)), iy = static_cast<int>(std::floor(fy));
  const double tx = fx - ix, ty = fy - iy;
  auto val = [&](int a, int b) {
    const int id = g.id_at(a, b);
    return id >= 0 ? phi[id] : 0.0;
  };
  return (1 - tx) * (1 - ty) * val(ix, iy) + tx * (1 - ty) * val(ix + 1, iy) +
         (1 - tx) * ty * val(ix, iy + 1) + tx * ty * val(ix + 1, iy + 1);
}

/// Fit phi ~ c tau^s along an inward ray by least squares in log variables.
inline std::pair<double, double> ray_density_fit(double s, const std::vector<double>& taus,
                                                 const std::vector<double>& vals) {
  double sum = 0.0;
  int n = 0;
  double sign = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (std::abs(vals[k]) < 1e-300) continue;
    if (sign == 0.0) sign = vals[k] > 0 ? 1.0 : -1.0;
    sum += std::log(std::abs(vals[k])) - s * std::log(taus[k]);
    ++n;
  }
  if (n == 0) return {0.0, 0.0};
  const double c = sign * std::exp(sum / n);
  double res = 0.0, mag = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const double fit = c * std::pow(taus[k], s);
    res += (vals[k] - fit) * (vals[k] - fit);
    mag = std::max(mag, std::abs(fit));
  }
  res = std::sqrt(res / taus.size());
  return {c, res};
}

}  // namespace detail

namespace detail {

/// interval boundary-kernel density from nodal values (grid collocation)
inline std::pair<double, double> grid1_kernel_density(const DiscreteOperator& op,
                                                      const Eigen::VectorXd& phi,
                                                      double lambda) {
  const double s = op.s;
  const double c = 0.5 * (op.domain.a + op.domain.b), e = 0.5 * (op.domain.b - op.domain.a);
  const double pref = std::pow(e, 2.0 * s) * lambda * std::pow(2.0, -s) /
                      (std::tgamma(s) * std::tgamma(1.0 + s)) / std::pow(e, s);
  double accb = 0.0, acca = 0.0;
  const int m = static_cast<int>(op.nodes1.size());
  for (int i = 0; i < m; ++i) {
    const double X = (op.nodes1[i] - c) / e;
    const double Xl = X - 0.5 * op.h / e, Xr = X + 0.5 * op.h / e;
    // singular endpoint factors integrated exactly over the cell
    accb += phi[i] * std::pow(1.0 + X, s) *
            (std::pow(1.0 - Xl, s) - std::pow(1.0 - Xr, s)) / s;
    acca += phi[i] * std::pow(1.0 - X, s) *
            (std::pow(1.0 + Xr, s) - std::pow(1.0 + Xl, s)) / s;
  }
  return {pref * acca, pref * accb};
}

/// disk boundary-kernel density: d(z) = lambda (kappa_2/s) 2^s R^s
///   int u(y) (1 - (|y-c|/R)^2)^s |z-y|^{-2} dy
inline double disk_kernel_density(const DiscreteOperator& op, const Eigen::VectorXd& phi,
                                  double lambda, const Vec2& z) {
  const double s = op.s;
  const Grid2DGeometry& g = *op.geom2;
  const double R = op.domain.cos_coeffs[0];
  const Vec2 c = op.domain.center;
  const double kappa = std::pow(2.0, -2.0 * s) / (kPi * std::tgamma(s) * std::tgamma(s));
  const double pref = lambda * (kappa / s) * std::pow(2.0, s) * std::pow(R, s);
  const double h = op.h, h2 = h * h;
  double acc = 0.0;
  for (int i = 0; i < op.size(); ++i) {
    const Vec2 y = g.nodes[i];
    const double dist2 = (z - y).squaredNorm();
    if (dist2 < 9.0 * h2) {
      const int sub = 8;
      double cell = 0.0;
      for (int a = 0; a < sub; ++a)
        for (int b = 0; b < sub; ++b) {
          const Vec2 yy = y + Vec2((a + 0.5) / sub - 0.5, (b + 0.5) / sub - 0.5) * h;
          const double w = 1.0 - (yy - c).squaredNorm() / (R * R);
          if (w <= 0.0) continue;
          cell += std::pow(w, s) / (z - yy).squaredNorm();
        }
      acc += phi[i] * cell * h2 / (sub * sub);
    } else {
      const double w = 1.0 - (y - c).squaredNorm() / (R * R);
      acc += phi[i] * std::pow(w, s) / dist2 * h2;
    }
  }
  return pref * acc;
}

}  // namespace detail

/// Extract u/delta^s at the boundary quadrature nodes. For the pure
/// fractional pencil the density is evaluated through the boundary kernel of
/// the ball Green function (exact on intervals, cellwise quadrature on
/// disks), which converges with the interior solution instead of the
/// near-boundary layer. Other star domains use the 4-point inward-ray fit at
/// distances {1.5h,...,4.5h}. `lambda` defaults to the Rayleigh quotient of
/// phi; callers working inside a cluster pass the cluster value to keep the
/// extraction exactly linear on the eigenspace.
inline BoundaryDensity boundary_density(const Eigen::VectorXd& phi, const DiscreteOperator& op,
                                        const BoundaryQuadrature& bq, double lambda = -1.0) {
  BoundaryDensity out;
  if (lambda < 0.0 && op.pure_fractional)
    lambda = phi.dot(op.stiffness * phi) / phi.dot(op.mass * phi);

  if (op.method == DiscreteOperator::Method::Spectral1D) {
    auto [da, db] = op.pure_fractional ? spectral_endpoint_density(op, phi, lambda)
                                       : spectral_endpoint_density_raw(op, phi);
    out.values = {da, db};
    out.max_magnitude = std::max(std::abs(da), std::abs(db));
    return out;
  }
  if (op.method == DiscreteOperator::Method::Grid1D && op.pure_fractional) {
    auto [da, db] = detail::grid1_kernel_density(op, phi, lambda);
    out.values = {da, db};
    out.max_magnitude = std::max(std::abs(da), std::abs(db));
    return out;
  }
  if (op.method == DiscreteOperator::Method::Grid2D && op.pure_fractional &&
      op.domain.is_disk()) {
    for (const Vec2& z : bq.nodes) {
      const double d = detail::disk_kernel_density(op, phi, lambda, z);
      out.values.push_back(d);
      out.max_magnitude = std::max(out.max_magnitude, std::abs(d));
    }
    return out;
  }

  // generic star domains: inward-ray fit
  const std::vector<double> taus = {1.5 * op.h, 2.5 * op.h, 3.5 * op.h, 4.5 * op.h};
  double worst_res = 0.0;
  if (op.method == DiscreteOperator::Method::Grid1D) {
    auto interp = [&](double x) {
      const double f = (x - (op.domain.a + 0.5 * op.h)) / op.h;
      const int i = static_cast<int>(std::floor(f));
      const double t = f - i;
      auto val = [&](int k) {
        return (k >= 0 && k < static_cast<int>(op.nodes1.size())) ? phi[k] : 0.0;
      };
      return (1 - t) * val(i) + t * val(i + 1);
    };
    for (const Vec2& node : bq.nodes) {
      const bool left = std::abs(node.x() - op.domain.a) < std::abs(node.x() - op.domain.b);
      std::vector<double> vals;
      for (double tau : taus) vals.push_back(interp(left ? op.domain.a + tau : op.domain.b - tau));
      auto [c, res] = detail::ray_density_fit(op.s, taus, vals);
      out.values.push_back(c);
      worst_res = std::max(worst_res, res);
      out.max_magnitude = std::max(out.max_magnitude, std::abs(c));
    }
  } else {
    for (std::size_t i = 0; i < bq.nodes.size(); ++i) {
      std::vector<double> vals;
      for (double tau : taus)
        vals.push_back(detail::grid2_interpolate(op, phi, bq.nodes[i] - tau * bq.normals[i]));
      auto [c, res] = detail::ray_density_fit(op.s, taus, vals);
      out.values.push_back(c);
      worst_res = std::max(worst_res, res);
      out.max_magnitude = std::max(out.max_magnitude, std::abs(c));
    }
  }
  out.max_fit_residual = worst_res;
  if (out.max_magnitude > 0.0 && worst_res > 0.2 * out.max_magnitude)
    throw FitUnstable("boundary density fit residual exceeds 20% of the density magnitude");
  return out;
}

/// Relative residual of Gamma(1+s)^2 * oint (u/delta^s)^2 (x-c).N dsigma
///                     = 2 s lambda * int u^2.
inline double pohozaev_residual(const Spectrum& sp, int k, const DiscreteOperator& op,
                                const BoundaryQuadrature& bq) {
  if (k < 0 || k >= sp.count()) throw Error("eigenvalue index out of range");
  const Eigen::VectorXd phi = sp.eigenvectors.col(k);
  const double lambda = sp.eigenvalues[k];
  const BoundaryDensity d = boundary_density(phi, op, bq, lambda);
  const Vec2 c = op.method == DiscreteOperator::Method::Grid2D
                     ? op.domain.center
                     : Vec2(0.5 * (op.domain.a + op.domain.b), 0.0);
  double lhs = 0.0;
  for (std::size_t i = 0; i < bq.nodes.size(); ++i)
    lhs += d.values[i] * d.values[i] * (bq.nodes[i] - c).dot(bq.normals[i]) * bq.weights[i];
  lhs *= gamma1s_squared(op.s);
  const double l2 = phi.dot(op.mass * phi);
  const double rhs = 2.0 * op.s * lambda * l2;
  return std::abs(lhs - rhs) / std::abs(rhs);
}

// ---------------------------------------------------------------------------
// splitting matrices
// ---------------------------------------------------------------------------

/// Cluster matrix of first-order eigenvalue derivatives. `matrix` holds the
/// mode's natural pairing; `slope_matrix()` applies the convention that turns
/// its eigenvalues into d/dt lambda at t = 0 (calibrated by the dilation and
/// constant-shift closures).
struct SplittingMatrix {
  enum class Mode { Domain, Potential, Weight };
  Mode mode = Mode::Domain;
  Eigen::MatrixXd matrix;
  Cluster cluster_ref;
  double lambda0 = 0.0;
  std::string normalization = "L2";

  Eigen::MatrixXd slope_matrix() const {
    if (mode == Mode::Weight) return -lambda0 * matrix;
    return matrix;
  }

  Eigen::VectorXd slope_eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(slope_matrix());
    return es.eigenvalues();
  }

  /// Frobenius distance to the nearest scalar matrix; zero iff non-splitting.
  double deviation() const {
    const int nu = static_cast<int>(matrix.rows());
    const double rho = matrix.trace() / nu;
    return (matrix - rho * Eigen::MatrixXd::Identity(nu, nu)).norm();
  }
};

namespace detail {

inline Eigen::MatrixXd cluster_vectors(const Spectrum& sp, const Cluster& cl) {
  return sp.eigenvectors.middleCols(cl.lo, cl.size());
}

}  // namespace detail

/// Domain mode (boundary route):
///   M_ij = -Gamma(1+s)^2 * oint d_i d_j (psi . N) dsigma,
/// eigenvalues of M are the one-sided slopes of the cluster's lambda-paths
/// under Omega_{t psi}.
inline SplittingMatrix splitting_matrix_domain(const Cluster& cl, const Spectrum& sp,
                                               const PerturbationField& psi,
                                               const DiscreteOperator& op,
                                               const BoundaryQuadrature& bq) {
  const int nu = cl.size();
  const Eigen::MatrixXd V = detail::cluster_vectors(sp, cl);
  std::vector<BoundaryDensity> dens;
  dens.reserve(nu);
  for (int i = 0; i < nu; ++i)
    dens.push_back(boundary_density(V.col(i), op, bq, cl.representative));

  std::vector<double> psin(bq.nodes.size());
  for (std::size_t q = 0; q < bq.nodes.size(); ++q) {
    if (op.method == DiscreteOperator::Method::Grid2D)
      psin[q] = psi.eval2(bq.nodes[q]).dot(bq.normals[q]);
    else
      psin[q] = psi.eval1(bq.nodes[q].x()) * bq.normals[q].x();
  }

  SplittingMatrix M;
  M.mode = SplittingMatrix::Mode::Domain;
  M.cluster_ref = cl;
  M.lambda0 = cl.representative;
  M.matrix.setZero(nu, nu);
  const double g2 = gamma1s_squared(op.s);
  for (int i = 0; i < nu; ++i)
    for (int j = i; j < nu; ++j) {
      double acc = 0.0;
      for (std::size_t q = 0; q < bq.nodes.size(); ++q)
        acc += dens[i].values[q] * dens[j].values[q] * psin[q] * bq.weights[q];
      M.matrix(i, j) = M.matrix(j, i) = -g2 * acc;
    }
  return M;
}

/// Potential mode: M_ij = int b phi_i phi_j; slopes of lambda under a + t b.
inline SplittingMatrix splitting_matrix_potential(const Cluster& cl, const Spectrum& sp,
                                                  const ScalarField& b,
                                                  const DiscreteOperator& op) {
  const Eigen::MatrixXd V = detail::cluster_vectors(sp, cl);
  SplittingMatrix M;
  M.mode = SplittingMatrix::Mode::Potential;
  M.cluster_ref = cl;
  M.lambda0 = cl.representative;
  if (op.method == DiscreteOperator::Method::Spectral1D) {
    M.matrix = V.transpose() * detail::spectral_weighted_mass(op, b) * V;
  } else {
    const std::vector<double> bv = op.sample_field(b);
    const double cell = op.method == DiscreteOperator::Method::Grid1D ? op.h : op.h * op.h;
    Eigen::VectorXd w(op.size());
    for (int i = 0; i < op.size(); ++i) w[i] = cell * bv[i];
    M.matrix = V.transpose() * w.asDiagonal() * V;
  }
  M.matrix = 0.5 * (M.matrix + M.matrix.transpose().eval());
  return M;
}

/// Weight mode: M_ij = int beta phi_i phi_j; slopes are eigenvalues of
/// -lambda0 M under alpha + t beta.
inline SplittingMatrix splitting_matrix_weight(const Cluster& cl, const Spectrum& sp,
                                               const ScalarField& beta,
                                               const DiscreteOperator& op) {
  SplittingMatrix M = splitting_matrix_potential(cl, sp, beta, op);
  M.mode = SplittingMatrix::Mode::Weight;
  return M;
}

/// Volumetric route: project the pencil derivative (derivative kernel and
/// J-weighted mass derivative) onto the cluster. Must agree with the boundary
/// route.
inline SplittingMatrix derivative_via_transformed_form(const Cluster& cl, const Spectrum& sp,
                                                       const DiscreteOperator& base,
                                                       const PerturbationField& psi) {
  const Eigen::MatrixXd V = detail::cluster_vectors(sp, cl);
  const Eigen::MatrixXd Kdot = assemble_derivative_kernel(base, psi);
  const Eigen::MatrixXd Mdot = mass_derivative(base, psi);
  SplittingMatrix M;
  M.mode = SplittingMatrix::Mode::Domain;
  M.cluster_ref = cl;
  M.lambda0 = cl.representative;
  M.matrix = V.transpose() * (Kdot - cl.representative * Mdot) * V;
  M.matrix = 0.5 * (M.matrix + M.matrix.transpose().eval());
  return M;
}

}  // namespace fraclab
