#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "fraclab/operators.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/util.hpp"

namespace fraclab {

// ---------------------------------------------------------------------------
// 2-D collocation on cell-centered nodes: ratio-corrected midpoint weights
// on near cells, midpoint on far cells, an equal-moment disk model for the
// singular own cell, and the Dirichlet exterior split into cells inside the
// per-node disk B(x_i, R_i) plus the exact (or angularly integrated) integral
// beyond it. One core assembles base, pulled-back, and derivative matrices so
// the three stay consistent entry by entry.
// ---------------------------------------------------------------------------

namespace detail {

/// exact/midpoint cell-integral ratios for lattice offsets up to 4 cells
struct PairRatios2D {
  static constexpr int kMax = 4;
  std::array<double, (kMax + 1) * (kMax + 1)> table{};

  double at(int dx, int dy) const {
    dx = std::abs(dx);
    dy = std::abs(dy);
    if (dx > kMax || dy > kMax) return 1.0;
    return table[dx * (kMax + 1) + dy];
  }
};

inline PairRatios2D pair_ratios_2d(double s) {
  PairRatios2D r;
  const int sub = 8;
  const double p = 2.0 + 2.0 * s;
  for (int dx = 0; dx <= PairRatios2D::kMax; ++dx)
    for (int dy = 0; dy <= PairRatios2D::kMax; ++dy) {
      if (dx == 0 && dy == 0) {
        r.table[0] = 1.0;
        continue;
      }
      double acc = 0.0;
      for (int a = 0; a < sub; ++a)
        for (int b = 0; b < sub; ++b) {
          const double ux = -0.5 + (a + 0.5) / sub, uy = -0.5 + (b + 0.5) / sub;
          acc += std::pow(Vec2(dx - ux, dy - uy).norm(), -p);
        }
      acc /= sub * sub;
      r.table[dx * (PairRatios2D::kMax + 1) + dy] =
          acc / std::pow(Vec2(dx, dy).norm(), -p);
    }
  return r;
}

/// int over the unit square of |u|^{-2s} du (polar closed reduction)
inline double unit_square_moment(double s) {
  const Quad1D q = gauss_legendre(64).mapped(0.0, 0.25 * kPi);
  double acc = 0.0;
  for (int i = 0; i < q.nodes.size(); ++i) {
    const double rho = 1.0 / (2.0 * std::cos(q.nodes[i]));
    acc += q.weights[i] * std::pow(rho, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
  }
  return 8.0 * acc;
}

/// (1/2pi) int |(I+B) u(theta)|^{-2-2s} dtheta, used by the affine far tail
inline double affine_angular_factor(const Mat2& B, double s, int n = 256) {
  double acc = 0.0;
  const Mat2 G = Mat2::Identity() + B;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * i / n;
    acc += std::pow((G * Vec2(std::cos(t), std::sin(t))).norm(), -2.0 - 2.0 * s);
  }
  return acc / n;
}

/// C int_{|y|>R} |y - delta|^{-2-2s} dy for |delta| < R (compact fields):
/// angular trapezoid + radial Gauss-Jacobi after r = R/v.
inline double offcenter_far_tail(double s, double R, double delta, double C) {
  if (delta == 0.0) return C * 2.0 * kPi * std::pow(R, -2.0 * s) / (2.0 * s);
  const int na = 64;
  const Quad1D q = gauss_jacobi(16, 0.0, 2.0 * s - 1.0);
  double acc = 0.0;
  for (int k = 0; k < q.nodes.size(); ++k) {
    const double v = 0.5 * (1.0 + q.nodes[k]);
    const double r = R / v;
    double ang = 0.0;
    for (int i = 0; i < na; ++i) {
      const double t = 2.0 * kPi * i / na;
      ang += std::pow(r * r + delta * delta - 2.0 * r * delta * std::cos(t), -1.0 - s);
    }
    ang *= 2.0 * kPi / na;
    const double phi = (R * R / (v * v * v)) * ang / std::pow(v, 2.0 * s - 1.0);
    acc += q.weights[k] * phi;
  }
  return C * acc * std::pow(2.0, -2.0 * s);
}

struct Field2DSamples {
  std::vector<Vec2> val;
  std::vector<double> det;  // det(I + Dpsi)
  std::vector<double> div;  // trace(Dpsi)
};

inline Field2DSamples sample_field2d(const std::vector<Vec2>& pts,
                                     const PerturbationField* psi, bool need_det) {
  Field2DSamples f;
  const std::size_t n = pts.size();
  f.val.assign(n, Vec2::Zero());
  f.det.assign(n, 1.0);
  f.div.assign(n, 0.0);
  if (!psi) return f;
  for (std::size_t i = 0; i < n; ++i) {
    f.val[i] = psi->eval2(pts[i]);
    const Mat2 J = psi->jacobian2(pts[i]);
    f.det[i] = (Mat2::Identity() + J).determinant();
    f.div[i] = J.trace();
    if (need_det && f.det[i] <= 0.0) throw TooLarge("perturbation folds the grid");
  }
  return f;
}

}  // namespace detail

/// Shared 2-D assembly; `psi == nullptr` gives the unperturbed operator and
/// `kernel_mode` assembles the analytic amplitude-derivative at 0 instead of
/// the transformed form itself.
inline Eigen::MatrixXd assemble_2d_matrix(const Grid2DGeometry& g, double s,
                                          const PerturbationField* psi, bool kernel_mode) {
  const int m = static_cast<int>(g.nodes.size());
  const double h = g.h, C = fractional_constant(2, s);
  const double p = 2.0 + 2.0 * s;
  const detail::PairRatios2D ratios = detail::pair_ratios_2d(s);
  const double I0 = detail::unit_square_moment(s);

  detail::Field2DSamples fn = detail::sample_field2d(g.nodes, psi, !kernel_mode);
  detail::Field2DSamples fe = detail::sample_field2d(g.ext_cells, psi, !kernel_mode);

  const bool affine = psi && psi->is_affine();
  double farQ = 1.0, far_trace = 0.0;
  Mat2 affine_lin = Mat2::Zero();
  if (affine) {
    affine_lin = psi->amplitude * psi->lin2;
    farQ = detail::affine_angular_factor(affine_lin, s);
    far_trace = affine_lin.trace();
  }
  const double affine_det = (Mat2::Identity() + affine_lin).determinant();

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  const double h2 = h * h, h4 = h2 * h2;

  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const Vec2 dx = g.nodes[i] - g.nodes[j];
      const double r = ratios.at(g.node_ij[i].x() - g.node_ij[j].x(),
                                 g.node_ij[i].y() - g.node_ij[j].y());
      double w;
      if (!kernel_mode) {
        const Vec2 d = dx + (fn.val[i] - fn.val[j]);
        w = r * C * h4 * fn.det[i] * fn.det[j] * std::pow(d.norm(), -p);
      } else {
        const double bracket =
            fn.div[i] + fn.div[j] - p * dx.dot(fn.val[i] - fn.val[j]) / dx.squaredNorm();
        w = r * C * h4 * bracket * std::pow(dx.norm(), -p);
      }
      A(i, i) += w;
      A(j, j) += w;
      A(i, j) -= w;
      A(j, i) -= w;
    }

    // singular own cell: equal-moment disk model driven by a 5-point Laplacian
    const double c2base = C * I0 * std::pow(h, -2.0 * s) / 4.0;
    double c2;
    if (!kernel_mode) {
      const double metric = 1.0 + 0.5 * fn.div[i];
      c2 = c2base * fn.det[i] * fn.det[i] * std::pow(metric, -p);
    } else {
      c2 = c2base * (1.0 - s) * fn.div[i];
    }
    A(i, i) += 4.0 * h2 * c2;
    const int ix = g.node_ij[i].x(), iy = g.node_ij[i].y();
    constexpr std::array<std::array<int, 2>, 4> kNb{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (const auto& nbo : kNb) {
      const int nb = g.id_at(ix + nbo[0], iy + nbo[1]);
      if (nb >= 0) A(i, nb) -= h2 * c2;
    }

    // Dirichlet exterior: cells inside B(x_i, R_i) plus the analytic far part
    const double Ri = g.r_geom + (g.nodes[i] - g.domain.center).norm();
    double cellsum = 0.0;
    for (std::size_t c = 0; c < g.ext_cells.size(); ++c) {
      const Vec2 dxc = g.nodes[i] - g.ext_cells[c];
      const double dist = dxc.norm();
      if (dist > Ri) continue;
      const double r = ratios.at(g.node_ij[i].x() - g.ext_ij[c].x(),
                                 g.node_ij[i].y() - g.ext_ij[c].y());
      if (!kernel_mode) {
        const Vec2 d = dxc + (fn.val[i] - fe.val[c]);
        cellsum += r * C * h2 * fe.det[c] * std::pow(d.norm(), -p);
      } else {
        const double bracket =
            fe.div[c] + fn.div[i] - p * dxc.dot(fn.val[i] - fe.val[c]) / (dist * dist);
        // div_i enters through the outer Jacobian factor handled below, so
        // only the eta-side terms belong to the cell sum here
        cellsum += r * C * h2 * (bracket - fn.div[i]) * std::pow(dist, -p);
      }
    }
    const double far0 = C * 2.0 * kPi * std::pow(Ri, -2.0 * s) / (2.0 * s);
    if (!kernel_mode) {
      double far;
      if (affine)
        far = C * affine_det * 2.0 * kPi * std::pow(Ri, -2.0 * s) / (2.0 * s) * farQ;
      else
        far = detail::offcenter_far_tail(s, Ri, fn.val[i].norm(), C);
      A(i, i) += h2 * fn.det[i] * (cellsum + far);
    } else {
      // d/dt [ h^2 J_i(t) (cellsum(t) + far(t)) ] at t = 0
      double cellsum0 = 0.0;
      for (std::size_t c = 0; c < g.ext_cells.size(); ++c) {
        const Vec2 dxc = g.nodes[i] - g.ext_cells[c];
        const double dist = dxc.norm();
        if (dist > Ri) continue;
        const double r = ratios.at(g.node_ij[i].x() - g.ext_ij[c].x(),
                                   g.node_ij[i].y() - g.ext_ij[c].y());
        cellsum0 += r * C * h2 * std::pow(dist, -p);
      }
      const double far_dot = affine ? -s * far_trace * far0 : 0.0;
      A(i, i) += h2 * (fn.div[i] * (cellsum0 + far0) + cellsum + far_dot);
    }
  }
  return 0.5 * (A + A.transpose().eval());
}

inline DiscreteOperator assemble_2d_grid(double s, double h, const Domain& d,
                                         int node_cap = 4000) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidOrder("s must lie in (0,1)");
  DiscreteOperator op;
  op.method = DiscreteOperator::Method::Grid2D;
  op.s = s;
  op.domain = d;
  op.geom2 = build_grid2d_geometry(d, h, node_cap);
  op.h = op.geom2->h;
  op.stiffness = assemble_2d_matrix(*op.geom2, s, nullptr, false);
  const int m = static_cast<int>(op.geom2->nodes.size());
  op.mass = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) op.mass(i, i) = h * h;
  return op;
}

}  // namespace fraclab
