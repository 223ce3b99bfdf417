#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

/// One-dimensional quadrature rule on a reference interval.
struct Quad1D {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  /// Affine image of a rule living on [-1,1].
  Quad1D mapped(double lo, double hi) const {
    Quad1D out;
    const double c = 0.5 * (lo + hi), e = 0.5 * (hi - lo);
    out.nodes = (nodes.array() * e + c).matrix();
    out.weights = weights * e;
    return out;
  }
};

/// Monic three-term recurrence coefficients for the Jacobi weight
/// (1-x)^a (1+x)^b on [-1,1]:  p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1},
/// beta_0 = mu_0 (total weight mass).
struct JacobiRecurrence {
  double a = 0.0, b = 0.0;
  std::vector<double> alpha;
  std::vector<double> beta;

  JacobiRecurrence(double a_, double b_, int n) : a(a_), b(b_) {
    alpha.resize(n);
    beta.resize(n);
    const double ab = a + b;
    beta[0] = std::pow(2.0, ab + 1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) /
              std::tgamma(ab + 2.0);
    if (n > 0) alpha[0] = (b - a) / (ab + 2.0);
    for (int k = 1; k < n; ++k) {
      const double t = 2.0 * k + ab;
      alpha[k] = (b * b - a * a) / (t * (t + 2.0));
      beta[k] = 4.0 * k * (k + a) * (k + b) * (k + ab) /
                (t * t * (t + 1.0) * (t - 1.0));
    }
  }

  /// Values of the first n orthonormal polynomials at x.
  void orthonormal_values(double x, Eigen::Ref<Eigen::VectorXd> out) const {
    const int n = static_cast<int>(out.size());
    if (n == 0) return;
    out[0] = 1.0 / std::sqrt(beta[0]);
    if (n == 1) return;
    out[1] = (x - alpha[0]) * out[0] / std::sqrt(beta[1]);
    for (int k = 1; k + 1 < n; ++k)
      out[k + 1] =
          ((x - alpha[k]) * out[k] - std::sqrt(beta[k]) * out[k - 1]) / std::sqrt(beta[k + 1]);
  }
};

/// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal recurrence
/// matrix, weights are mu_0 times the squared first eigenvector components.
inline Quad1D gauss_from_recurrence(const JacobiRecurrence& rec, int n) {
  if (n < 1) throw Error("gauss rule needs at least one node");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) J(k, k) = rec.alpha[k];
  for (int k = 1; k < n; ++k) {
    const double off = std::sqrt(rec.beta[k]);
    J(k, k - 1) = off;
    J(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Quad1D q;
  q.nodes = es.eigenvalues();
  q.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    q.weights[k] = rec.beta[0] * v0 * v0;
  }
  return q;
}

/// Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b, exact on degree <= 2n-1.
inline Quad1D gauss_jacobi(int n, double a, double b) {
  return gauss_from_recurrence(JacobiRecurrence(a, b, n), n);
}

inline Quad1D gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// Composite rule on [lo,hi] with panels geometrically graded towards `lo`
/// (ratio < 1 shrinks panels near lo). Used for endpoint-singular integrands.
inline Quad1D graded_panels(double lo, double hi, int panels, double ratio,
                            const Quad1D& base) {
  std::vector<double> edges(panels + 1);
  edges[0] = lo;
  edges[panels] = hi;
  double len = hi - lo;
  for (int p = panels - 1; p >= 1; --p) {
    len *= ratio;
    edges[p] = lo + len;
  }
  Quad1D out;
  const int m = static_cast<int>(base.nodes.size());
  out.nodes.resize(panels * m);
  out.weights.resize(panels * m);
  for (int p = 0; p < panels; ++p) {
    Quad1D piece = base.mapped(edges[p], edges[p + 1]);
    out.nodes.segment(p * m, m) = piece.nodes;
    out.weights.segment(p * m, m) = piece.weights;
  }
  return out;
}

}  // namespace fraclab
