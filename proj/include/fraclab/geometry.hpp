#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/util.hpp"

namespace fraclab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// ---------------------------------------------------------------------------
// smooth cutoff machinery
// ---------------------------------------------------------------------------

namespace detail {

inline double bump_f(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }
inline double bump_fp(double u) {
  return u > 0.0 ? std::exp(-1.0 / u) / (u * u) : 0.0;
}

/// C-infinity step: 0 for u<=0, 1 for u>=1.
inline double smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double A = bump_f(u), B = bump_f(1.0 - u);
  return A / (A + B);
}

inline double smoothstep_deriv(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double A = bump_f(u), B = bump_f(1.0 - u);
  const double denom = (A + B) * (A + B);
  return (bump_fp(u) * B + A * bump_fp(1.0 - u)) / denom;
}

inline double op_norm2(const Mat2& m) {
  Eigen::JacobiSVD<Mat2> svd(m);
  return svd.singularValues()(0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Domain
// ---------------------------------------------------------------------------

/// Computational domain: an interval (a,b) or a star-shaped planar region
/// r(theta) = sum_k cos_coeffs[k] cos(k theta) + sin_coeffs[k] sin(k theta)
/// around `center` (sin_coeffs[0] is inert).
struct Domain {
  enum class Kind { Interval, Star2d };
  Kind kind = Kind::Interval;

  double a = -1.0, b = 1.0;

  Vec2 center{0.0, 0.0};
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;

  int dim() const { return kind == Kind::Interval ? 1 : 2; }
  int order() const { return static_cast<int>(cos_coeffs.size()) - 1; }

  static Domain interval(double a, double b) {
    if (!(a < b)) throw Error("interval requires a < b");
    Domain d;
    d.kind = Kind::Interval;
    d.a = a;
    d.b = b;
    return d;
  }

  static Domain star(Vec2 center, std::vector<double> cosc, std::vector<double> sinc) {
    Domain d;
    d.kind = Kind::Star2d;
    d.center = center;
    d.cos_coeffs = std::move(cosc);
    d.sin_coeffs = std::move(sinc);
    d.sin_coeffs.resize(d.cos_coeffs.size(), 0.0);
    if (d.min_radius(4096) <= 0.0) throw NotStarShaped("radius series is not positive");
    return d;
  }

  static Domain disk(double radius, Vec2 center = Vec2::Zero()) {
    return star(center, {radius}, {0.0});
  }

  double radius(double theta) const {
    double r = 0.0;
    for (std::size_t k = 0; k < cos_coeffs.size(); ++k)
      r += cos_coeffs[k] * std::cos(k * theta) + sin_coeffs[k] * std::sin(k * theta);
    return r;
  }

  double radius_deriv(double theta) const {
    double r = 0.0;
    for (std::size_t k = 1; k < cos_coeffs.size(); ++k)
      r += k * (-cos_coeffs[k] * std::sin(k * theta) + sin_coeffs[k] * std::cos(k * theta));
    return r;
  }

  double radius_second(double theta) const {
    double r = 0.0;
    for (std::size_t k = 1; k < cos_coeffs.size(); ++k)
      r -= k * k * (cos_coeffs[k] * std::cos(k * theta) + sin_coeffs[k] * std::sin(k * theta));
    return r;
  }

  double min_radius(int samples = 1024) const {
    double m = std::numeric_limits<double>::max();
    for (int i = 0; i < samples; ++i) m = std::min(m, radius(2.0 * kPi * i / samples));
    return m;
  }

  double max_radius(int samples = 1024) const {
    double m = 0.0;
    for (int i = 0; i < samples; ++i) m = std::max(m, radius(2.0 * kPi * i / samples));
    return m;
  }

  Vec2 boundary_point(double theta) const {
    const double r = radius(theta);
    return center + r * Vec2(std::cos(theta), std::sin(theta));
  }

  /// Unit outward normal of the star boundary at angle theta.
  Vec2 outward_normal(double theta) const {
    const double r = radius(theta), rp = radius_deriv(theta);
    const double c = std::cos(theta), s = std::sin(theta);
    Vec2 v = r * Vec2(c, s) + rp * Vec2(s, -c);
    return v / v.norm();
  }

  /// Surface measure factor sqrt(r^2 + r'^2) at angle theta.
  double boundary_speed(double theta) const {
    const double r = radius(theta), rp = radius_deriv(theta);
    return std::sqrt(r * r + rp * rp);
  }

  bool contains(const Vec2& x) const {
    const Vec2 d = x - center;
    const double dist = d.norm();
    if (dist == 0.0) return true;
    return dist < radius(std::atan2(d.y(), d.x()));
  }

  bool contains1d(double x) const { return x > a && x < b; }

  /// star2d with no angular harmonics (an exact disk)
  bool is_disk(double tol = 1e-13) const {
    if (kind != Kind::Star2d || cos_coeffs.empty()) return false;
    for (std::size_t k = 1; k < cos_coeffs.size(); ++k)
      if (std::abs(cos_coeffs[k]) > tol || std::abs(sin_coeffs[k]) > tol) return false;
    return cos_coeffs[0] > 0.0;
  }
};

/// dist(x, complement of the domain); zero on the boundary and outside.
inline double boundary_distance(const Domain& d, double x) {
  if (d.kind != Domain::Kind::Interval) throw Error("scalar point needs an interval domain");
  return std::max(0.0, std::min(x - d.a, d.b - x));
}

inline double boundary_distance(const Domain& d, const Vec2& x) {
  if (d.kind != Domain::Kind::Star2d) throw Error("planar point needs a star2d domain");
  if (!d.contains(x)) return 0.0;
  // coarse scan, then golden-section refinement around the best brackets
  const int K = 512;
  auto sqdist = [&](double theta) { return (x - d.boundary_point(theta)).squaredNorm(); };
  double best = std::numeric_limits<double>::max();
  int besti = 0;
  for (int i = 0; i < K; ++i) {
    const double f = sqdist(2.0 * kPi * i / K);
    if (f < best) {
      best = f;
      besti = i;
    }
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  auto refine = [&](double lo, double hi) {
    double c = hi - gr * (hi - lo), e = lo + gr * (hi - lo);
    double fc = sqdist(c), fe = sqdist(e);
    for (int it = 0; it < 80; ++it) {
      if (fc < fe) {
        hi = e;
        e = c;
        fe = fc;
        c = hi - gr * (hi - lo);
        fc = sqdist(c);
      } else {
        lo = c;
        c = e;
        fc = fe;
        e = lo + gr * (hi - lo);
        fe = sqdist(e);
      }
    }
    return std::min(fc, fe);
  };
  const double h = 2.0 * kPi / K;
  double t0 = 2.0 * kPi * besti / K;
  best = std::min(best, refine(t0 - h, t0 + h));
  return std::sqrt(best);
}

// ---------------------------------------------------------------------------
// PerturbationField
// ---------------------------------------------------------------------------

/// C^1 vector field with analytic Jacobian. Families:
///  - affine: x -> offset + linear * x (1-D and 2-D; dilation is linear = I)
///  - normal Fourier (2-D): psi(x) = g(theta) * eta(|x-c|/R(theta)) * N(theta),
///    g a trigonometric polynomial, eta a compactly supported radial profile
///    that equals 1 in a shell around the boundary
///  - windowed polynomial (1-D): poly(x) times a smooth compact window
/// The stored `amplitude` scales the whole field.
struct PerturbationField {
  enum class Family { Affine1D, Affine2D, NormalFourier, Poly1D };
  Family family = Family::Affine1D;
  double amplitude = 1.0;

  // affine
  double off1 = 0.0, lin1 = 0.0;
  Vec2 off2{0.0, 0.0};
  Mat2 lin2 = Mat2::Zero();

  // normal Fourier: boundary geometry snapshot + angular profile g
  Vec2 center{0.0, 0.0};
  std::vector<double> rad_cos, rad_sin;  // R(theta) series of the host domain
  std::vector<double> g_cos, g_sin;      // g(theta) series
  double rho_in0 = 0.6, rho_in1 = 0.85;  // inner fade of the radial profile
  double rho_out0 = 1.3, rho_out1 = 1.6;  // outer fade

  // windowed polynomial (1-D)
  std::vector<double> poly;  // psi(x) = sum poly[k] x^k inside the window
  double win_a = -1.0, win_b = 1.0;  // window is 1 on an inflated (a,b)

  double unit_c1_norm = 0.0;  // C^1 norm of the amplitude-1 field

  double c1_norm_bound() const { return std::abs(amplitude) * unit_c1_norm; }

  PerturbationField with_amplitude(double t) const {
    PerturbationField f = *this;
    f.amplitude = t;
    return f;
  }

  bool is_affine() const { return family == Family::Affine1D || family == Family::Affine2D; }

  // --- constructors ---

  static PerturbationField affine1d(double offset, double slope, double box_lo, double box_hi) {
    PerturbationField f;
    f.family = Family::Affine1D;
    f.off1 = offset;
    f.lin1 = slope;
    double m = 0.0;
    for (double x : {box_lo, box_hi}) m = std::max(m, std::abs(offset + slope * x));
    f.unit_c1_norm = std::max(m, std::abs(slope));
    return f;
  }

  static PerturbationField affine2d(const Vec2& offset, const Mat2& linear, const Vec2& box_lo,
                                    const Vec2& box_hi) {
    PerturbationField f;
    f.family = Family::Affine2D;
    f.off2 = offset;
    f.lin2 = linear;
    double m = 0.0;
    for (double x : {box_lo.x(), box_hi.x()})
      for (double y : {box_lo.y(), box_hi.y()})
        m = std::max(m, (offset + linear * Vec2(x, y)).norm());
    f.unit_c1_norm = std::max(m, detail::op_norm2(linear));
    return f;
  }

  static PerturbationField dilation1d(const Domain& d) {
    return affine1d(0.0, 1.0, d.a - 1.0, d.b + 1.0);
  }

  static PerturbationField dilation2d(const Domain& d) {
    const double R = d.max_radius();
    Vec2 lo = d.center - Vec2(2.0 * R, 2.0 * R), hi = d.center + Vec2(2.0 * R, 2.0 * R);
    Mat2 I = Mat2::Identity();
    return affine2d(Vec2::Zero(), I, lo, hi);
  }

  static PerturbationField normal_fourier(const Domain& d, std::vector<double> gcos,
                                          std::vector<double> gsin) {
    if (d.kind != Domain::Kind::Star2d) throw Error("normal field needs a star2d domain");
    PerturbationField f;
    f.family = Family::NormalFourier;
    f.center = d.center;
    f.rad_cos = d.cos_coeffs;
    f.rad_sin = d.sin_coeffs;
    f.g_cos = std::move(gcos);
    f.g_sin = std::move(gsin);
    f.g_sin.resize(f.g_cos.size(), 0.0);
    f.unit_c1_norm = f.sampled_unit_norm();
    return f;
  }

  static PerturbationField poly1d(const Domain& d, std::vector<double> coeffs) {
    if (d.kind != Domain::Kind::Interval) throw Error("poly1d field needs an interval domain");
    PerturbationField f;
    f.family = Family::Poly1D;
    f.poly = std::move(coeffs);
    f.win_a = d.a;
    f.win_b = d.b;
    f.unit_c1_norm = f.sampled_unit_norm();
    return f;
  }

  // --- evaluation (1-D) ---

  double eval1(double x) const {
    switch (family) {
      case Family::Affine1D:
        return amplitude * (off1 + lin1 * x);
      case Family::Poly1D: {
        auto [p, dp] = poly_value(x);
        (void)dp;
        return amplitude * p;
      }
      default:
        throw Error("field is not one-dimensional");
    }
  }

  double deriv1(double x) const {
    switch (family) {
      case Family::Affine1D:
        return amplitude * lin1;
      case Family::Poly1D: {
        auto [p, dp] = poly_value(x);
        (void)p;
        return amplitude * dp;
      }
      default:
        throw Error("field is not one-dimensional");
    }
  }

  // --- evaluation (2-D) ---

  Vec2 eval2(const Vec2& x) const {
    switch (family) {
      case Family::Affine2D:
        return amplitude * (off2 + lin2 * x);
      case Family::NormalFourier: {
        Vec2 v;
        normal_field(x, &v, nullptr);
        return amplitude * v;
      }
      default:
        throw Error("field is not two-dimensional");
    }
  }

  Mat2 jacobian2(const Vec2& x) const {
    switch (family) {
      case Family::Affine2D:
        return amplitude * lin2;
      case Family::NormalFourier: {
        Mat2 J;
        normal_field(x, nullptr, &J);
        return amplitude * J;
      }
      default:
        throw Error("field is not two-dimensional");
    }
  }

  double divergence(const Vec2& x) const { return jacobian2(x).trace(); }
  double divergence1(double x) const { return deriv1(x); }

 private:
  std::pair<double, double> poly_value(double x) const {
    // Horner for p and p'
    double p = 0.0, dp = 0.0;
    for (int k = static_cast<int>(poly.size()) - 1; k >= 0; --k) {
      dp = dp * x + p;
      p = p * x + poly[k];
    }
    const double L = win_b - win_a;
    const double u1 = (x - (win_a - 0.7 * L)) / (0.5 * L);
    const double u2 = ((win_b + 0.7 * L) - x) / (0.5 * L);
    const double w = detail::smoothstep(u1) * detail::smoothstep(u2);
    const double dw = detail::smoothstep_deriv(u1) / (0.5 * L) * detail::smoothstep(u2) -
                      detail::smoothstep(u1) * detail::smoothstep_deriv(u2) / (0.5 * L);
    return {p * w, dp * w + p * dw};
  }

  double radius_at(double theta, double* rp = nullptr, double* rpp = nullptr) const {
    double r = 0.0, d1 = 0.0, d2 = 0.0;
    for (std::size_t k = 0; k < rad_cos.size(); ++k) {
      const double c = std::cos(k * theta), s = std::sin(k * theta);
      r += rad_cos[k] * c + rad_sin[k] * s;
      d1 += k * (-rad_cos[k] * s + rad_sin[k] * c);
      d2 -= k * k * (rad_cos[k] * c + rad_sin[k] * s);
    }
    if (rp) *rp = d1;
    if (rpp) *rpp = d2;
    return r;
  }

  void g_at(double theta, double* g, double* gp) const {
    double v = 0.0, d = 0.0;
    for (std::size_t k = 0; k < g_cos.size(); ++k) {
      const double c = std::cos(k * theta), s = std::sin(k * theta);
      v += g_cos[k] * c + g_sin[k] * s;
      d += k * (-g_cos[k] * s + g_sin[k] * c);
    }
    *g = v;
    *gp = d;
  }

  double eta(double rho, double* dp) const {
    const double u1 = (rho - rho_in0) / (rho_in1 - rho_in0);
    const double u2 = (rho_out1 - rho) / (rho_out1 - rho_out0);
    const double s1 = detail::smoothstep(u1), s2 = detail::smoothstep(u2);
    if (dp)
      *dp = detail::smoothstep_deriv(u1) / (rho_in1 - rho_in0) * s2 -
            s1 * detail::smoothstep_deriv(u2) / (rho_out1 - rho_out0);
    return s1 * s2;
  }

  /// value and Jacobian of the amplitude-1 normal Fourier field
  void normal_field(const Vec2& x, Vec2* value, Mat2* jac) const {
    const Vec2 dx = x - center;
    const double dist = dx.norm();
    if (value) value->setZero();
    if (jac) jac->setZero();
    if (dist < 1e-13) return;
    const double theta = std::atan2(dx.y(), dx.x());
    double Rp, Rpp;
    const double R = radius_at(theta, &Rp, &Rpp);
    const double rho = dist / R;
    if (rho <= rho_in0 || rho >= rho_out1) return;

    const double c = std::cos(theta), s = std::sin(theta);
    const Vec2 u_hat(c, s), t_hat(-s, c);

    double etap;
    const double et = eta(rho, &etap);
    double g, gp;
    g_at(theta, &g, &gp);

    const Vec2 v = R * u_hat + Rp * Vec2(s, -c);
    const double vn = v.norm();
    const Vec2 n_hat = v / vn;

    if (value) *value = g * et * n_hat;
    if (!jac) return;

    const Vec2 grad_theta = t_hat / dist;
    const Vec2 grad_rho = u_hat / R - (Rp / (R * R)) * t_hat;

    const Vec2 vprime = 2.0 * Rp * Vec2(c, s) + R * Vec2(-s, c) + Rpp * Vec2(s, -c);
    const Vec2 n_prime = vprime / vn - v * (v.dot(vprime)) / (vn * vn * vn);

    *jac = (gp * et) * n_hat * grad_theta.transpose() +
           (g * etap) * n_hat * grad_rho.transpose() +
           (g * et) * n_prime * grad_theta.transpose();
  }

  double sampled_unit_norm() const {
    double m = 0.0;
    if (family == Family::NormalFourier) {
      const int nr = 40, nt = 128;
      for (int i = 0; i <= nr; ++i) {
        const double rho = rho_in0 - 0.05 + (rho_out1 - rho_in0 + 0.1) * i / nr;
        for (int j = 0; j < nt; ++j) {
          const double theta = 2.0 * kPi * j / nt;
          const double R = radius_at(theta);
          const Vec2 x = center + rho * R * Vec2(std::cos(theta), std::sin(theta));
          Vec2 v;
          Mat2 J;
          normal_field(x, &v, &J);
          m = std::max(m, std::max(v.norm(), detail::op_norm2(J)));
        }
      }
    } else if (family == Family::Poly1D) {
      const double L = win_b - win_a;
      const int n = 4096;
      for (int i = 0; i <= n; ++i) {
        const double x = (win_a - 0.7 * L) + (L * 2.4) * i / n;
        auto [p, dp] = poly_value(x);
        m = std::max(m, std::max(std::abs(p), std::abs(dp)));
      }
    }
    return 1.05 * m;
  }
};

/// det(I + Dpsi(x)), planar field.
inline double jacobian_determinant(const PerturbationField& psi, const Vec2& x) {
  return (Mat2::Identity() + psi.jacobian2(x)).determinant();
}

/// det(1 + psi'(x)), interval field.
inline double jacobian_determinant(const PerturbationField& psi, double x) {
  return 1.0 + psi.deriv1(x);
}

// ---------------------------------------------------------------------------
// apply_perturbation
// ---------------------------------------------------------------------------

/// (I + psi)(Omega), refit to the canonical representation. Star domains are
/// refit by least squares on 512 pushed boundary samples; the pushed boundary
/// must stay star-shaped about the original center.
inline Domain apply_perturbation(const Domain& d, const PerturbationField& psi,
                                 int refit_order = -1, int samples = 512) {
  if (psi.c1_norm_bound() >= 1.0) throw TooLarge("perturbation C1 norm bound must stay below 1");
  if (d.kind == Domain::Kind::Interval) {
    const double na = d.a + psi.eval1(d.a), nb = d.b + psi.eval1(d.b);
    if (!(na < nb)) throw NotStarShaped("perturbed interval collapsed");
    return Domain::interval(na, nb);
  }
  const int order = refit_order < 0 ? d.order() : refit_order;
  std::vector<double> ang(samples), rad(samples);
  for (int i = 0; i < samples; ++i) {
    const double theta = 2.0 * kPi * i / samples;
    const Vec2 p = d.boundary_point(theta);
    const Vec2 q = p + psi.eval2(p);
    const Vec2 rel = q - d.center;
    ang[i] = std::atan2(rel.y(), rel.x());
    rad[i] = rel.norm();
    if (rad[i] <= 0.0) throw NotStarShaped("pushed boundary hit the center");
  }
  // star-shape check: pushed angles must wind monotonically once
  for (int i = 0; i < samples; ++i) {
    double delta = ang[(i + 1) % samples] - ang[i];
    while (delta < -kPi) delta += 2.0 * kPi;
    while (delta > kPi) delta -= 2.0 * kPi;
    if (delta <= 0.0) throw NotStarShaped("pushed boundary is not star-shaped about the center");
  }
  const int ncoef = 2 * (order + 1);
  Eigen::MatrixXd A(samples, ncoef);
  Eigen::VectorXd rhs(samples);
  for (int i = 0; i < samples; ++i) {
    for (int k = 0; k <= order; ++k) {
      A(i, k) = std::cos(k * ang[i]);
      A(i, order + 1 + k) = std::sin(k * ang[i]);
    }
    rhs(i) = rad[i];
  }
  Eigen::VectorXd sol = (A.transpose() * A).ldlt().solve(A.transpose() * rhs);
  std::vector<double> cosc(order + 1), sinc(order + 1);
  for (int k = 0; k <= order; ++k) {
    cosc[k] = sol(k);
    sinc[k] = sol(order + 1 + k);
  }
  sinc[0] = 0.0;
  return Domain::star(d.center, std::move(cosc), std::move(sinc));
}

// ---------------------------------------------------------------------------
// BoundaryQuadrature
// ---------------------------------------------------------------------------

/// Boundary nodes with surface-measure weights and unit outward normals.
/// Intervals get their two endpoints; star domains a periodic trapezoid rule
/// in theta with the arclength factor folded into the weights.
struct BoundaryQuadrature {
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  std::vector<Vec2> normals;
  std::vector<double> thetas;  // star2d only

  double total_measure() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

inline BoundaryQuadrature boundary_quadrature(const Domain& d, int n = 512) {
  BoundaryQuadrature bq;
  if (d.kind == Domain::Kind::Interval) {
    bq.nodes = {Vec2(d.a, 0.0), Vec2(d.b, 0.0)};
    bq.weights = {1.0, 1.0};
    bq.normals = {Vec2(-1.0, 0.0), Vec2(1.0, 0.0)};
    return bq;
  }
  bq.nodes.resize(n);
  bq.weights.resize(n);
  bq.normals.resize(n);
  bq.thetas.resize(n);
  const double dtheta = 2.0 * kPi / n;
  for (int i = 0; i < n; ++i) {
    const double theta = dtheta * i;
    bq.thetas[i] = theta;
    bq.nodes[i] = d.boundary_point(theta);
    bq.normals[i] = d.outward_normal(theta);
    bq.weights[i] = d.boundary_speed(theta) * dtheta;
  }
  return bq;
}

// ---------------------------------------------------------------------------
// compose_maps
// ---------------------------------------------------------------------------

/// Composite F_L o ... o F_1 with F_l = I + psi_l, together with the certified
/// C^1 distance bounds between consecutive composites
///   ||F_{l} o ... - F_{l-1} o ...||_{C^1} <= ||psi_l|| prod_{j<l} (1 + ||psi_j||).
struct CompositeMap {
  std::vector<PerturbationField> fields;

  double apply1(double x) const {
    for (const auto& f : fields) x += f.eval1(x);
    return x;
  }

  Vec2 apply2(Vec2 x) const {
    for (const auto& f : fields) x += f.eval2(x);
    return x;
  }

  /// bound on ||F_l o ... - F_{l-1} o ...||_{C^1} for l = 1..L
  std::vector<double> consecutive_bounds() const {
    std::vector<double> out(fields.size());
    double prod = 1.0;
    for (std::size_t l = 0; l < fields.size(); ++l) {
      const double n = fields[l].c1_norm_bound();
      out[l] = n * prod;
      prod *= (1.0 + n);
    }
    return out;
  }

  double total_c1_bound() const {
    double s = 0.0;
    for (double b : consecutive_bounds()) s += b;
    return s;
  }

  /// Sampled C^1 distance of the composite to the identity (planar maps).
  double empirical_c1_distance(const Vec2& lo, const Vec2& hi, int n = 48) const {
    double m = 0.0;
    const double h = 1e-6;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const Vec2 x(lo.x() + (hi.x() - lo.x()) * i / n, lo.y() + (hi.y() - lo.y()) * j / n);
        m = std::max(m, (apply2(x) - x).norm());
        Mat2 J;
        for (int c = 0; c < 2; ++c) {
          Vec2 xp = x, xm = x;
          xp[c] += h;
          xm[c] -= h;
          J.col(c) = (apply2(xp) - apply2(xm)) / (2.0 * h);
        }
        m = std::max(m, detail::op_norm2(J - Mat2::Identity()));
      }
    return m;
  }
};

inline CompositeMap compose_maps(std::vector<PerturbationField> fields,
                                 const std::vector<double>* budgets = nullptr) {
  if (budgets) {
    for (std::size_t l = 0; l < fields.size(); ++l)
      if (fields[l].c1_norm_bound() > (*budgets)[l])
        throw BudgetExceeded("perturbation " + std::to_string(l + 1) + " exceeds its budget");
  }
  CompositeMap m;
  m.fields = std::move(fields);
  return m;
}

}  // namespace fraclab
