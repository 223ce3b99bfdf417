#pragma once

// Test-side oracles, independent of the implementation paths they check:
// adaptive principal-value quadrature of the singular-integral definition of
// the fractional Laplacian, plus small helpers shared by the suites.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>

#include "fraclab/fraclab.hpp"

namespace oracle {

using boost::math::quadrature::gauss_kronrod;

/// (-Delta)^s u at x for u supported on (a,b), from the symmetric-difference
/// form C_{1,s} int_0^inf (2u(x) - u(x+t) - u(x-t)) t^{-1-2s} dt. Below t0 the
/// symmetric difference cancels catastrophically in doubles, so that piece is
/// replaced by its curvature value -u''(x) t0^{2-2s}/(2-2s) (the dropped term
/// is O(t0^{4-2s})); the rest is adaptive Gauss-Kronrod split at the kinks.
inline double fractional_laplacian_1d(const std::function<double(double)>& u, double s, double x,
                                      double a, double b) {
  const double C = fraclab::fractional_constant(1, s);
  const double t1 = std::min(x - a, b - x), t2 = std::max(x - a, b - x);
  auto sym = [&](double t) { return 2.0 * u(x) - u(x + t) - u(x - t); };

  const double t0 = 1e-4;
  const double d = 3e-4;
  const double upp = (u(x + d) - 2.0 * u(x) + u(x - d)) / (d * d);
  const double near = -upp * std::pow(t0, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);

  auto integrand = [&](double t) { return sym(t) * std::pow(t, -1.0 - 2.0 * s); };
  double err;
  const double part1 =
      gauss_kronrod<double, 15>::integrate(integrand, t0, t1, 14, 1e-11, &err);
  const double part2 =
      t2 > t1 ? gauss_kronrod<double, 15>::integrate(integrand, t1, t2, 14, 1e-11, &err) : 0.0;
  const double tail = 2.0 * u(x) * std::pow(t2, -2.0 * s) / (2.0 * s);
  return C * (near + part1 + part2 + tail);
}

}  // namespace oracle
