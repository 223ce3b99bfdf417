#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "fraclab/fraclab.hpp"

using namespace fraclab;

namespace {

Domain wobbly() { return Domain::star(Vec2(0, 0), {1.0, 0.0, 0.0, 0.2}, {0, 0, 0, 0}); }

}  // namespace

TEST_CASE("boundary distance on intervals and disks") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  REQUIRE(boundary_distance(iv, 0.0) == 1.0);
  REQUIRE(boundary_distance(iv, 1.5) == 0.0);
  REQUIRE(boundary_distance(iv, -1.0) == 0.0);

  const Domain disk = Domain::disk(1.0);
  REQUIRE(boundary_distance(disk, Vec2(0.5, 0.0)) == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE(boundary_distance(disk, Vec2(2.0, 0.0)) == 0.0);
}

TEST_CASE("star boundary distance agrees with dense boundary sampling") {
  const Domain d = wobbly();  // r = 1 + 0.2 cos(3 theta)
  const Vec2 x = d.center;
  double brute = 1e300;
  for (int i = 0; i < 10000; ++i)
    brute = std::min(brute, (x - d.boundary_point(2.0 * kPi * i / 10000)).norm());
  REQUIRE(boundary_distance(d, x) == Catch::Approx(brute).margin(1e-6));

  // interior points, against the same oracle
  for (const Vec2& p : {Vec2(0.3, 0.2), Vec2(-0.5, 0.4), Vec2(0.0, -0.8)}) {
    double b = 1e300;
    for (int i = 0; i < 10000; ++i)
      b = std::min(b, (p - d.boundary_point(2.0 * kPi * i / 10000)).norm());
    REQUIRE(boundary_distance(d, p) == Catch::Approx(b).margin(1e-6));
  }
}

TEST_CASE("apply_perturbation: identity, homothety, pushforward refit") {
  const Domain disk = Domain::disk(1.0);
  const Domain same = apply_perturbation(
      disk, PerturbationField::dilation2d(disk).with_amplitude(0.0));
  REQUIRE(same.cos_coeffs[0] == Catch::Approx(1.0).margin(1e-12));

  const Domain grown = apply_perturbation(
      disk, PerturbationField::dilation2d(disk).with_amplitude(0.1));
  REQUIRE(grown.cos_coeffs[0] == Catch::Approx(1.1).margin(1e-10));

  // cos(2 theta) normal field at t = 0.05: refit radius close to
  // 1 + 0.05 cos(2 theta) because N is radial on the circle and eta = 1 there
  const Domain bumpy = apply_perturbation(
      Domain::star(Vec2(0, 0), {1.0, 0, 0}, {0, 0, 0}),
      PerturbationField::normal_fourier(disk, {0, 0, 1}, {0, 0, 0}).with_amplitude(0.05));
  for (int i = 0; i < 1000; ++i) {
    const double th = 2.0 * kPi * i / 1000.0;
    REQUIRE(bumpy.radius(th) == Catch::Approx(1.0 + 0.05 * std::cos(2 * th)).margin(1e-4));
  }
}

TEST_CASE("perturbation gates: TooLarge and NotStarShaped") {
  const Domain disk = Domain::disk(1.0);
  REQUIRE_THROWS_AS(
      apply_perturbation(disk, PerturbationField::dilation2d(disk).with_amplitude(0.9)),
      TooLarge);
  // translating a small star domain past its minimal radius moves the center
  // outside the pushed region, so no star refit about the old center exists
  const Domain small = Domain::star(Vec2(0, 0), {0.6, 0.0, 0.2}, {0, 0, 0});
  const PerturbationField shift = PerturbationField::affine2d(
      Vec2(1, 0), Mat2::Zero(), Vec2(-1.6, -1.6), Vec2(1.6, 1.6));
  REQUIRE_THROWS_AS(apply_perturbation(small, shift.with_amplitude(0.85)), NotStarShaped);
}

TEST_CASE("jacobian determinant: identity, dilation, divergence expansion") {
  const Domain disk = Domain::disk(1.0);
  const PerturbationField zero = PerturbationField::dilation2d(disk).with_amplitude(0.0);
  REQUIRE(jacobian_determinant(zero, Vec2(0.3, 0.1)) == 1.0);

  const PerturbationField dil = PerturbationField::dilation2d(disk).with_amplitude(0.1);
  REQUIRE(jacobian_determinant(dil, Vec2(0.2, -0.4)) == Catch::Approx(1.21).epsilon(1e-12));

  // central difference of the eps-expansion recovers div psi to 1e-6, and
  // the one-sided remainder stays O(eps^2)
  const PerturbationField f = PerturbationField::normal_fourier(wobbly(), {0, 1, 0.3}, {0, 0.2, 0});
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-0.9, 0.9);
  for (int trial = 0; trial < 12; ++trial) {
    const Vec2 x(U(rng), U(rng));
    const double eps = 1e-4;
    const double Jp = jacobian_determinant(f.with_amplitude(eps), x);
    const double Jm = jacobian_determinant(f.with_amplitude(-eps), x);
    const double div = f.with_amplitude(1.0).divergence(x);
    REQUIRE(std::abs((Jp - Jm) / (2 * eps) - div) <= 1e-6);
    REQUIRE(std::abs(Jp - 1.0 - eps * div) <= 100.0 * eps * eps);
  }
}

TEST_CASE("analytic field Jacobian matches finite differences") {
  const PerturbationField f =
      PerturbationField::normal_fourier(wobbly(), {0, 0.7, 1.0, 0.1}, {0, 0.4, 0, 0});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1.3, 1.3);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 20) {
    const Vec2 x(U(rng), U(rng));
    if (f.eval2(x).norm() == 0.0) continue;
    ++checked;
    Mat2 fd;
    for (int c = 0; c < 2; ++c) {
      Vec2 xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      fd.col(c) = (f.eval2(xp) - f.eval2(xm)) / (2 * h);
    }
    const Mat2 an = f.jacobian2(x);
    REQUIRE((an - fd).norm() <= 1e-6 * std::max(1.0, an.norm()));
    REQUIRE(f.divergence(x) == Catch::Approx(an.trace()).margin(1e-14));
  }
}

TEST_CASE("1-D windowed polynomial field derivative") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const PerturbationField f = PerturbationField::poly1d(iv, {0.3, -0.2, 0.5, 0.1});
  const double h = 1e-6;
  for (double x : {-1.0, -0.4, 0.0, 0.7, 1.0, 1.3}) {
    const double fd = (f.eval1(x + h) - f.eval1(x - h)) / (2 * h);
    REQUIRE(f.deriv1(x) == Catch::Approx(fd).margin(1e-7));
  }
  // window: vanishes far away, intact at the endpoints
  REQUIRE(f.eval1(-2.5) == 0.0);
  REQUIRE(f.eval1(2.5) == 0.0);
  REQUIRE(f.eval1(1.0) == Catch::Approx(0.3 - 0.2 + 0.5 + 0.1).epsilon(1e-12));
}

TEST_CASE("boundary quadrature: measure, unit normals, trigonometric exactness") {
  const Domain disk = Domain::disk(1.0);
  const BoundaryQuadrature bq = boundary_quadrature(disk, 256);
  REQUIRE(bq.total_measure() == Catch::Approx(2.0 * kPi).margin(1e-8));
  for (const Vec2& n : bq.normals) REQUIRE(std::abs(n.norm() - 1.0) <= 1e-12);
  for (int k = 1; k <= 8; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < bq.nodes.size(); ++i)
      acc += std::cos(k * bq.thetas[i]) * bq.weights[i];
    REQUIRE(std::abs(acc) <= 1e-10);
  }
}

TEST_CASE("dilation commutes with boundary distance") {
  const Domain d = wobbly();
  const double t = 0.08;
  const Domain big = apply_perturbation(d, PerturbationField::dilation2d(d).with_amplitude(t));
  for (const Vec2& x : {Vec2(0.2, 0.3), Vec2(-0.4, 0.1)})
    REQUIRE(boundary_distance(big, (1 + t) * x) ==
            Catch::Approx((1 + t) * boundary_distance(d, x)).margin(1e-9));
}

TEST_CASE("compose_maps: identity, homothety composition, budget gate, chain bound") {
  REQUIRE(compose_maps({}).apply2(Vec2(0.3, 0.4)) == Vec2(0.3, 0.4));

  const Domain disk = Domain::disk(1.0);
  const double t1 = 0.05, t2 = 0.03;
  CompositeMap two = compose_maps({PerturbationField::dilation2d(disk).with_amplitude(t1),
                                   PerturbationField::dilation2d(disk).with_amplitude(t2)});
  const Vec2 x(0.2, -0.1);
  REQUIRE((two.apply2(x) - (1 + t1) * (1 + t2) * x).norm() <= 1e-14);

  std::vector<double> budgets = {0.04, 0.05};
  REQUIRE_THROWS_AS(
      compose_maps({PerturbationField::dilation2d(disk).with_amplitude(t1),
                    PerturbationField::dilation2d(disk).with_amplitude(t2)},
                   &budgets),
      BudgetExceeded);

  // sigma_l = 4^{-l} budgets: consecutive bounds below (1/4)^{i+1} (5/4)^i
  std::vector<PerturbationField> fields;
  for (int l = 1; l <= 4; ++l) {
    PerturbationField f = PerturbationField::dilation2d(disk);
    fields.push_back(f.with_amplitude(std::pow(4.0, -l) / f.c1_norm_bound()));
  }
  const CompositeMap chain = compose_maps(fields);
  const std::vector<double> bounds = chain.consecutive_bounds();
  for (int i = 0; i < 4; ++i)
    REQUIRE(bounds[i] <= std::pow(0.25, i + 1) * std::pow(1.25, i) * (1 + 1e-12));
  // empirical C1 distance respects the certified bound with a 1.1 factor
  const double emp = chain.empirical_c1_distance(Vec2(-1.5, -1.5), Vec2(1.5, 1.5), 16);
  REQUIRE(emp <= 1.1 * chain.total_c1_bound());
}

TEST_CASE("serialization round trip for domains and fields") {
  const Domain d = wobbly();
  const Json jd = to_json(d);
  const Domain d2 = domain_from_json(jd);
  REQUIRE(to_json(d2).dump() == jd.dump());

  const PerturbationField f =
      PerturbationField::normal_fourier(d, {0, 1.0}, {0, 0.25}).with_amplitude(0.02);
  const Json jf = to_json(f);
  const PerturbationField f2 = field_from_json(jf, d);
  REQUIRE(to_json(f2).dump() == jf.dump());
  REQUIRE(f2.c1_norm_bound() == Catch::Approx(f.c1_norm_bound()).epsilon(1e-14));
  const Vec2 p(0.8, 0.1);
  REQUIRE((f2.eval2(p) - f.eval2(p)).norm() <= 1e-15);
}
