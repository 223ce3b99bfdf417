#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "fraclab/fraclab.hpp"

using namespace fraclab;

namespace {

PerturbationField random_poly_field(const Domain& iv, std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  PerturbationField f = PerturbationField::poly1d(iv, {U(rng), U(rng), U(rng), U(rng)});
  return f.with_amplitude(scale / f.c1_norm_bound());
}

// entrywise relative error, guarded for entries far below `scale` (those
// only see finite-difference roundoff); `scale` is the natural size of a
// derivative along the field, |amplitude| * stiffness magnitude, which stays
// meaningful even where the derivative matrix itself degenerates (s = 1/2 is
// nearly affine-invariant and the whole kernel collapses there)
double max_entrywise_rel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double scale) {
  const double floor = 1e-4 * scale;
  double worst = 0.0;
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) {
      const double denom = std::max({std::abs(A(i, j)), std::abs(B(i, j)), floor});
      worst = std::max(worst, std::abs(A(i, j) - B(i, j)) / denom);
    }
  return worst;
}

}  // namespace

TEST_CASE("grid operator is symmetric, positive on the indicator, PD") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const DiscreteOperator op = assemble_1d_grid(0.5, 1.0 / 32, iv);
  REQUIRE((op.stiffness - op.stiffness.transpose()).cwiseAbs().maxCoeff() <=
          1e-10 * op.stiffness.cwiseAbs().maxCoeff());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.size());
  const Eigen::VectorXd row_sums = op.stiffness * ones;
  for (int i = 0; i < op.size(); ++i) REQUIRE(row_sums[i] > 0.0);
  REQUIRE(Eigen::LLT<Eigen::MatrixXd>(op.stiffness).info() == Eigen::Success);
}

TEST_CASE("grid eigenvalues agree with the spectral discretization") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const Spectrum grid = solve(assemble_1d_grid(0.5, 1.0 / 64, iv), 5);
  const Spectrum spectral = solve(assemble_1d_spectral(0.5, 64, iv), 5);
  REQUIRE(grid.eigenvalues[0] == Catch::Approx(spectral.eigenvalues[0]).epsilon(1e-2));
  for (int k = 1; k < 5; ++k)
    REQUIRE(grid.eigenvalues[k] ==
            Catch::Approx(spectral.eigenvalues[k]).epsilon(3e-2));
}

TEST_CASE("refinement consistency at s = 0.9") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  double prev_change = -1.0;
  double lam[4];
  for (int l = 0; l < 4; ++l)
    lam[l] = solve(assemble_1d_grid(0.9, 1.0 / (16 << l), iv), 1).eigenvalues[0];
  for (int l = 1; l < 3; ++l) {
    const double change = std::abs(lam[l + 1] - lam[l]);
    if (prev_change >= 0.0) REQUIRE(change < prev_change);
    prev_change = std::abs(lam[l] - lam[l - 1]);
    REQUIRE(change < prev_change);
  }
}

TEST_CASE("grid too coarse is rejected") {
  REQUIRE_THROWS_AS(assemble_1d_grid(0.5, 1.0, Domain::interval(-1.0, 1.0)), GridTooCoarse);
}

TEST_CASE("transformed form: zero field bit-identical, dilation exact") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const DiscreteOperator base = assemble_1d_grid(0.4, 1.0 / 32, iv);

  const PerturbationField zero = PerturbationField::dilation1d(iv).with_amplitude(0.0);
  const DiscreteOperator same = assemble_transformed_form(base, zero);
  REQUIRE(same.stiffness == base.stiffness);
  REQUIRE(same.mass == base.mass);

  const double t = 0.1;
  const DiscreteOperator big =
      assemble_transformed_form(base, PerturbationField::dilation1d(iv).with_amplitude(t));
  const Spectrum a = solve(base, 5), b = solve(big, 5);
  for (int k = 0; k < 5; ++k)
    REQUIRE(b.eigenvalues[k] ==
            Catch::Approx(std::pow(1 + t, -2 * 0.4) * a.eigenvalues[k]).epsilon(1e-6));
}

TEST_CASE("transformed pencil tracks the re-gridded domain") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const double s = 0.55, t = 1e-3;
  const DiscreteOperator base = assemble_1d_grid(s, 1.0 / 48, iv);
  std::mt19937 rng(3);
  const PerturbationField f = random_poly_field(iv, rng, t);
  const Spectrum pulled = solve(assemble_transformed_form(base, f), 4);
  const Domain moved = apply_perturbation(iv, f);
  const Spectrum regrid = solve(assemble_1d_grid(s, 1.0 / 48, moved), 4);
  for (int k = 0; k < 4; ++k)
    REQUIRE(pulled.eigenvalues[k] == Catch::Approx(regrid.eigenvalues[k]).epsilon(5e-3));
}

TEST_CASE("derivative kernel equals the central difference of the transformed form") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  std::mt19937 rng(17);
  for (double s : {0.3, 0.5, 0.75}) {
    const DiscreteOperator base = assemble_1d_grid(s, 1.0 / 24, iv);
    for (int trial = 0; trial < 5; ++trial) {
      const PerturbationField f = random_poly_field(iv, rng, 0.3);
      const Eigen::MatrixXd kernel = assemble_derivative_kernel(base, f);
      const double dt = 1e-4;
      const Eigen::MatrixXd fd =
          (assemble_transformed_form(base, f.with_amplitude(f.amplitude * dt)).stiffness -
           assemble_transformed_form(base, f.with_amplitude(-f.amplitude * dt)).stiffness) /
          (2 * dt);
      const double scale =
          std::abs(f.amplitude) * base.stiffness.cwiseAbs().maxCoeff();
      REQUIRE(max_entrywise_rel(kernel, fd, scale) < 1e-5);
      REQUIRE((kernel - fd).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }
  }
}

TEST_CASE("derivative kernel closed forms: constant field, dilation") {
  const Domain iv = Domain::interval(-0.7, 1.3);
  const double s = 0.6;
  const DiscreteOperator base = assemble_1d_grid(s, 1.0 / 24, iv);

  // constant field: divergence and difference terms both vanish
  const PerturbationField shift = PerturbationField::affine1d(1.0, 0.0, iv.a - 1, iv.b + 1);
  REQUIRE(assemble_derivative_kernel(base, shift.with_amplitude(0.3)).cwiseAbs().maxCoeff() <=
          1e-14 * base.stiffness.cwiseAbs().maxCoeff());

  // dilation: the full transformed stiffness is (1+t)^{1-2s} K, so the
  // derivative is (1-2s) K (Jacobian factors contribute +2n, kernel -(n+2s))
  const Eigen::MatrixXd kernel =
      assemble_derivative_kernel(base, PerturbationField::dilation1d(iv));
  REQUIRE((kernel - (1 - 2 * s) * base.stiffness).cwiseAbs().maxCoeff() <=
          1e-8 * base.stiffness.cwiseAbs().maxCoeff());
}

TEST_CASE("potential: zero, constant shift, indefinite rejection") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const DiscreteOperator base = assemble_1d_grid(0.5, 1.0 / 32, iv);

  const DiscreteOperator same = assemble_potential(base, ScalarField::constant(0.0));
  REQUIRE(same.stiffness == base.stiffness);

  const double c = 0.8;
  const Spectrum l0 = solve(base, 5);
  const Spectrum lc = solve(assemble_potential(base, ScalarField::constant(c)), 5);
  for (int k = 0; k < 5; ++k)
    REQUIRE(lc.eigenvalues[k] == Catch::Approx(l0.eigenvalues[k] + c).epsilon(1e-12));

  REQUIRE_THROWS_AS(assemble_potential(base, ScalarField::constant(-100.0)), IndefiniteForm);
}

TEST_CASE("weight: unit weight identity, constant scaling, positivity gate") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const DiscreteOperator base = assemble_1d_grid(0.5, 1.0 / 32, iv);

  const DiscreteOperator same = assemble_weight(base, ScalarField::constant(1.0));
  REQUIRE((same.mass - base.mass).cwiseAbs().maxCoeff() <= 1e-15);

  const double c = 2.5;
  const Spectrum l0 = solve(base, 5);
  const Spectrum lc = solve(assemble_weight(base, ScalarField::constant(c)), 5);
  for (int k = 0; k < 5; ++k)
    REQUIRE(lc.eigenvalues[k] == Catch::Approx(l0.eigenvalues[k] / c).epsilon(1e-12));

  REQUIRE_THROWS_AS(assemble_weight(base, ScalarField::constant(0.0)), NonPositiveWeight);
}

TEST_CASE("spectral potential/weight against the same closed forms") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const DiscreteOperator base = assemble_1d_spectral(0.5, 24, iv);
  const double c = 0.6;
  const Spectrum l0 = solve(base, 5);
  const Spectrum shifted = solve(assemble_potential(base, ScalarField::constant(c)), 5);
  const Spectrum scaled = solve(assemble_weight(base, ScalarField::constant(c)), 5);
  for (int k = 0; k < 5; ++k) {
    REQUIRE(shifted.eigenvalues[k] == Catch::Approx(l0.eigenvalues[k] + c).epsilon(1e-10));
    REQUIRE(scaled.eigenvalues[k] == Catch::Approx(l0.eigenvalues[k] / c).epsilon(1e-10));
  }
  // a smooth non-constant weight keeps the pencil PD and shifts eigenvalues
  const Spectrum w = solve(assemble_weight(base, ScalarField::poly1({1.0, 0.1})), 5);
  for (int k = 0; k < 5; ++k) REQUIRE(w.eigenvalues[k] > 0.0);
}
