#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "fraclab/fraclab.hpp"

using namespace fraclab;

TEST_CASE("solver contract: residuals, orthonormality, ordering") {
  const DiscreteOperator op = assemble_1d_spectral(0.5, 64, Domain::interval(-1.0, 1.0));
  const Spectrum sp = solve(op, 10);
  const double knorm = op.stiffness.norm();
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd v = sp.eigenvectors.col(k);
    const double res = (op.stiffness * v - sp.eigenvalues[k] * op.mass * v).norm();
    REQUIRE(res <= 1e-8 * knorm * v.norm());
  }
  const Eigen::MatrixXd G =
      sp.eigenvectors.transpose() * op.mass * sp.eigenvectors;
  REQUIRE((G - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-8);
  // interval spectra are simple: strictly increasing with a healthy gap
  for (int k = 1; k < 10; ++k)
    REQUIRE(sp.eigenvalues[k] - sp.eigenvalues[k - 1] > 1e-3 * sp.eigenvalues[k - 1]);
  REQUIRE(sp.eigenvalues[0] > 0.0);

  REQUIRE_THROWS_AS(solve(op, 65), Error);
}

TEST_CASE("spectral eigenvalues converge spectrally in N") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const Spectrum a = solve(assemble_1d_spectral(0.5, 40, iv), 5);
  const Spectrum b = solve(assemble_1d_spectral(0.5, 64, iv), 5);
  for (int k = 0; k < 5; ++k)
    REQUIRE(a.eigenvalues[k] == Catch::Approx(b.eigenvalues[k]).epsilon(1e-8));
}

TEST_CASE("min-max: random Rayleigh quotients bound the ground state from above") {
  const DiscreteOperator op = assemble_1d_grid(0.6, 1.0 / 32, Domain::interval(-1.0, 1.0));
  const double lam1 = solve(op, 1).eigenvalues[0];
  std::mt19937 rng(5);
  std::normal_distribution<double> N01;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd v(op.size());
    for (int i = 0; i < op.size(); ++i) v[i] = N01(rng);
    const double rq = v.dot(op.stiffness * v) / v.dot(op.mass * v);
    REQUIRE(lam1 <= rq * (1 + 1e-12));
  }
}

TEST_CASE("cluster grouping: singletons, huge tolerance, idempotence") {
  const DiscreteOperator op = assemble_1d_spectral(0.5, 32, Domain::interval(-1.0, 1.0));
  const Spectrum sp = solve(op, 8);
  const std::vector<Cluster> fine = cluster(sp, 1e-6);
  REQUIRE(fine.size() == 8);
  for (const Cluster& c : fine) REQUIRE(c.size() == 1);

  const std::vector<Cluster> coarse = cluster(sp, 1e6);
  REQUIRE(coarse.size() == 1);
  REQUIRE(coarse[0].size() == 8);

  // idempotence: representatives of a clustered spectrum re-cluster identically
  const std::vector<Cluster> again = cluster(sp, 1e-6);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    REQUIRE(again[i].lo == fine[i].lo);
    REQUIRE(again[i].hi == fine[i].hi);
  }

  REQUIRE_THROWS_AS(cluster(sp, 0.0), Error);
}

TEST_CASE("disk pair clusters at 2% and the id map is stable") {
  const DiscreteOperator op = assemble_2d_grid(0.5, 1.0 / 10, Domain::disk(1.0));
  const Spectrum sp = solve(op, 6);
  const std::vector<Cluster> cls = cluster(sp, 0.02);
  REQUIRE(cls.size() >= 2);
  REQUIRE(cls[1].lo == 1);
  REQUIRE(cls[1].hi == 2);
}

TEST_CASE("renormalize: scale relation, round trip, degenerate Gram") {
  const DiscreteOperator op = assemble_2d_grid(0.5, 1.0 / 10, Domain::disk(1.0));
  const Spectrum sp = solve(op, 4);

  // E(phi,phi) = lambda int phi^2 for L2-normalized eigenvectors
  for (int k = 0; k < 4; ++k) {
    const Eigen::VectorXd v = sp.eigenvectors.col(k);
    REQUIRE(v.dot(op.stiffness * v) ==
            Catch::Approx(sp.eigenvalues[k] * v.dot(op.mass * v)).epsilon(1e-8));
  }

  const Spectrum formed = renormalize(sp, op, Spectrum::Normalization::Form);
  const Eigen::MatrixXd Gf =
      formed.eigenvectors.transpose() * op.stiffness * formed.eigenvectors;
  REQUIRE((Gf - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);

  const Spectrum back = renormalize(formed, op, Spectrum::Normalization::L2);
  // reproduces vectors up to sign / rotation inside the degenerate pair
  for (int k : {0, 3}) {
    const double overlap =
        std::abs(back.eigenvectors.col(k).dot(op.mass * sp.eigenvectors.col(k)));
    REQUIRE(overlap == Catch::Approx(1.0).epsilon(1e-8));
  }
  const Eigen::MatrixXd Gpair =
      back.eigenvectors.middleCols(1, 2).transpose() * op.mass *
      back.eigenvectors.middleCols(1, 2);
  REQUIRE((Gpair - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("track: constant pencils give constant paths") {
  const DiscreteOperator op = assemble_1d_spectral(0.5, 24, Domain::interval(-1.0, 1.0));
  const TrackResult tr = track({op, op, op}, 5);
  for (int k = 0; k < 5; ++k)
    for (int t = 1; t < 3; ++t) REQUIRE(tr.lambda_paths(t, k) == tr.lambda_paths(0, k));
  REQUIRE(tr.crossings.empty());
}

TEST_CASE("track: dilation family follows the homogeneity law") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const double s = 0.5;
  const DiscreteOperator base = assemble_1d_grid(s, 1.0 / 32, iv);
  std::vector<DiscreteOperator> pencils;
  std::vector<double> ts = {0.0, 0.01, 0.02, 0.03};
  for (double t : ts)
    pencils.push_back(
        assemble_transformed_form(base, PerturbationField::dilation1d(iv).with_amplitude(t)));
  const TrackResult tr = track(pencils, 4);
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (int k = 0; k < 4; ++k)
      REQUIRE(tr.lambda_paths(i, k) ==
              Catch::Approx(tr.lambda_paths(0, k) * std::pow(1 + ts[i], -2 * s)).epsilon(1e-9));
}

TEST_CASE("track: cos(2 theta) field separates the disk pair into two paths") {
  const Domain disk = Domain::disk(1.0);
  const double s = 0.5;
  const DiscreteOperator base = assemble_2d_grid(s, 1.0 / 10, disk);
  PerturbationField f = PerturbationField::normal_fourier(disk, {0, 0, 1.0}, {});
  f = f.with_amplitude(1.0 / f.c1_norm_bound());
  std::vector<DiscreteOperator> pencils;
  for (double t : {0.0, 0.0125, 0.025, 0.0375, 0.05})
    pencils.push_back(assemble_transformed_form(base, f.with_amplitude(t * f.amplitude)));
  const TrackResult tr = track(pencils, 4);
  const double gap0 = std::abs(tr.lambda_paths(0, 2) - tr.lambda_paths(0, 1));
  const double gap1 = std::abs(tr.lambda_paths(4, 2) - tr.lambda_paths(4, 1));
  REQUIRE(gap0 <= 1e-6 * tr.lambda_paths(0, 1));
  REQUIRE(gap1 > 100 * gap0);
  REQUIRE(gap1 > 1e-3 * tr.lambda_paths(0, 1));
  // paths move continuously: step-to-step change stays O(step)
  for (int t = 1; t < 5; ++t)
    for (int k = 0; k < 4; ++k)
      REQUIRE(std::abs(tr.lambda_paths(t, k) - tr.lambda_paths(t - 1, k)) <=
              0.2 * tr.lambda_paths(0, k));
}

TEST_CASE("eigenvalue continuity in the perturbation amplitude") {
  const Domain iv = Domain::interval(-1.0, 1.0);
  const DiscreteOperator base = assemble_1d_grid(0.5, 1.0 / 32, iv);
  const Spectrum sp0 = solve(base, 3);
  PerturbationField f = PerturbationField::poly1d(iv, {0.4, 0.3, -0.2});
  f = f.with_amplitude(1.0 / f.c1_norm_bound());
  double prev_ratio = -1.0;
  for (double t : {1e-2, 5e-3, 2.5e-3}) {
    const Spectrum spt =
        solve(assemble_transformed_form(base, f.with_amplitude(t * f.amplitude)), 3);
    for (int k = 0; k < 3; ++k) {
      const double ratio = std::abs(spt.eigenvalues[k] - sp0.eigenvalues[k]) / t;
      REQUIRE(ratio <= 10.0 * sp0.eigenvalues[k]);  // |dlambda| <= C t with stable C
      if (k == 0 && prev_ratio > 0.0)
        REQUIRE(ratio == Catch::Approx(prev_ratio).epsilon(0.5));
      if (k == 0) prev_ratio = ratio;
    }
  }
}
