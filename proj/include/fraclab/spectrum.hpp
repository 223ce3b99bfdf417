#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <tuple>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/operators.hpp"

namespace fraclab {

/// Ordered eigenpairs of a (stiffness, mass) pencil.
struct Spectrum {
  enum class Normalization { L2, Form };
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // one column per eigenvalue
  Normalization normalization = Normalization::L2;
  std::string operator_ref;

  int count() const { return static_cast<int>(eigenvalues.size()); }
};

/// Maximal run of consecutive eigenvalues with relative gaps below rel_tol.
struct Cluster {
  int lo = 0, hi = 0;  // inclusive index range
  double representative = 0.0;
  double rel_tol = 0.0;

  int size() const { return hi - lo + 1; }
};

/// First k eigenpairs of the pencil, ascending, mass-orthonormal.
inline Spectrum solve(const DiscreteOperator& op, int k) {
  if (k < 1 || k > op.size()) throw Error("requested eigenvalue count out of range");
  Eigen::LLT<Eigen::MatrixXd> llt(op.mass);
  if (llt.info() != Eigen::Success) throw CholeskyFailure("mass matrix is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(op.stiffness, op.mass);
  if (es.info() != Eigen::Success) throw Error("generalized eigensolver failed");
  Spectrum sp;
  sp.eigenvalues = es.eigenvalues().head(k);
  sp.eigenvectors = es.eigenvectors().leftCols(k);
  sp.normalization = Spectrum::Normalization::L2;
  sp.operator_ref = op.basis_meta();
  return sp;
}

/// Greedy maximal grouping by relative gaps.
inline std::vector<Cluster> cluster(const Spectrum& sp, double rel_tol) {
  if (!(rel_tol > 0.0)) throw Error("cluster tolerance must be positive");
  std::vector<Cluster> out;
  const int n = sp.count();
  int lo = 0;
  for (int i = 1; i <= n; ++i) {
    const bool break_here =
        i == n || std::abs(sp.eigenvalues[i] - sp.eigenvalues[i - 1]) >
                      rel_tol * std::max(std::abs(sp.eigenvalues[i - 1]), 1e-300);
    if (break_here) {
      Cluster c;
      c.lo = lo;
      c.hi = i - 1;
      c.rel_tol = rel_tol;
      c.representative = sp.eigenvalues.segment(lo, i - lo).mean();
      out.push_back(c);
      lo = i;
    }
  }
  return out;
}

/// Orthonormalize eigenvectors in the requested product (modified
/// Gram-Schmidt inside numerically degenerate groups; distinct eigenvectors
/// are already orthogonal and only get rescaled).
inline Spectrum renormalize(const Spectrum& sp, const DiscreteOperator& op,
                            Spectrum::Normalization target) {
  const Eigen::MatrixXd& G =
      target == Spectrum::Normalization::L2 ? op.mass : op.stiffness;
  Spectrum out = sp;
  const int n = sp.count();
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd v = sp.eigenvectors.col(j);
    for (int i = 0; i < j; ++i) {
      // remove components only inside the same numerical eigenspace
      if (std::abs(sp.eigenvalues[i] - sp.eigenvalues[j]) <
          1e-8 * std::max(1.0, std::abs(sp.eigenvalues[j]))) {
        const Eigen::VectorXd u = out.eigenvectors.col(i);
        v -= u * (u.dot(G * v));
      }
    }
    const double nrm = std::sqrt(v.dot(G * v));
    out.eigenvectors.col(j) = v / nrm;
  }
  out.normalization = target;
  return out;
}

/// Eigenvalue paths along a parameter sweep, matched by eigenvector overlap.
struct TrackResult {
  Eigen::MatrixXd lambda_paths;  // (steps) x (k), path index fixed at step 0
  std::vector<int> crossings;    // steps at which the index order changed
};

inline TrackResult track(const std::vector<DiscreteOperator>& pencils, int k,
                         double overlap_threshold = 0.6) {
  if (pencils.empty()) throw Error("track needs at least one pencil");
  TrackResult tr;
  const int steps = static_cast<int>(pencils.size());
  tr.lambda_paths.resize(steps, k);

  Spectrum prev = solve(pencils[0], k);
  std::vector<int> perm(k);
  for (int j = 0; j < k; ++j) perm[j] = j;
  for (int j = 0; j < k; ++j) tr.lambda_paths(0, j) = prev.eigenvalues[j];

  for (int t = 1; t < steps; ++t) {
    Spectrum cur = solve(pencils[t], k);
    const Eigen::MatrixXd overlap =
        prev.eigenvectors.transpose() * pencils[t].mass * cur.eigenvectors;
    // global-greedy assignment: strongest overlaps first, so exactly
    // degenerate pairs (equal 1/sqrt(2) overlaps) still resolve injectively
    std::vector<std::tuple<double, int, int>> order;
    order.reserve(k * k);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < k; ++j) order.emplace_back(std::abs(overlap(p, j)), p, j);
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<int> match(k, -1);
    std::vector<bool> used(k, false);
    bool crossed = false;
    int assigned = 0;
    for (const auto& [v, p, j] : order) {
      if (assigned == k) break;
      if (match[p] >= 0 || used[j]) continue;
      if (v < overlap_threshold) break;
      match[p] = j;
      used[j] = true;
      ++assigned;
      if (p != j) crossed = true;
    }
    if (assigned != k)
      throw TrackingAmbiguous("overlap matching failed at step " + std::to_string(t));
    std::vector<int> next_perm(k);
    for (int path = 0; path < k; ++path) next_perm[path] = match[perm[path]];
    perm = next_perm;
    if (crossed) tr.crossings.push_back(t);
    for (int path = 0; path < k; ++path) tr.lambda_paths(t, path) = cur.eigenvalues[perm[path]];
    prev = std::move(cur);
  }
  return tr;
}

}  // namespace fraclab
