#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fraclab/shape_calculus.hpp"

namespace fraclab {

/// Budget schedule, candidate dictionary limits, and stop criteria for the
/// simplification loop.
struct SimplificationPlan {
  SplittingMatrix::Mode mode = SplittingMatrix::Mode::Domain;
  double epsilon = 0.1;          // sigma_l = epsilon * 4^{-l}
  int q = 5;                     // eigenvalues to make simple
  double cluster_rel_tol = 2e-3;
  int max_iterations = 24;
  int max_frequency = 8;         // domain dictionary: cos/sin(k theta), k <= K
  int max_halvings = 12;
  int extra_solve = 3;

  double sigma(int l) const { return epsilon * std::pow(4.0, -l); }
  int solve_count() const { return q + extra_solve; }
};

/// What to discretize and how; carries the accumulated coefficient
/// perturbations of the potential/weight modes.
struct SimplificationContext {
  DiscreteOperator::Method method = DiscreteOperator::Method::Grid2D;
  Domain domain = Domain::disk(1.0);
  double s = 0.5;
  int N = 64;          // spectral basis size
  double h = 1.0 / 12; // grid spacing
  int node_cap = 4000;
  std::vector<std::pair<ScalarField, double>> potential_terms;  // (unit b, amplitude)
  std::vector<std::pair<ScalarField, double>> weight_terms;     // (unit beta, amplitude)

  DiscreteOperator assemble(const Domain& dom) const {
    DiscreteOperator op;
    switch (method) {
      case DiscreteOperator::Method::Spectral1D:
        op = assemble_1d_spectral(s, N, dom);
        break;
      case DiscreteOperator::Method::Grid1D:
        op = assemble_1d_grid(s, h, dom);
        break;
      case DiscreteOperator::Method::Grid2D:
        op = assemble_2d_grid(s, h, dom, node_cap);
        break;
    }
    if (!potential_terms.empty()) {
      std::vector<double> acc(op.size(), 0.0);
      for (const auto& [f, amp] : potential_terms) {
        const std::vector<double> v = op.sample_field(f);
        for (int i = 0; i < op.size(); ++i) acc[i] += amp * v[i];
      }
      op = assemble_potential(op, ScalarField::nodal(acc));
    }
    if (!weight_terms.empty()) {
      std::vector<double> acc(op.size(), 1.0);
      for (const auto& [f, amp] : weight_terms) {
        const std::vector<double> v = op.sample_field(f);
        for (int i = 0; i < op.size(); ++i) acc[i] += amp * v[i];
      }
      op = assemble_weight(op, ScalarField::nodal(acc));
    }
    return op;
  }
};

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool contains(double x) const { return x > lo && x < hi; }
};

/// Disjoint isolating intervals around the first `count` eigenvalues
/// (midpoint-gap, 45% of each gap, relative half-width capped at 25%).
inline std::vector<Interval> isolating_intervals(const Eigen::VectorXd& lambda, int count) {
  std::vector<Interval> out(count);
  for (int t = 0; t < count; ++t) {
    const double l = lambda[t];
    const double cap = 0.25 * std::abs(l);
    double below = t == 0 ? cap : 0.45 * (l - lambda[t - 1]);
    double above = t + 1 < lambda.size() ? 0.45 * (lambda[t + 1] - l) : cap;
    out[t] = {l - std::min(below, cap), l + std::min(above, cap)};
  }
  return out;
}

/// A dictionary entry: either a domain field or a coefficient direction,
/// normalized to unit norm (C^1 for fields, C^0 for coefficients).
struct Candidate {
  std::string name;
  std::optional<PerturbationField> field;
  std::optional<ScalarField> scalar;
  SplittingMatrix M;
};

inline std::vector<Candidate> build_dictionary(const Cluster& cl, const Spectrum& sp,
                                               const SimplificationPlan& plan,
                                               const DiscreteOperator& op, const Domain& dom) {
  std::vector<Candidate> dict;
  if (plan.mode == SplittingMatrix::Mode::Domain) {
    if (dom.kind == Domain::Kind::Star2d) {
      for (int k = 1; k <= plan.max_frequency; ++k) {
        std::vector<double> gc(k + 1, 0.0), gs(k + 1, 0.0);
        gc[k] = 1.0;
        Candidate c1;
        c1.name = "normal cos(" + std::to_string(k) + "t)";
        c1.field = PerturbationField::normal_fourier(dom, gc, std::vector<double>(k + 1, 0.0));
        dict.push_back(std::move(c1));
        gs[k] = 1.0;
        Candidate c2;
        c2.name = "normal sin(" + std::to_string(k) + "t)";
        c2.field =
            PerturbationField::normal_fourier(dom, std::vector<double>(k + 1, 0.0), gs);
        dict.push_back(std::move(c2));
      }
      const double R = dom.max_radius();
      const Vec2 lo = dom.center - Vec2(2 * R, 2 * R), hi = dom.center + Vec2(2 * R, 2 * R);
      Candidate tx;
      tx.name = "translation x";
      tx.field = PerturbationField::affine2d(Vec2(1, 0), Mat2::Zero(), lo, hi);
      dict.push_back(std::move(tx));
      Candidate ty;
      ty.name = "translation y";
      ty.field = PerturbationField::affine2d(Vec2(0, 1), Mat2::Zero(), lo, hi);
      dict.push_back(std::move(ty));
      Candidate dil;
      dil.name = "dilation";
      dil.field = PerturbationField::dilation2d(dom);
      dict.push_back(std::move(dil));
    } else {
      Candidate tr;
      tr.name = "translation";
      tr.field = PerturbationField::affine1d(1.0, 0.0, dom.a - 1, dom.b + 1);
      dict.push_back(std::move(tr));
      Candidate dil;
      dil.name = "dilation";
      dil.field = PerturbationField::dilation1d(dom);
      dict.push_back(std::move(dil));
    }
    for (auto& c : dict) c.field = c.field->with_amplitude(1.0 / c.field->c1_norm_bound());
  } else {
    const bool planar = op.method == DiscreteOperator::Method::Grid2D;
    std::vector<std::pair<std::string, ScalarField>> polys;
    if (planar) {
      polys = {{"x1", ScalarField::poly2(0, 1, 0)},
               {"x2", ScalarField::poly2(0, 0, 1)},
               {"x1^2", ScalarField::poly2(0, 0, 0, 1, 0, 0)},
               {"x1*x2", ScalarField::poly2(0, 0, 0, 0, 1, 0)},
               {"x2^2", ScalarField::poly2(0, 0, 0, 0, 0, 1)}};
    } else {
      polys = {{"x", ScalarField::poly1({0, 1})}, {"x^2", ScalarField::poly1({0, 0, 1})}};
    }
    std::vector<double> s1;
    std::vector<Vec2> s2;
    if (op.method == DiscreteOperator::Method::Grid1D)
      s1 = op.nodes1;
    else if (planar)
      s2 = op.geom2->nodes;
    else
      for (int i = 0; i <= 64; ++i) s1.push_back(dom.a + (dom.b - dom.a) * i / 64.0);
    for (auto& [name, f] : polys) {
      const double nrm = f.sup_norm(s1, s2);
      Candidate c;
      c.name = name;
      ScalarField g = f;
      if (g.kind == ScalarField::Kind::Poly1)
        for (auto& cc : g.coeffs) cc /= nrm;
      else {
        g.c0 /= nrm;
        g.cx /= nrm;
        g.cy /= nrm;
        g.cxx /= nrm;
        g.cxy /= nrm;
        g.cyy /= nrm;
      }
      c.scalar = g;
      dict.push_back(std::move(c));
    }
    // cluster products phi_i phi_j (nodal; the guaranteed splitters)
    if (op.method != DiscreteOperator::Method::Spectral1D) {
      for (int i = 0; i < cl.size(); ++i)
        for (int j = i; j < cl.size(); ++j) {
          std::vector<double> prod(op.size());
          for (int n = 0; n < op.size(); ++n)
            prod[n] = sp.eigenvectors(n, cl.lo + i) * sp.eigenvectors(n, cl.lo + j);
          double nrm = 0.0;
          for (double v : prod) nrm = std::max(nrm, std::abs(v));
          for (double& v : prod) v /= nrm;
          Candidate c;
          c.name = "phi" + std::to_string(cl.lo + i + 1) + "*phi" +
                   std::to_string(cl.lo + j + 1);
          c.scalar = ScalarField::nodal(std::move(prod));
          dict.push_back(std::move(c));
        }
    }
  }
  return dict;
}

/// Evaluate the dictionary and return the entry with the largest deviation
/// per unit perturbation norm (entries are pre-normalized).
inline Candidate select_perturbation(const Cluster& cl, const Spectrum& sp,
                                     const SimplificationPlan& plan, const DiscreteOperator& op,
                                     const Domain& dom, const BoundaryQuadrature& bq) {
  if (cl.size() < 2) throw Error("select_perturbation needs a degenerate cluster");
  std::vector<Candidate> dict = build_dictionary(cl, sp, plan, op, dom);
  int best = -1;
  double best_dev = -1.0;
  for (std::size_t i = 0; i < dict.size(); ++i) {
    if (plan.mode == SplittingMatrix::Mode::Domain)
      dict[i].M = splitting_matrix_domain(cl, sp, *dict[i].field, op, bq);
    else if (plan.mode == SplittingMatrix::Mode::Potential)
      dict[i].M = splitting_matrix_potential(cl, sp, *dict[i].scalar, op);
    else
      dict[i].M = splitting_matrix_weight(cl, sp, *dict[i].scalar, op);
    const double dev = dict[i].M.deviation();
    if (dev > best_dev) {
      best_dev = dev;
      best = static_cast<int>(i);
    }
  }
  if (best < 0 || best_dev < 1e-10 * std::max(1.0, std::abs(cl.representative)))
    throw NoSplittingCandidate("no dictionary element splits the cluster");
  return dict[best];
}

/// One accepted step of the loop.
struct IterationRecord {
  int iteration = 0;
  int cluster_lo = 0, cluster_hi = 0;
  std::string candidate;
  double amplitude = 0.0;
  double deviation = 0.0;
  int halvings = 0;
  std::vector<double> lambda_before, lambda_after;
  std::vector<Interval> intervals_after;
};

struct SimplificationReport {
  bool success = false;
  std::string mode;
  int q = 0;
  std::vector<IterationRecord> iterations;
  std::vector<double> final_eigenvalues;
  std::vector<Interval> final_intervals;
  double min_rel_gap = 0.0;
  double total_c1_bound = 0.0;   // domain mode: composite-map bound
  double budget_sum = 0.0;       // sum of the sigma_l actually drawn from
  Domain final_domain;
  std::vector<std::pair<std::string, double>> coefficient_terms;  // name, amplitude
};

namespace detail {

inline int simple_prefix(const std::vector<Cluster>& clusters, int q) {
  int prefix = 0;
  for (const Cluster& c : clusters) {
    if (c.lo >= q) break;
    if (c.size() > 1) return c.lo;
    prefix = c.hi + 1;
  }
  return std::min(prefix, q);
}

inline const Cluster* first_degenerate(const std::vector<Cluster>& clusters, int q) {
  for (const Cluster& c : clusters)
    if (c.lo < q && c.size() > 1) return &c;
  return nullptr;
}

}  // namespace detail

/// Backtracking-halving amplitude selection: largest t <= sigma_l for which
/// the attacked cluster splits and every previously certified eigenvalue
/// stays inside its interval. `resolve` maps an amplitude to the re-solved
/// spectrum of the perturbed problem.
struct AmplitudeResult {
  double t = 0.0;
  int halvings = 0;
  Spectrum spectrum;
};

inline AmplitudeResult amplitude_search(
    const std::function<Spectrum(double)>& resolve, const Cluster& attacked,
    const SimplificationPlan& plan, double sigma_l, const std::vector<Interval>& certified) {
  double t = sigma_l;
  for (int halving = 0; halving <= plan.max_halvings; ++halving, t *= 0.5) {
    Spectrum sp = resolve(t);
    const std::vector<Cluster> cls = cluster(sp, plan.cluster_rel_tol);
    int groups = 0;
    for (const Cluster& c : cls)
      if (c.lo <= attacked.hi && c.hi >= attacked.lo) ++groups;
    if (groups < 2) continue;  // no split opened at this amplitude
    bool stable = true;
    for (std::size_t i = 0; i < certified.size(); ++i)
      if (!certified[i].contains(sp.eigenvalues[static_cast<int>(i)])) {
        stable = false;
        break;
      }
    if (!stable) continue;
    AmplitudeResult r;
    r.t = t;
    r.halvings = halving;
    r.spectrum = std::move(sp);
    return r;
  }
  throw AmplitudeExhausted("no admissible amplitude after " +
                           std::to_string(plan.max_halvings) + " halvings");
}

/// The constructive loop: solve, cluster, attack the first degenerate cluster
/// within budget sigma_l, repeat until the first q eigenvalues are simple
/// with certified disjoint intervals.
inline SimplificationReport simplify(const SimplificationContext& initial,
                                     const SimplificationPlan& plan,
                                     std::ostream* log = nullptr) {
  SimplificationContext ctx = initial;
  Domain dom = ctx.domain;
  CompositeMap composite;
  SimplificationReport rep;
  rep.mode = plan.mode == SplittingMatrix::Mode::Domain      ? "domain"
             : plan.mode == SplittingMatrix::Mode::Potential ? "potential"
                                                             : "weight";
  rep.q = plan.q;

  auto emit = [&](const std::string& line) {
    if (log) (*log) << line << "\n";
  };

  for (int iter = 1; iter <= plan.max_iterations; ++iter) {
    DiscreteOperator op = ctx.assemble(dom);
    Spectrum sp = solve(op, plan.solve_count());
    const std::vector<Cluster> cls = cluster(sp, plan.cluster_rel_tol);
    const Cluster* attacked = detail::first_degenerate(cls, plan.q);

    if (!attacked) {
      rep.success = true;
      rep.final_eigenvalues.assign(sp.eigenvalues.data(),
                                   sp.eigenvalues.data() + sp.count());
      rep.final_intervals = isolating_intervals(sp.eigenvalues, plan.q);
      rep.min_rel_gap = std::numeric_limits<double>::max();
      for (int t = 1; t <= plan.q && t < sp.count(); ++t)
        rep.min_rel_gap = std::min(rep.min_rel_gap,
                                   (sp.eigenvalues[t] - sp.eigenvalues[t - 1]) /
                                       std::abs(sp.eigenvalues[t - 1]));
      rep.total_c1_bound = composite.total_c1_bound();
      rep.final_domain = dom;
      for (const auto& it : rep.iterations) rep.budget_sum += plan.sigma(it.iteration);
      emit("simplified after " + std::to_string(iter - 1) + " iteration(s), min rel gap " +
           format_double(rep.min_rel_gap));
      return rep;
    }

    const int prefix = detail::simple_prefix(cls, plan.q);
    const std::vector<Interval> certified = isolating_intervals(sp.eigenvalues, prefix);
    const double sigma_l = plan.sigma(iter);
    BoundaryQuadrature bq = boundary_quadrature(dom);
    Candidate cand = select_perturbation(*attacked, sp, plan, op, dom, bq);
    emit("iter " + std::to_string(iter) + ": cluster [" + std::to_string(attacked->lo + 1) +
         "," + std::to_string(attacked->hi + 1) + "] at lambda=" +
         format_double(attacked->representative) + ", candidate " + cand.name +
         " (deviation " + format_double(cand.M.deviation()) + "), budget " +
         format_double(sigma_l));

    std::function<Spectrum(double)> resolve;
    if (plan.mode == SplittingMatrix::Mode::Domain) {
      resolve = [&](double t) {
        Domain trial =
            apply_perturbation(dom, cand.field->with_amplitude(t),
                               std::max(dom.order(), 2 * plan.max_frequency));
        return solve(ctx.assemble(trial), plan.solve_count());
      };
    } else if (plan.mode == SplittingMatrix::Mode::Potential) {
      resolve = [&](double t) {
        SimplificationContext trial = ctx;
        trial.potential_terms.emplace_back(*cand.scalar, t);
        return solve(trial.assemble(dom), plan.solve_count());
      };
    } else {
      resolve = [&](double t) {
        SimplificationContext trial = ctx;
        trial.weight_terms.emplace_back(*cand.scalar, t);
        return solve(trial.assemble(dom), plan.solve_count());
      };
    }

    AmplitudeResult amp = amplitude_search(resolve, *attacked, plan, sigma_l, certified);

    IterationRecord rec;
    rec.iteration = iter;
    rec.cluster_lo = attacked->lo;
    rec.cluster_hi = attacked->hi;
    rec.candidate = cand.name;
    rec.amplitude = amp.t;
    rec.deviation = cand.M.deviation();
    rec.halvings = amp.halvings;
    rec.lambda_before.assign(sp.eigenvalues.data(), sp.eigenvalues.data() + sp.count());
    rec.lambda_after.assign(amp.spectrum.eigenvalues.data(),
                            amp.spectrum.eigenvalues.data() + amp.spectrum.count());

    if (plan.mode == SplittingMatrix::Mode::Domain) {
      const PerturbationField applied = cand.field->with_amplitude(amp.t);
      dom = apply_perturbation(dom, applied, std::max(dom.order(), 2 * plan.max_frequency));
      composite.fields.push_back(applied);
    } else if (plan.mode == SplittingMatrix::Mode::Potential) {
      ctx.potential_terms.emplace_back(*cand.scalar, amp.t);
      rep.coefficient_terms.emplace_back(cand.name, amp.t);
    } else {
      ctx.weight_terms.emplace_back(*cand.scalar, amp.t);
      rep.coefficient_terms.emplace_back(cand.name, amp.t);
    }

    const int new_prefix =
        detail::simple_prefix(cluster(amp.spectrum, plan.cluster_rel_tol), plan.q);
    rec.intervals_after = isolating_intervals(amp.spectrum.eigenvalues, new_prefix);
    emit("iter " + std::to_string(iter) + ": amplitude " + format_double(amp.t) + " after " +
         std::to_string(rec.halvings) + " halving(s); simple prefix now " +
         std::to_string(new_prefix));
    rep.iterations.push_back(std::move(rec));
  }
  throw MaxIterations("simplification did not converge in " +
                      std::to_string(plan.max_iterations) + " iterations");
}

}  // namespace fraclab
