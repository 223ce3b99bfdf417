#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

/// Scalar coefficient field: potentials a(x), weights alpha(x), and the
/// perturbation directions b, beta of the genericity loop. Nodal fields live
/// on the grid of the operator they were built from.
struct ScalarField {
  enum class Kind { Constant, Poly1, Poly2, Nodal };
  Kind kind = Kind::Constant;
  double value = 0.0;                 // Constant
  std::vector<double> coeffs;         // Poly1: sum c_k x^k
  double c0 = 0, cx = 0, cy = 0, cxx = 0, cxy = 0, cyy = 0;  // Poly2
  std::vector<double> node_values;    // Nodal, aligned with operator nodes

  static ScalarField constant(double v) {
    ScalarField f;
    f.kind = Kind::Constant;
    f.value = v;
    return f;
  }
  static ScalarField poly1(std::vector<double> c) {
    ScalarField f;
    f.kind = Kind::Poly1;
    f.coeffs = std::move(c);
    return f;
  }
  static ScalarField poly2(double c0, double cx, double cy, double cxx = 0, double cxy = 0,
                           double cyy = 0) {
    ScalarField f;
    f.kind = Kind::Poly2;
    f.c0 = c0;
    f.cx = cx;
    f.cy = cy;
    f.cxx = cxx;
    f.cxy = cxy;
    f.cyy = cyy;
    return f;
  }
  static ScalarField nodal(std::vector<double> values) {
    ScalarField f;
    f.kind = Kind::Nodal;
    f.node_values = std::move(values);
    return f;
  }

  double eval1(double x) const {
    switch (kind) {
      case Kind::Constant:
        return value;
      case Kind::Poly1: {
        double p = 0.0;
        for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) p = p * x + coeffs[k];
        return p;
      }
      default:
        throw Error("scalar field not evaluable at a 1-D point");
    }
  }

  double eval2(const Vec2& p) const {
    switch (kind) {
      case Kind::Constant:
        return value;
      case Kind::Poly2:
        return c0 + cx * p.x() + cy * p.y() + cxx * p.x() * p.x() + cxy * p.x() * p.y() +
               cyy * p.y() * p.y();
      default:
        throw Error("scalar field not evaluable at a 2-D point");
    }
  }

  bool pointwise() const { return kind != Kind::Nodal; }

  double sup_norm(const std::vector<double>& samples1, const std::vector<Vec2>& samples2) const {
    double m = 0.0;
    if (kind == Kind::Nodal)
      for (double v : node_values) m = std::max(m, std::abs(v));
    else if (!samples1.empty())
      for (double x : samples1) m = std::max(m, std::abs(eval1(x)));
    else
      for (const Vec2& p : samples2) m = std::max(m, std::abs(eval2(p)));
    return m;
  }
};

/// Precomputed cell geometry of the 2-D collocation grid: interior nodes are
/// cells of a uniform grid whose centers lie in Omega; exterior cells feed the
/// Dirichlet tail. Shared (immutable) between base and transformed assemblies.
struct Grid2DGeometry {
  Domain domain;
  double h = 0.0;
  Vec2 origin{0, 0};  // lower-left corner of the cell index space
  int nx = 0, ny = 0;
  std::vector<Vec2> nodes;                 // interior cell centers
  std::vector<Eigen::Vector2i> node_ij;    // their integer coordinates
  std::vector<int> node_id;                // (nx*ny) lattice -> node index or -1
  std::vector<Vec2> ext_cells;             // exterior cell centers (extended box)
  std::vector<Eigen::Vector2i> ext_ij;
  double r_geom = 0.0;  // per-node tail split radius is r_geom + |x_i - center|

  int id_at(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return -1;
    return node_id[static_cast<std::size_t>(iy) * nx + ix];
  }
};

inline std::shared_ptr<const Grid2DGeometry> build_grid2d_geometry(const Domain& d, double h,
                                                                   int node_cap = 4000) {
  if (d.kind != Domain::Kind::Star2d) throw Error("2-D grid needs a star2d domain");
  auto g = std::make_shared<Grid2DGeometry>();
  g->domain = d;
  g->h = h;
  const double maxR = d.max_radius();
  g->r_geom = 1.7 * maxR;
  const double ext_half = g->r_geom + maxR + h;  // covers every node's tail disk
  // interior index space spans the domain bounding square
  const double half = maxR + h;
  g->origin = d.center - Vec2(half, half);
  g->nx = static_cast<int>(std::ceil(2.0 * half / h));
  g->ny = g->nx;
  g->node_id.assign(static_cast<std::size_t>(g->nx) * g->ny, -1);
  for (int iy = 0; iy < g->ny; ++iy)
    for (int ix = 0; ix < g->nx; ++ix) {
      const Vec2 c = g->origin + Vec2((ix + 0.5) * h, (iy + 0.5) * h);
      if (d.contains(c)) {
        g->node_id[static_cast<std::size_t>(iy) * g->nx + ix] =
            static_cast<int>(g->nodes.size());
        g->nodes.push_back(c);
        g->node_ij.push_back({ix, iy});
      }
    }
  if (static_cast<int>(g->nodes.size()) > node_cap)
    throw TooManyNodes("grid has " + std::to_string(g->nodes.size()) + " nodes, cap " +
                       std::to_string(node_cap));
  if (g->nodes.size() < 9) throw GridTooCoarse("fewer than 9 interior nodes");
  // exterior cells over the extended box (same lattice, indices may be negative)
  const int lo = static_cast<int>(std::floor((d.center.x() - ext_half - g->origin.x()) / h));
  const int hi = static_cast<int>(std::ceil((d.center.x() + ext_half - g->origin.x()) / h));
  for (int iy = lo; iy <= hi; ++iy)
    for (int ix = lo; ix <= hi; ++ix) {
      if (g->id_at(ix, iy) >= 0) continue;
      const Vec2 c = g->origin + Vec2((ix + 0.5) * h, (iy + 0.5) * h);
      if ((c - d.center).norm() > ext_half + h) continue;
      g->ext_cells.push_back(c);
      g->ext_ij.push_back({ix, iy});
    }
  return g;
}

/// Stiffness/mass pencil in a chosen basis.
struct DiscreteOperator {
  enum class Method { Spectral1D, Grid1D, Grid2D };
  Method method = Method::Spectral1D;
  double s = 0.5;
  Domain domain;

  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;

  // true while the pencil represents the unmodified fractional Dirichlet
  // form; coefficient terms and pullbacks clear it (boundary-kernel density
  // representations only apply to the pure problem)
  bool pure_fractional = true;

  // spectral
  int N = 0;

  // grids
  double h = 0.0;
  std::vector<double> nodes1;
  std::shared_ptr<const Grid2DGeometry> geom2;

  int size() const { return static_cast<int>(stiffness.rows()); }

  std::string basis_meta() const {
    switch (method) {
      case Method::Spectral1D:
        return "spectral1d s=" + format_double(s) + " N=" + std::to_string(N) + " interval=[" +
               format_double(domain.a) + "," + format_double(domain.b) + "]";
      case Method::Grid1D:
        return "grid1d s=" + format_double(s) + " h=" + format_double(h) + " interval=[" +
               format_double(domain.a) + "," + format_double(domain.b) + "]";
      case Method::Grid2D:
        return "grid2d s=" + format_double(s) + " h=" + format_double(h) +
               " nodes=" + std::to_string(stiffness.rows());
    }
    return "unknown";
  }

  /// Nodal samples of a scalar field on this operator's collocation nodes
  /// (grids only).
  std::vector<double> sample_field(const ScalarField& f) const {
    std::vector<double> v;
    if (f.kind == ScalarField::Kind::Nodal) {
      if (static_cast<int>(f.node_values.size()) != size())
        throw Error("nodal field size mismatch");
      return f.node_values;
    }
    if (method == Method::Grid1D) {
      v.reserve(nodes1.size());
      for (double x : nodes1) v.push_back(f.eval1(x));
    } else if (method == Method::Grid2D) {
      v.reserve(geom2->nodes.size());
      for (const Vec2& p : geom2->nodes) v.push_back(f.eval2(p));
    } else {
      throw Error("sample_field needs a grid operator");
    }
    return v;
  }
};

}  // namespace fraclab
