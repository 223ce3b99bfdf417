#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraclab/genericity.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/operators.hpp"
#include "fraclab/shape_calculus.hpp"
#include "fraclab/spectrum.hpp"
#include "fraclab/util.hpp"

namespace fraclab {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// domains and fields
// ---------------------------------------------------------------------------

inline Json to_json(const Domain& d) {
  Json j;
  if (d.kind == Domain::Kind::Interval) {
    j["kind"] = "interval";
    j["a"] = d.a;
    j["b"] = d.b;
  } else {
    j["kind"] = "star2d";
    j["center"] = {d.center.x(), d.center.y()};
    j["cos"] = d.cos_coeffs;
    j["sin"] = d.sin_coeffs;
  }
  return j;
}

inline Domain domain_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "interval") {
    const double a = j.at("a").get<double>(), b = j.at("b").get<double>();
    if (!(a < b)) throw ConfigError("domain: requires a < b");
    return Domain::interval(a, b);
  }
  if (kind == "star2d") {
    const auto c = j.at("center").get<std::vector<double>>();
    if (c.size() != 2) throw ConfigError("domain.center: expected two coordinates");
    return Domain::star(Vec2(c[0], c[1]), j.at("cos").get<std::vector<double>>(),
                        j.value("sin", std::vector<double>{}));
  }
  throw ConfigError("domain.kind: unknown kind '" + kind + "'");
}

inline Json to_json(const PerturbationField& f) {
  Json j;
  switch (f.family) {
    case PerturbationField::Family::Affine1D:
      j["family"] = "affine1d";
      j["offset"] = f.off1;
      j["slope"] = f.lin1;
      break;
    case PerturbationField::Family::Affine2D:
      j["family"] = "affine2d";
      j["offset"] = {f.off2.x(), f.off2.y()};
      j["linear"] = {{f.lin2(0, 0), f.lin2(0, 1)}, {f.lin2(1, 0), f.lin2(1, 1)}};
      break;
    case PerturbationField::Family::NormalFourier:
      j["family"] = "normal_fourier";
      j["center"] = {f.center.x(), f.center.y()};
      j["radius_cos"] = f.rad_cos;
      j["radius_sin"] = f.rad_sin;
      j["g_cos"] = f.g_cos;
      j["g_sin"] = f.g_sin;
      break;
    case PerturbationField::Family::Poly1D:
      j["family"] = "poly1d";
      j["coeffs"] = f.poly;
      j["interval"] = {f.win_a, f.win_b};
      break;
  }
  j["amplitude"] = f.amplitude;
  return j;
}

inline PerturbationField field_from_json(const Json& j, const Domain& dom) {
  const std::string family = j.at("family").get<std::string>();
  PerturbationField f;
  if (family == "affine1d") {
    f = PerturbationField::affine1d(j.at("offset").get<double>(), j.at("slope").get<double>(),
                                    dom.a - 1.0, dom.b + 1.0);
  } else if (family == "affine2d") {
    const auto off = j.at("offset").get<std::vector<double>>();
    const auto lin = j.at("linear").get<std::vector<std::vector<double>>>();
    Mat2 L;
    L << lin[0][0], lin[0][1], lin[1][0], lin[1][1];
    const double R = dom.max_radius();
    f = PerturbationField::affine2d(Vec2(off[0], off[1]), L,
                                    dom.center - Vec2(2 * R, 2 * R),
                                    dom.center + Vec2(2 * R, 2 * R));
  } else if (family == "normal_fourier") {
    f = PerturbationField::normal_fourier(dom, j.at("g_cos").get<std::vector<double>>(),
                                          j.value("g_sin", std::vector<double>{}));
  } else if (family == "poly1d") {
    f = PerturbationField::poly1d(dom, j.at("coeffs").get<std::vector<double>>());
  } else {
    throw ConfigError("field.family: unknown family '" + family + "'");
  }
  return f.with_amplitude(j.value("amplitude", 1.0));
}

// ---------------------------------------------------------------------------
// matrices and spectra
// ---------------------------------------------------------------------------

inline void write_matrix(const std::string& path, const Eigen::MatrixXd& M,
                         const std::string& basis_meta) {
  std::ostringstream os;
  os << "# fraclab-matrix " << M.rows() << " " << M.cols() << "\n";
  os << "# basis: " << basis_meta << "\n";
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      if (j) os << " ";
      os << format_double(M(i, j));
    }
    os << "\n";
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << os.str();
  }
  std::rename(tmp.c_str(), path.c_str());
}

inline Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open matrix file " + path);
  std::string hash_line;
  std::string tag;
  int rows = 0, cols = 0;
  in >> tag >> tag >> rows >> cols;
  std::getline(in, hash_line);
  std::getline(in, hash_line);  // basis line
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) in >> M(i, j);
  return M;
}

/// CSV with '#' comment lines and a config-hash stamp; written atomically.
struct CsvWriter {
  std::ostringstream body;
  std::string header;
  std::uint64_t config_hash = 0;

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body << ",";
      body << cells[i];
    }
    body << "\n";
  }

  std::string str() const {
    std::ostringstream os;
    os << "# config-hash: " << hex64(config_hash) << "\n" << header << "\n" << body.str();
    return os.str();
  }

  void write(const std::string& path) const {
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << str();
    }
    std::rename(tmp.c_str(), path.c_str());
  }
};

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

inline Json to_json(const SplittingMatrix& M, double s) {
  Json j;
  j["mode"] = M.mode == SplittingMatrix::Mode::Domain      ? "domain"
              : M.mode == SplittingMatrix::Mode::Potential ? "potential"
                                                           : "weight";
  j["cluster"] = {M.cluster_ref.lo + 1, M.cluster_ref.hi + 1};
  j["lambda0"] = M.lambda0;
  j["normalization"] = M.normalization;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < M.matrix.rows(); ++i) {
    std::vector<double> r;
    for (int k = 0; k < M.matrix.cols(); ++k) r.push_back(M.matrix(i, k));
    rows.push_back(std::move(r));
  }
  j["matrix"] = rows;
  const Eigen::VectorXd sl = M.slope_eigenvalues();
  std::vector<double> lambda_slopes(sl.data(), sl.data() + sl.size());
  j["lambda_slopes"] = lambda_slopes;
  // the compact-operator convention: mu = 1/lambda, mu' = -lambda'/lambda^2
  std::vector<double> mu_slopes;
  for (double v : lambda_slopes) mu_slopes.push_back(-v / (M.lambda0 * M.lambda0));
  j["mu_slopes"] = mu_slopes;
  j["deviation"] = M.deviation();
  // distance of the slope matrix to -2 s lambda0 I; near zero for dilation
  const int nu = static_cast<int>(M.matrix.rows());
  j["dilation_closure_residual"] =
      (M.slope_matrix() + 2.0 * s * M.lambda0 * Eigen::MatrixXd::Identity(nu, nu)).norm();
  return j;
}

inline Json to_json(const Interval& iv) { return Json{iv.lo, iv.hi}; }

inline Json to_json(const SimplificationReport& rep) {
  Json j;
  j["success"] = rep.success;
  j["mode"] = rep.mode;
  j["q"] = rep.q;
  Json its = Json::array();
  for (const auto& it : rep.iterations) {
    Json r;
    r["iteration"] = it.iteration;
    r["cluster"] = {it.cluster_lo + 1, it.cluster_hi + 1};
    r["candidate"] = it.candidate;
    r["amplitude"] = it.amplitude;
    r["deviation"] = it.deviation;
    r["halvings"] = it.halvings;
    r["lambda_before"] = it.lambda_before;
    r["lambda_after"] = it.lambda_after;
    Json ivs = Json::array();
    for (const auto& iv : it.intervals_after) ivs.push_back(to_json(iv));
    r["intervals_after"] = ivs;
    its.push_back(std::move(r));
  }
  j["iterations"] = its;
  j["final_eigenvalues"] = rep.final_eigenvalues;
  Json ivs = Json::array();
  for (const auto& iv : rep.final_intervals) ivs.push_back(to_json(iv));
  j["final_intervals"] = ivs;
  j["min_rel_gap"] = rep.min_rel_gap;
  j["total_c1_bound"] = rep.total_c1_bound;
  j["budget_sum"] = rep.budget_sum;
  if (rep.final_domain.kind == Domain::Kind::Star2d || rep.mode == "domain")
    j["final_domain"] = to_json(rep.final_domain);
  if (!rep.coefficient_terms.empty()) {
    Json terms = Json::array();
    for (const auto& [name, amp] : rep.coefficient_terms)
      terms.push_back(Json{{"name", name}, {"amplitude", amp}});
    j["terms"] = terms;
  }
  return j;
}

}  // namespace fraclab
