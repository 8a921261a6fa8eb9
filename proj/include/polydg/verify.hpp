#pragma once

#include "polydg/basis.hpp"
#include "polydg/mesh.hpp"
#include "polydg/metrics.hpp"
#include "polydg/parallel.hpp"
#include "polydg/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace polydg {

// Observed maximum of a Rayleigh quotient against its proven bound. `argmax`
// holds the maximiser's coefficients in scaled monomials x^i y^j with
// x = (X - center) / scale, ordered as monomial_exponents(p).
struct InequalityWitness {
  std::string kind;
  int cell = -1;
  int p = 0;
  double max_ratio = 0.0;
  double bound = 0.0;
  int sample_count = 0;
  Point center = Point::Zero();
  Vec2 scale = Vec2::Ones();
  std::vector<double> argmax;
  // Harmonic check only: the same quotient over all of P_p (not asserted).
  double full_space_ratio = std::numeric_limits<double>::quiet_NaN();

  static constexpr double kRelTol = 1e-8;
  bool holds() const { return max_ratio <= bound * (1.0 + kRelTol); }
  // Relative slack against the bound inflated by kRelTol; negative exactly when
  // holds() is false. Bounds attained with equality (p = 0) give ~kRelTol.
  double slack() const { return 1.0 + kRelTol - max_ratio / bound; }
};

namespace detail {

struct PencilMax {
  double value = 0.0;
  Eigen::VectorXd vector;
};

// Largest eigenvalue of K v = lambda M v for symmetric K and SPD M.
inline PencilMax pencil_max(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  if (es.info() != Eigen::Success) throw std::runtime_error("pencil_max: generalized eigensolve failed");
  const Eigen::Index last = es.eigenvalues().size() - 1;
  return {es.eigenvalues()(last), es.eigenvectors().col(last)};
}

inline Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const QuadratureRule& q) {
  const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), static_cast<Eigen::Index>(q.size()));
  return a.transpose() * w.asDiagonal() * b;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline void fill_argmax(InequalityWitness& w, const ElementBasis& b, const Eigen::VectorXd& member) {
  Eigen::VectorXd c = b.coefficients() * member;
  const double m = c.cwiseAbs().maxCoeff();
  if (m > 0.0) c /= m;
  w.center = b.center();
  w.scale = b.half_widths();
  w.argmax = to_std(c);
}

}  // namespace detail

// ||v||_F^2 <= (p+1)(p+d)/d |F|/|T| ||v||_T^2 on a triangle T with edge F =
// (T[e], T[e+1]). The maximum comes from the eigensolve of the face and cell
// Gram pair; `n_samples` random members are tried as well. The witness
// polynomial is expressed in the rotated frame of the longest edge.
inline InequalityWitness check_simplex_trace(const Triangle& t, int edge, int p, int n_samples = 0,
                                             std::uint64_t seed = 1) {
  if (edge < 0 || edge > 2) throw std::invalid_argument("check_simplex_trace: edge index must be 0, 1 or 2");
  if (p < 0) throw std::invalid_argument("check_simplex_trace: negative degree");
  const double area = t.area();
  if (!(area > 0.0)) throw std::invalid_argument("check_simplex_trace: degenerate triangle");
  // Ratio and bound are invariant under rigid motions; work in a frame whose
  // x axis follows the longest edge so scaled monomials stay well conditioned.
  int longest = 0;
  for (int k = 1; k < 3; ++k)
    if ((t.v[(k + 1) % 3] - t.v[k]).norm() > (t.v[(longest + 1) % 3] - t.v[longest]).norm()) longest = k;
  const Vec2 dir = (t.v[(longest + 1) % 3] - t.v[longest]).normalized();
  Eigen::Matrix2d rot;
  rot << dir.x(), dir.y(), -dir.y(), dir.x();
  Triangle local;
  for (int k = 0; k < 3; ++k) local.v[k] = rot * (t.v[k] - t.v[longest]);
  const Point a = local.v[edge], b = local.v[(edge + 1) % 3];
  const double flen = (b - a).norm();
  Point lo = local.v[0], hi = local.v[0];
  for (const auto& v : local.v) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  ElementBasis basis(p, 0.5 * (lo + hi), 0.5 * (hi - lo));
  const QuadratureRule qt = triangle_rule(local, 2 * p);
  const QuadratureRule qf = segment_rule(a, b, 2 * p);
  // Orthonormalise by QR of the weighted Vandermonde matrix.
  {
    Eigen::MatrixXd vw = basis.values(qt.points);
    for (std::size_t i = 0; i < qt.size(); ++i) vw.row(static_cast<Eigen::Index>(i)) *= std::sqrt(qt.weights[i]);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(vw);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(basis.dim()).triangularView<Eigen::Upper>();
    basis.set_coefficients(
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(basis.dim(), basis.dim())), true);
  }
  const Eigen::MatrixXd vt = basis.values(qt.points);
  const Eigen::MatrixXd vf = basis.values(qf.points);
  const Eigen::MatrixXd M = detail::weighted_gram(vt, vt, qt);
  const Eigen::MatrixXd K = detail::weighted_gram(vf, vf, qf);

  InequalityWitness w;
  w.kind = "simplex_trace";
  w.p = p;
  w.bound = double(p + 1) * double(p + 2) / 2.0 * flen / area;
  const detail::PencilMax top = detail::pencil_max(K, M);
  w.max_ratio = top.value;
  Eigen::VectorXd best = top.vector;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd c(basis.dim());
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = normal(rng);
    const double r = c.dot(K * c) / c.dot(M * c);
    if (r > w.max_ratio) {
      w.max_ratio = r;
      best = c;
    }
  }
  w.sample_count = n_samples;
  detail::fill_argmax(w, basis, best);
  return w;
}

// ||v||_{boundary of K}^2 <= C_s (p+1)(p+d)/h_K ||v||_K^2 over P_p.
// A non-positive `c_s` uses the cell's own face-simplex constant.
inline InequalityWitness check_polytopic_trace(const PolyMesh& mesh, int c, int p, double c_s = 0.0) {
  const Cell& cell = mesh.cell(c);
  if (!(c_s > 0.0)) c_s = cell_face_simplex_constant(mesh, c);
  const QuadratureRule qc = cell_rule(cell, 2 * p);
  const ElementBasis basis = build_space(cell, c, p, true, qc);
  const Eigen::MatrixXd vc = basis.values(qc.points);
  const Eigen::MatrixXd M = detail::weighted_gram(vc, vc, qc);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(basis.dim(), basis.dim());
  for (int f : cell.face_ids) {
    const QuadratureRule qf = face_rule(mesh.face(f), 2 * p);
    const Eigen::MatrixXd vf = basis.values(qf.points);
    K += detail::weighted_gram(vf, vf, qf);
  }
  InequalityWitness w;
  w.kind = "polytopic_trace";
  w.cell = c;
  w.p = p;
  w.bound = c_s * degree_scale(p, cell.diameter, mesh.dimension());
  const detail::PencilMax top = detail::pencil_max(K, M);
  w.max_ratio = top.value;
  detail::fill_argmax(w, basis, top.vector);
  return w;
}

// ||grad v||_K^2 <= (C_s (p+1)(p+d)/h_K)^2 ||v||_K^2 over harmonic v of degree
// <= p. Also records the same quotient over all of P_p.
inline InequalityWitness check_harmonic_h1(const PolyMesh& mesh, int c, int p, double c_s = 0.0) {
  if (p < 0 || p > 6) throw std::invalid_argument("check_harmonic_h1: degree must lie in 0..6");
  const Cell& cell = mesh.cell(c);
  if (!(c_s > 0.0)) c_s = cell_face_simplex_constant(mesh, c);
  const QuadratureRule q = cell_rule(cell, 2 * p);
  auto quotient = [&](const ElementBasis& b) {
    const BasisTables t = b.eval(q.points);
    const Eigen::MatrixXd M = detail::weighted_gram(t.value, t.value, q);
    const Eigen::MatrixXd K = detail::weighted_gram(t.dx, t.dx, q) + detail::weighted_gram(t.dy, t.dy, q);
    return detail::pencil_max(K, M);
  };
  const ElementBasis h = harmonic_basis_on(cell, p);
  InequalityWitness w;
  w.kind = "harmonic_h1";
  w.cell = c;
  w.p = p;
  const double g = c_s * degree_scale(p, cell.diameter, mesh.dimension());
  w.bound = g * g;
  const detail::PencilMax top = quotient(h);
  w.max_ratio = std::max(0.0, top.value);
  detail::fill_argmax(w, h, top.vector);
  w.full_space_ratio = quotient(build_space(cell, c, p, true, q)).value;
  return w;
}

// Outcome of one inequality suite over many witnesses.
struct SuiteReport {
  std::string name;
  int checks = 0;
  int violations = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  InequalityWitness worst;  // smallest slack
  std::vector<InequalityWitness> failures;

  bool passed() const { return violations == 0; }

  void add(const InequalityWitness& w) {
    ++checks;
    if (!w.holds()) {
      ++violations;
      failures.push_back(w);
    }
    if (w.slack() < min_slack) {
      min_slack = w.slack();
      worst = w;
    }
  }
  void merge(const SuiteReport& o) {
    checks += o.checks;
    violations += o.violations;
    failures.insert(failures.end(), o.failures.begin(), o.failures.end());
    if (o.min_slack < min_slack) {
      min_slack = o.min_slack;
      worst = o.worst;
    }
  }
};

// Random triangles with vertices uniform in the unit square (re-drawn when
// nearly degenerate), every edge, p = 0..p_max.
inline SuiteReport simplex_trace_suite(int n_triangles, int p_max, std::uint64_t seed, int samples_per_check = 20,
                                       int threads = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Triangle> tris;
  while (static_cast<int>(tris.size()) < n_triangles) {
    Triangle t{{Point(u(rng), u(rng)), Point(u(rng), u(rng)), Point(u(rng), u(rng))}};
    if (t.signed_area() < 0.0) std::swap(t.v[1], t.v[2]);
    if (t.area() > 1e-4) tris.push_back(t);
  }
  std::vector<SuiteReport> part(tris.size());
  parallel_for(static_cast<int>(tris.size()), threads, [&](int i) {
    for (int p = 0; p <= p_max; ++p)
      for (int e = 0; e < 3; ++e)
        part[i].add(check_simplex_trace(tris[i], e, p, samples_per_check, seed + 7919u * static_cast<unsigned>(i)));
  });
  SuiteReport r;
  r.name = "simplex_trace";
  for (const auto& s : part) r.merge(s);
  return r;
}

// Polytopic trace and harmonic H1 bounds on every cell of a mesh, with the
// mesh-wide observed C_s.
inline SuiteReport polytopic_trace_suite(const PolyMesh& mesh, int p, int threads = 1) {
  const double c_s = compute_metrics(mesh, std::max(p, 2)).face_simplex;
  std::vector<SuiteReport> part(static_cast<std::size_t>(mesh.num_cells()));
  parallel_for(mesh.num_cells(), threads, [&](int c) { part[c].add(check_polytopic_trace(mesh, c, p, c_s)); });
  SuiteReport r;
  r.name = "polytopic_trace";
  for (const auto& s : part) r.merge(s);
  return r;
}

inline SuiteReport harmonic_h1_suite(const PolyMesh& mesh, int p, int threads = 1) {
  const double c_s = compute_metrics(mesh, std::max(p, 2)).face_simplex;
  std::vector<SuiteReport> part(static_cast<std::size_t>(mesh.num_cells()));
  parallel_for(mesh.num_cells(), threads, [&](int c) { part[c].add(check_harmonic_h1(mesh, c, p, c_s)); });
  SuiteReport r;
  r.name = "harmonic_h1";
  for (const auto& s : part) r.merge(s);
  return r;
}

// Observed harmonic quotients of one cell on dilated copies of the mesh,
// multiplied by s^2; constant in s when the quotient scales as h^-2.
inline std::vector<double> harmonic_dilation_profile(const PolyMesh& mesh, int c, int p,
                                                     const std::vector<double>& factors) {
  std::vector<double> out;
  for (double s : factors) {
    const PolyMesh m = mesh.transformed(s * Eigen::Matrix2d::Identity(), Vec2::Zero());
    out.push_back(check_harmonic_h1(m, c, p).max_ratio * s * s);
  }
  return out;
}

}  // namespace polydg
