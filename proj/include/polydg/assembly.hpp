#pragma once

#include "polydg/basis.hpp"
#include "polydg/mesh.hpp"
#include "polydg/parallel.hpp"
#include "polydg/penalty.hpp"
#include "polydg/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polydg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct DofMap {
  std::vector<int> offset;
  std::vector<int> size;
  int total = 0;

  static DofMap from_sizes(std::span<const int> sizes) {
    DofMap m;
    for (int s : sizes) {
      m.offset.push_back(m.total);
      m.size.push_back(s);
      m.total += s;
    }
    return m;
  }
  int num_blocks() const { return static_cast<int>(size.size()); }
};

struct DiscretizationOptions {
  std::optional<bool> orthonormalize;  // default: per degree
  int quad_extra = 2;                  // rules are exact to degree 2p + quad_extra
  int threads = 1;
};

// Everything needed to assemble on one mesh: bases, quadrature, penalties.
struct Discretization {
  const PolyMesh* mesh = nullptr;
  std::vector<int> degrees;
  std::vector<ElementBasis> bases;
  std::vector<QuadratureRule> cell_quad;
  std::vector<QuadratureRule> face_quad;
  PenaltyField penalty;
  DofMap dofs;
  int threads = 1;

  const PolyMesh& m() const { return *mesh; }
  Eigen::VectorXd restrict_to(int cell, const Eigen::VectorXd& u) const {
    return u.segment(dofs.offset[cell], dofs.size[cell]);
  }
};

inline Discretization make_discretization(const PolyMesh& mesh, std::span<const int> degrees, PenaltyField penalty,
                                          const DiscretizationOptions& opt = {}) {
  if (static_cast<int>(degrees.size()) != mesh.num_cells())
    throw std::invalid_argument("make_discretization: one degree per cell is required");
  if (static_cast<int>(penalty.sigma.size()) != mesh.num_faces() ||
      static_cast<int>(penalty.tau.size()) != mesh.num_faces())
    throw std::invalid_argument("make_discretization: penalty does not cover every face");
  Discretization d;
  d.mesh = &mesh;
  d.degrees.assign(degrees.begin(), degrees.end());
  d.penalty = std::move(penalty);
  d.threads = std::max(1, opt.threads);
  const int nc = mesh.num_cells();
  d.bases.resize(nc);
  d.cell_quad.resize(nc);
  parallel_for(nc, d.threads, [&](int c) {
    const int p = d.degrees[c];
    d.cell_quad[c] = cell_rule(mesh.cell(c), 2 * p + opt.quad_extra);
    const bool ortho = opt.orthonormalize.value_or(default_orthonormalize(p));
    d.bases[c] = build_basis(mesh.cell(c), c, p, ortho, d.cell_quad[c]);
  });
  d.face_quad.resize(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    int p = d.degrees[face.cells[0]];
    if (!face.is_boundary()) p = std::max(p, d.degrees[face.cells[1]]);
    d.face_quad[f] = face_rule(face, 2 * p + opt.quad_extra);
  }
  std::vector<int> sizes(nc);
  for (int c = 0; c < nc; ++c) sizes[c] = d.bases[c].dim();
  d.dofs = DofMap::from_sizes(sizes);
  return d;
}

// Which parts of the face form to assemble. The DG-norm Gram matrix is the
// form without consistency terms.
struct FormParts {
  bool volume = true;
  bool consistency = true;
  bool penalty = true;
  bool projected = false;  // replace face traces of the Laplacian by its L2 projection onto P_{p-2}
};

// Traces of one side's basis on a face: values, normal derivative, Laplacian
// and normal derivative of the Laplacian (normal = face.normal, outward of cells[0]).
struct SideTraces {
  Eigen::MatrixXd v, dn, lap, dlap_n;
};

// L2 projection onto P_{p-2}(cell): coefficients in the raw scaled monomials
// of `low`, from samples of w at the quadrature points.
inline Eigen::VectorXd l2_project_down(const ElementBasis& low, const QuadratureRule& quad,
                                       const Eigen::Ref<const Eigen::VectorXd>& w_at_points) {
  const Eigen::MatrixXd v = low.values(quad.points);
  const Eigen::Map<const Eigen::VectorXd> w(quad.weights.data(), static_cast<Eigen::Index>(quad.weights.size()));
  const Eigen::MatrixXd mass = v.transpose() * w.asDiagonal() * v;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(mass);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
    throw std::runtime_error("l2_project_down: singular mass matrix (quadrature under-integration?)");
  return ldlt.solve(v.transpose() * w.asDiagonal() * w_at_points);
}

namespace detail {

inline SideTraces side_traces(const Discretization& d, int cell, const QuadratureRule& q, const Vec2& n,
                              const FormParts& parts) {
  const ElementBasis& b = d.bases[cell];
  const BasisTables t = b.eval(q.points);
  SideTraces s;
  s.v = t.value;
  s.dn = n.x() * t.dx + n.y() * t.dy;
  if (!parts.projected) {
    s.lap = t.lap;
    s.dlap_n = n.x() * t.dlap_x + n.y() * t.dlap_y;
    return s;
  }
  // Pi(Delta phi) for every basis function, as a polynomial of degree p - 2
  // built from cell-quadrature samples, then traced on the face.
  const int p = d.degrees[cell];
  ElementBasis low(p - 2, b.center(), b.half_widths());
  const QuadratureRule& cq = d.cell_quad[cell];
  const Eigen::MatrixXd lap_cell = b.eval(cq.points).lap;
  Eigen::MatrixXd proj(low.num_monomials(), b.dim());
  for (int k = 0; k < b.dim(); ++k) proj.col(k) = l2_project_down(low, cq, lap_cell.col(k));
  const BasisTables lt = low.monomial_tables(q.points);
  s.lap = lt.value * proj;
  s.dlap_n = (n.x() * lt.dx + n.y() * lt.dy) * proj;
  return s;
}

struct LocalBlock {
  int c0 = -1, c1 = -1;
  Eigen::MatrixXd m;  // (n0 + n1) square, side 0 first
};

inline LocalBlock face_matrix(const Discretization& d, int f, const FormParts& parts) {
  const PolyMesh& mesh = d.m();
  const Face& face = mesh.face(f);
  const QuadratureRule& q = d.face_quad[f];
  const bool boundary = face.is_boundary();
  const int nsides = boundary ? 1 : 2;
  const double omega = boundary ? 1.0 : 0.5;

  LocalBlock out;
  out.c0 = face.cells[0];
  out.c1 = face.cells[1];
  int ntot = 0;
  std::array<SideTraces, 2> tr;
  std::array<int, 2> nloc{0, 0};
  for (int s = 0; s < nsides; ++s) {
    tr[s] = side_traces(d, face.cells[s], q, face.normal, parts);
    nloc[s] = static_cast<int>(tr[s].v.cols());
    ntot += nloc[s];
  }
  const int nq = static_cast<int>(q.size());
  Eigen::MatrixXd J0(nq, ntot), J1(nq, ntot), M2(nq, ntot), M3(nq, ntot);
  int col = 0;
  for (int s = 0; s < nsides; ++s) {
    const double sg = s == 0 ? 1.0 : -1.0;
    J0.middleCols(col, nloc[s]) = sg * tr[s].v;
    J1.middleCols(col, nloc[s]) = sg * tr[s].dn;
    M2.middleCols(col, nloc[s]) = omega * tr[s].lap;
    M3.middleCols(col, nloc[s]) = omega * tr[s].dlap_n;
    col += nloc[s];
  }
  const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), nq);
  out.m = Eigen::MatrixXd::Zero(ntot, ntot);
  if (parts.consistency) {
    const Eigen::MatrixXd c = J0.transpose() * w.asDiagonal() * M3 - J1.transpose() * w.asDiagonal() * M2;
    out.m += c + c.transpose();
  }
  if (parts.penalty) {
    out.m += d.penalty.sigma[f] * (J0.transpose() * w.asDiagonal() * J0);
    out.m += d.penalty.tau[f] * (J1.transpose() * w.asDiagonal() * J1);
  }
  return out;
}

inline Eigen::MatrixXd volume_matrix(const Discretization& d, int c) {
  const QuadratureRule& q = d.cell_quad[c];
  const Eigen::MatrixXd lap = d.bases[c].eval(q.points).lap;
  const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), static_cast<Eigen::Index>(q.size()));
  return lap.transpose() * w.asDiagonal() * lap;
}

inline void add_block(std::vector<Eigen::Triplet<double>>& trip, const Eigen::MatrixXd& m, int row0, int col0,
                      int r, int c, int nr, int nc) {
  for (int j = 0; j < nc; ++j)
    for (int i = 0; i < nr; ++i) {
      const double v = m(r + i, c + j);
      if (v != 0.0) trip.emplace_back(row0 + i, col0 + j, v);
    }
}

}  // namespace detail

// Global matrix of the requested parts of the form. Local matrices are
// computed in parallel and scattered in a fixed order, so the result does not
// depend on the thread count.
inline SparseMatrix assemble_form(const Discretization& d, const FormParts& parts) {
  const PolyMesh& mesh = d.m();
  for (int f = 0; f < mesh.num_faces(); ++f)
    if (!(d.penalty.sigma[f] > 0.0) || !(d.penalty.tau[f] > 0.0))
      throw std::invalid_argument("assemble: missing or non-positive penalty on face " + std::to_string(f));

  std::vector<Eigen::MatrixXd> vol(parts.volume ? mesh.num_cells() : 0);
  if (parts.volume) parallel_for(mesh.num_cells(), d.threads, [&](int c) { vol[c] = detail::volume_matrix(d, c); });
  std::vector<detail::LocalBlock> faces(mesh.num_faces());
  if (parts.consistency || parts.penalty)
    parallel_for(mesh.num_faces(), d.threads, [&](int f) { faces[f] = detail::face_matrix(d, f, parts); });

  std::vector<Eigen::Triplet<double>> trip;
  std::size_t estimate = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) estimate += std::size_t(d.dofs.size[c]) * d.dofs.size[c];
  for (const auto& b : faces) estimate += std::size_t(b.m.size());
  trip.reserve(estimate);
  for (std::size_t c = 0; c < vol.size(); ++c) {
    const int n = d.dofs.size[c], o = d.dofs.offset[c];
    detail::add_block(trip, vol[c], o, o, 0, 0, n, n);
  }
  for (const auto& b : faces) {
    if (b.m.size() == 0) continue;
    const int n0 = d.dofs.size[b.c0], o0 = d.dofs.offset[b.c0];
    detail::add_block(trip, b.m, o0, o0, 0, 0, n0, n0);
    if (b.c1 >= 0) {
      const int n1 = d.dofs.size[b.c1], o1 = d.dofs.offset[b.c1];
      detail::add_block(trip, b.m, o0, o1, 0, n0, n0, n1);
      detail::add_block(trip, b.m, o1, o0, n0, 0, n1, n0);
      detail::add_block(trip, b.m, o1, o1, n0, n0, n1, n1);
    }
  }
  SparseMatrix A(d.dofs.total, d.dofs.total);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

inline SparseMatrix assemble_bilinear(const Discretization& d) { return assemble_form(d, FormParts{}); }

// Form with face traces of Delta replaced by their projection onto P_{p-2}.
inline SparseMatrix assemble_inconsistent(const Discretization& d) {
  FormParts parts;
  parts.projected = true;
  return assemble_form(d, parts);
}

// Gram matrix of the DG norm on the discrete space.
inline SparseMatrix assemble_dg_gram(const Discretization& d) {
  FormParts parts;
  parts.consistency = false;
  return assemble_form(d, parts);
}

// Element mass matrix (block diagonal L2 Gram).
inline SparseMatrix assemble_mass(const Discretization& d) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < d.m().num_cells(); ++c) {
    const QuadratureRule& q = d.cell_quad[c];
    const Eigen::MatrixXd v = d.bases[c].values(q.points);
    const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), static_cast<Eigen::Index>(q.size()));
    const Eigen::MatrixXd m = v.transpose() * w.asDiagonal() * v;
    detail::add_block(trip, m, d.dofs.offset[c], d.dofs.offset[c], 0, 0, d.dofs.size[c], d.dofs.size[c]);
  }
  SparseMatrix M(d.dofs.total, d.dofs.total);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

using ScalarField = std::function<double(const Point&)>;
using BoundaryField = std::function<double(const Point&, const Vec2&)>;  // (x, outward normal)

// l(v) = sum_K int f v + sum_{boundary F} int g_D (grad(Lap v).n + sigma v) + g_N (tau grad v.n - Lap v).
inline Eigen::VectorXd assemble_load(const Discretization& d, const ScalarField& f, const ScalarField& g_dirichlet,
                                     const BoundaryField& g_neumann) {
  const PolyMesh& mesh = d.m();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d.dofs.total);
  std::vector<Eigen::VectorXd> cell_part(mesh.num_cells());
  parallel_for(mesh.num_cells(), d.threads, [&](int c) {
    const QuadratureRule& q = d.cell_quad[c];
    const Eigen::MatrixXd v = d.bases[c].values(q.points);
    Eigen::VectorXd fw(static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) fw[static_cast<Eigen::Index>(i)] = q.weights[i] * f(q.points[i]);
    cell_part[c] = v.transpose() * fw;
  });
  for (int c = 0; c < mesh.num_cells(); ++c) rhs.segment(d.dofs.offset[c], d.dofs.size[c]) += cell_part[c];

  FormParts parts;
  for (int fid = 0; fid < mesh.num_faces(); ++fid) {
    const Face& face = mesh.face(fid);
    if (!face.is_boundary()) continue;
    const int c = face.cells[0];
    const QuadratureRule& q = d.face_quad[fid];
    const SideTraces t = detail::side_traces(d, c, q, face.normal, parts);
    const double sigma = d.penalty.sigma[fid], tau = d.penalty.tau[fid];
    Eigen::VectorXd local = Eigen::VectorXd::Zero(t.v.cols());
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double gd = g_dirichlet(q.points[i]);
      const double gn = g_neumann(q.points[i], face.normal);
      local += q.weights[i] * (gd * (t.dlap_n.row(r).transpose() + sigma * t.v.row(r).transpose()) +
                               gn * (tau * t.dn.row(r).transpose() - t.lap.row(r).transpose()));
    }
    rhs.segment(d.dofs.offset[c], d.dofs.size[c]) += local;
  }
  return rhs;
}

struct DgSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  DofMap dofs;
  PenaltyField penalty;
};

inline DgSystem assemble_system(const Discretization& d, const ScalarField& f, const ScalarField& g_dirichlet,
                                const BoundaryField& g_neumann) {
  DgSystem s;
  s.matrix = assemble_bilinear(d);
  s.rhs = assemble_load(d, f, g_dirichlet, g_neumann);
  s.dofs = d.dofs;
  s.penalty = d.penalty;
  return s;
}

using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// b - A x for the consistent form, computed matrix-free in long double with
// the basis evaluated in long double. The assembled double matrix carries
// rounding of order eps times the penalty size, which at high degree on fine
// meshes is comparable to the discretisation error in L2; refining against
// this residual removes it.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline VectorXld apply_bilinear_extended(const Discretization& d, const Eigen::VectorXd& x) {
  using T = long double;
  using MatrixXld = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  const PolyMesh& mesh = d.m();
  if (x.size() != d.dofs.total) throw std::invalid_argument("apply_bilinear_extended: dimension mismatch");
  const auto weights = [](const QuadratureRule& q) {
    VectorXld w(static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) w[static_cast<Eigen::Index>(i)] = q.weights[i];
    return w;
  };
  const auto local = [&](int c) -> VectorXld { return d.restrict_to(c, x).cast<T>(); };

  VectorXld y = VectorXld::Zero(d.dofs.total);
  parallel_for(mesh.num_cells(), d.threads, [&](int c) {
    const QuadratureRule& q = d.cell_quad[c];
    const MatrixXld lap = d.bases[c].eval_as<T>(q.points).lap;
    const VectorXld wl = weights(q).cwiseProduct(lap * local(c));
    y.segment(d.dofs.offset[c], d.dofs.size[c]) = lap.transpose() * wl;
  });

  std::vector<std::array<VectorXld, 2>> face_part(mesh.num_faces());
  parallel_for(mesh.num_faces(), d.threads, [&](int f) {
    const Face& face = mesh.face(f);
    const QuadratureRule& q = d.face_quad[f];
    const Vec2& n = face.normal;
    const int nsides = face.is_boundary() ? 1 : 2;
    const T omega = face.is_boundary() ? T(1) : T(0.5);
    const auto nq = static_cast<Eigen::Index>(q.size());
    std::array<BasisTablesOf<T>, 2> t;
    VectorXld j0 = VectorXld::Zero(nq), j1 = VectorXld::Zero(nq), m2 = VectorXld::Zero(nq), m3 = VectorXld::Zero(nq);
    for (int s = 0; s < nsides; ++s) {
      const int c = face.cells[s];
      t[s] = d.bases[c].eval_as<T>(q.points);
      t[s].dx = T(n.x()) * t[s].dx + T(n.y()) * t[s].dy;  // normal derivative
      t[s].dlap_x = T(n.x()) * t[s].dlap_x + T(n.y()) * t[s].dlap_y;
      const VectorXld u = local(c);
      const T sg = s == 0 ? T(1) : T(-1);
      j0 += sg * (t[s].value * u);
      j1 += sg * (t[s].dx * u);
      m2 += omega * (t[s].lap * u);
      m3 += omega * (t[s].dlap_x * u);
    }
    const VectorXld w = weights(q);
    const T sigma = d.penalty.sigma[f], tau = d.penalty.tau[f];
    // Test-side coefficients of v, dv/dn, Lap v and d(Lap v)/dn.
    const VectorXld cv = w.cwiseProduct(m3 + sigma * j0);
    const VectorXld cdn = w.cwiseProduct(-m2 + tau * j1);
    const VectorXld clap = w.cwiseProduct(-j1);
    const VectorXld cdlap = w.cwiseProduct(j0);
    for (int s = 0; s < nsides; ++s) {
      const T sg = s == 0 ? T(1) : T(-1);
      face_part[f][s] = sg * (t[s].value.transpose() * cv + t[s].dx.transpose() * cdn) +
                        omega * (t[s].lap.transpose() * clap + t[s].dlap_x.transpose() * cdlap);
    }
  });
  for (int f = 0; f < mesh.num_faces(); ++f)
    for (int s = 0; s < 2; ++s)
      if (face_part[f][s].size() > 0) {
        const int c = mesh.face(f).cells[s];
        y.segment(d.dofs.offset[c], d.dofs.size[c]) += face_part[f][s];
      }
  return y;
}

// Residual function for solve_spd; d and b must outlive it.
inline ResidualFn extended_residual(const Discretization& d, const Eigen::VectorXd& b) {
  return [&d, &b](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return (b.cast<long double>() - apply_bilinear_extended(d, x)).cast<double>();
  };
}

// Matrix Market coordinate format, general real.
inline void write_matrix_market(std::ostream& os, const SparseMatrix& A) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  os << std::setprecision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) os << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

inline void write_matrix_market_file(const std::string& path, const SparseMatrix& A) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_matrix_market(os, A);
}

}  // namespace polydg
