#pragma once

#include "polydg/assembly.hpp"
#include "polydg/problems.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace polydg {

// ||u - u_h||_DG: broken Laplacian plus sigma/tau-weighted jumps. The exact
// solution is continuous with continuous gradient, so its traces only enter
// through boundary faces (where the jump is taken against g_D, g_N).
inline double dg_norm_error(const Discretization& d, const Eigen::VectorXd& uh, const ExactSolution& u) {
  const PolyMesh& mesh = d.m();
  std::vector<double> cell_sum(mesh.num_cells(), 0.0);
  parallel_for(mesh.num_cells(), d.threads, [&](int c) {
    const QuadratureRule& q = d.cell_quad[c];
    const Eigen::VectorXd lap_h = d.bases[c].eval(q.points).lap * d.restrict_to(c, uh);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double e = u.lap(q.points[i]) - lap_h[static_cast<Eigen::Index>(i)];
      s += q.weights[i] * e * e;
    }
    cell_sum[c] = s;
  });
  std::vector<double> face_sum(mesh.num_faces(), 0.0);
  parallel_for(mesh.num_faces(), d.threads, [&](int f) {
    const Face& face = mesh.face(f);
    const QuadratureRule& q = d.face_quad[f];
    const Vec2& n = face.normal;
    Eigen::VectorXd jv = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q.size()));
    Eigen::VectorXd jg = jv;
    for (int s = 0; s < (face.is_boundary() ? 1 : 2); ++s) {
      const int c = face.cells[s];
      const double sg = s == 0 ? 1.0 : -1.0;
      const BasisTables t = d.bases[c].eval(q.points);
      const Eigen::VectorXd loc = d.restrict_to(c, uh);
      const Eigen::VectorXd v = t.value * loc;
      const Eigen::VectorXd dn = (n.x() * t.dx + n.y() * t.dy) * loc;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        jv[r] += sg * (u.value(q.points[i]) - v[r]);
        jg[r] += sg * (u.grad(q.points[i]).dot(n) - dn[r]);
      }
    }
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      s += q.weights[i] * (d.penalty.sigma[f] * jv[r] * jv[r] + d.penalty.tau[f] * jg[r] * jg[r]);
    }
    face_sum[f] = s;
  });
  double total = 0.0;
  for (double x : cell_sum) total += x;
  for (double x : face_sum) total += x;
  return std::sqrt(total);
}

namespace detail {

template <class Integrand>
double cell_reduction(const Discretization& d, Integrand&& g) {
  std::vector<double> part(d.m().num_cells(), 0.0);
  parallel_for(d.m().num_cells(), d.threads, [&](int c) { part[c] = g(c); });
  double s = 0.0;
  for (double x : part) s += x;
  return s;
}

}  // namespace detail

inline double broken_h1_error(const Discretization& d, const Eigen::VectorXd& uh, const ExactSolution& u) {
  return std::sqrt(detail::cell_reduction(d, [&](int c) {
    const QuadratureRule& q = d.cell_quad[c];
    const BasisTables t = d.bases[c].eval(q.points);
    const Eigen::VectorXd loc = d.restrict_to(c, uh);
    const Eigen::VectorXd gx = t.dx * loc, gy = t.dy * loc;
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const Vec2 e = u.grad(q.points[i]) - Vec2(gx[r], gy[r]);
      s += q.weights[i] * e.squaredNorm();
    }
    return s;
  }));
}

inline double l2_error(const Discretization& d, const Eigen::VectorXd& uh, const ExactSolution& u) {
  return std::sqrt(detail::cell_reduction(d, [&](int c) {
    const QuadratureRule& q = d.cell_quad[c];
    const Eigen::VectorXd v = d.bases[c].values(q.points) * d.restrict_to(c, uh);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double e = u.value(q.points[i]) - v[static_cast<Eigen::Index>(i)];
      s += q.weights[i] * e * e;
    }
    return s;
  }));
}

// ||v||_DG of a discrete function, from the Gram matrix.
inline double dg_norm(const SparseMatrix& gram, const Eigen::VectorXd& v) { return std::sqrt(v.dot(gram * v)); }

// The DG norm of the exact solution itself (only the broken Laplacian and the
// boundary jumps against zero contribute).
inline double dg_norm_of_exact(const Discretization& d, const ExactSolution& u) {
  return dg_norm_error(d, Eigen::VectorXd::Zero(d.dofs.total), u);
}

struct ErrorRow {
  double h_max = 0.0;
  int dofs = 0;
  double err_dg = 0.0;
  double err_h1 = 0.0;
  double err_l2 = 0.0;
};

struct EocRow {
  double dg = std::numeric_limits<double>::quiet_NaN();
  double h1 = std::numeric_limits<double>::quiet_NaN();
  double l2 = std::numeric_limits<double>::quiet_NaN();
};

inline double eoc(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  if (h_coarse == h_fine || !(e_coarse > 0.0) || !(e_fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

// Slopes between consecutive rows; entry 0 is NaN. Identical h values give NaN
// and a line in `warnings`.
inline std::vector<EocRow> eoc_table(const std::vector<ErrorRow>& rows, std::vector<std::string>* warnings = nullptr) {
  if (rows.size() < 2) throw std::invalid_argument("eoc_table: at least two meshes are required");
  std::vector<EocRow> out(rows.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    if (a.h_max == b.h_max && warnings)
      warnings->push_back("levels " + std::to_string(i - 1) + " and " + std::to_string(i) +
                          " have identical h; slope undefined");
    out[i].dg = eoc(a.err_dg, b.err_dg, a.h_max, b.h_max);
    out[i].h1 = eoc(a.err_h1, b.err_h1, a.h_max, b.h_max);
    out[i].l2 = eoc(a.err_l2, b.err_l2, a.h_max, b.h_max);
  }
  return out;
}

inline void write_rates_csv(std::ostream& os, const std::vector<ErrorRow>& rows) {
  std::vector<EocRow> e(rows.size());
  if (rows.size() >= 2) e = eoc_table(rows);
  os << "level,h_max,dofs,err_dg,err_h1,err_l2,eoc_dg,eoc_h1,eoc_l2\n";
  os << std::setprecision(10);
  auto num = [&](double x) {
    if (std::isnan(x))
      os << "nan";
    else
      os << x;
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << i << "," << r.h_max << "," << r.dofs << "," << r.err_dg << "," << r.err_h1 << "," << r.err_l2 << ",";
    num(e[i].dg);
    os << ",";
    num(e[i].h1);
    os << ",";
    num(e[i].l2);
    os << "\n";
  }
}

}  // namespace polydg
