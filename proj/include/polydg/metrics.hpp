#pragma once

#include "polydg/mesh.hpp"

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

namespace polydg {

// Observed values of the mesh-regularity constants.
struct MeshMetrics {
  int face_count_max = 0;       // C_F: max faces per cell
  double shape_regularity = 0;  // C_r: max h / rho
  double face_simplex = 0;      // C_s: max h |F| / (d |simplex_F|)
  double theta = 1;             // max ratio of (p+1)(p+d)/h across shared faces
};

// (p+1)(p+d)/h_K, the local scale used by the arbitrary-face penalties.
inline double degree_scale(int p, double h, int d = 2) { return double(p + 1) * double(p + d) / h; }

// C_s restricted to one cell.
inline double cell_face_simplex_constant(const PolyMesh& mesh, int c) {
  const auto& cell = mesh.cell(c);
  const int d = mesh.dimension();
  double cs = 0.0;
  for (std::size_t k = 0; k < cell.face_ids.size(); ++k) {
    const double area = cell.face_simplices[k].area;
    cs = std::max(cs, cell.diameter * mesh.face(cell.face_ids[k]).measure / (d * area));
  }
  return cs;
}

inline MeshMetrics compute_metrics(const PolyMesh& mesh, std::span<const int> degrees) {
  if (static_cast<int>(degrees.size()) != mesh.num_cells())
    throw std::invalid_argument("compute_metrics: one degree per cell is required");
  for (int p : degrees)
    if (p < 2) throw std::invalid_argument("compute_metrics: polynomial degrees must be at least 2");
  MeshMetrics m;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cell(c);
    m.face_count_max = std::max(m.face_count_max, static_cast<int>(cell.face_ids.size()));
    m.shape_regularity = std::max(m.shape_regularity, cell.diameter / cell.inradius);
    m.face_simplex = std::max(m.face_simplex, cell_face_simplex_constant(mesh, c));
  }
  for (const auto& f : mesh.faces()) {
    if (f.is_boundary()) continue;
    const double a = degree_scale(degrees[f.cells[0]], mesh.cell(f.cells[0]).diameter);
    const double b = degree_scale(degrees[f.cells[1]], mesh.cell(f.cells[1]).diameter);
    m.theta = std::max(m.theta, std::max(a / b, b / a));
  }
  return m;
}

inline MeshMetrics compute_metrics(const PolyMesh& mesh, int uniform_degree) {
  std::vector<int> p(static_cast<std::size_t>(mesh.num_cells()), uniform_degree);
  return compute_metrics(mesh, p);
}

}  // namespace polydg
