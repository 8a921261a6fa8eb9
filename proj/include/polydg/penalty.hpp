#pragma once

#include "polydg/mesh.hpp"
#include "polydg/metrics.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polydg {

enum class Regime { BoundedFaces, ArbitraryFaces };

inline std::string to_string(Regime r) { return r == Regime::BoundedFaces ? "bounded" : "arbitrary"; }

inline Regime parse_regime(const std::string& s) {
  if (s == "bounded" || s == "BoundedFaces") return Regime::BoundedFaces;
  if (s == "arbitrary" || s == "ArbitraryFaces") return Regime::ArbitraryFaces;
  throw std::invalid_argument("unknown penalty regime '" + s + "' (expected bounded or arbitrary)");
}

struct PenaltyConstants {
  double c_sigma = 10.0;
  double c_tau = 10.0;
  double c_inv1 = 1.0;
  double c_inv2 = 1.0;
};

struct PenaltyField {
  Regime regime = Regime::BoundedFaces;
  PenaltyConstants constants;
  std::vector<double> sigma;  // per face
  std::vector<double> tau;    // per face
  std::vector<bool> p_coverable;  // per cell; only used by the bounded regime

  PenaltyField scaled(double s_sigma, double s_tau) const {
    PenaltyField r = *this;
    for (double& x : r.sigma) x *= s_sigma;
    for (double& x : r.tau) x *= s_tau;
    r.constants.c_sigma *= s_sigma;
    r.constants.c_tau *= s_tau;
    return r;
  }
};

// C_INV(p, kappa, F). The supremum over face simplices is replaced by the
// simplex assigned to the face when the mesh was built.
inline double c_inv_factor(const PolyMesh& mesh, int cell_id, int face_id, int p, bool p_coverable, double c_inv1,
                           int d = 2) {
  const Cell& cell = mesh.cell(cell_id);
  const int k = cell.local_face(face_id);
  if (k < 0)
    throw std::invalid_argument("c_inv_factor: face " + std::to_string(face_id) + " is not a face of cell " +
                                std::to_string(cell_id));
  const double flat = cell.face_simplices[k].area;
  if (!(flat > 0.0))
    throw MeshError("c_inv_factor: face " + std::to_string(face_id) + " of cell " + std::to_string(cell_id) +
                    " has a zero-height face simplex");
  const double ratio = cell.area / flat;
  if (!p_coverable) return c_inv1 * ratio;
  return c_inv1 * std::min(ratio, std::pow(double(p), 2.0 * (d - 1)));
}

namespace detail {

inline void check_degrees(const PolyMesh& mesh, std::span<const int> degrees, const char* who) {
  if (static_cast<int>(degrees.size()) != mesh.num_cells())
    throw std::invalid_argument(std::string(who) + ": one degree per cell is required");
  for (int p : degrees)
    if (p < 2) throw std::invalid_argument(std::string(who) + ": polynomial degrees must be at least 2");
}

}  // namespace detail

// sigma = C_sigma max_K [C_INV p^2 |F|/|K|] [C_inv2 p^4 / h^2],
// tau   = C_tau   max_K  C_INV p^2 |F|/|K|.
inline PenaltyField penalties_bounded(const PolyMesh& mesh, std::span<const int> degrees, const PenaltyConstants& k,
                                      std::vector<bool> p_coverable = {}) {
  detail::check_degrees(mesh, degrees, "penalties_bounded");
  if (p_coverable.empty()) p_coverable.assign(static_cast<std::size_t>(mesh.num_cells()), true);
  if (static_cast<int>(p_coverable.size()) != mesh.num_cells())
    throw std::invalid_argument("penalties_bounded: one p-coverable flag per cell is required");
  PenaltyField out;
  out.regime = Regime::BoundedFaces;
  out.constants = k;
  out.p_coverable = p_coverable;
  out.sigma.assign(static_cast<std::size_t>(mesh.num_faces()), 0.0);
  out.tau.assign(static_cast<std::size_t>(mesh.num_faces()), 0.0);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    double smax = 0.0, tmax = 0.0;
    for (int side = 0; side < 2; ++side) {
      const int c = face.cells[side];
      if (c < 0) continue;
      const Cell& cell = mesh.cell(c);
      const double p = degrees[c];
      const double trace = c_inv_factor(mesh, c, f, degrees[c], p_coverable[c], k.c_inv1) * p * p * face.measure /
                           cell.area;
      const double h1 = k.c_inv2 * p * p * p * p / (cell.diameter * cell.diameter);
      smax = std::max(smax, trace * h1);
      tmax = std::max(tmax, trace);
    }
    out.sigma[f] = k.c_sigma * smax;
    out.tau[f] = k.c_tau * tmax;
  }
  return out;
}

// sigma = C_sigma mean{((p+1)(p+d)/h)^3}, tau = C_tau mean{(p+1)(p+d)/h}.
// Stability is only established for p in {2, 3}; other degrees need `allow_any_degree`.
inline PenaltyField penalties_arbitrary(const PolyMesh& mesh, std::span<const int> degrees, const PenaltyConstants& k,
                                        bool allow_any_degree = false) {
  detail::check_degrees(mesh, degrees, "penalties_arbitrary");
  if (!allow_any_degree)
    for (int p : degrees)
      if (p != 2 && p != 3)
        throw std::invalid_argument("penalties_arbitrary: degree " + std::to_string(p) +
                                    " rejected; the arbitrary-face penalty is only proven stable for p = 2, 3");
  PenaltyField out;
  out.regime = Regime::ArbitraryFaces;
  out.constants = k;
  out.sigma.assign(static_cast<std::size_t>(mesh.num_faces()), 0.0);
  out.tau.assign(static_cast<std::size_t>(mesh.num_faces()), 0.0);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    double s = 0.0, t = 0.0;
    int n = 0;
    for (int side = 0; side < 2; ++side) {
      const int c = face.cells[side];
      if (c < 0) continue;
      const double g = degree_scale(degrees[c], mesh.cell(c).diameter, mesh.dimension());
      s += g * g * g;
      t += g;
      ++n;
    }
    out.sigma[f] = k.c_sigma * s / n;
    out.tau[f] = k.c_tau * t / n;
  }
  return out;
}

struct PenaltyConfig {
  Regime regime = Regime::BoundedFaces;
  PenaltyConstants constants;
  bool p_coverable = true;
  bool allow_any_degree = false;
};

inline PenaltyField make_penalties(const PolyMesh& mesh, std::span<const int> degrees, const PenaltyConfig& cfg) {
  if (cfg.regime == Regime::BoundedFaces)
    return penalties_bounded(mesh, degrees, cfg.constants,
                             std::vector<bool>(static_cast<std::size_t>(mesh.num_cells()), cfg.p_coverable));
  return penalties_arbitrary(mesh, degrees, cfg.constants, cfg.allow_any_degree);
}

}  // namespace polydg
