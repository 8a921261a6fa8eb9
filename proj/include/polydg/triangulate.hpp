#pragma once

#include "polydg/geometry.hpp"

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polydg {

class TriangulationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// Drops vertices that lie on the segment joining their neighbours.
inline std::vector<int> strip_collinear(std::span<const Point> poly, double tol) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = static_cast<int>(i);
  bool changed = true;
  while (changed && idx.size() > 3) {
    changed = false;
    for (std::size_t k = 0; k < idx.size() && idx.size() > 3; ++k) {
      const Point& a = poly[idx[(k + idx.size() - 1) % idx.size()]];
      const Point& b = poly[idx[k]];
      const Point& c = poly[idx[(k + 1) % idx.size()]];
      if (std::abs(orient(a, b, c)) <= tol * (c - a).norm() && (b - a).dot(c - b) > 0.0) {
        idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
        changed = true;
        --k;
      }
    }
  }
  return idx;
}

}  // namespace detail

// Ear-clipping triangulation of a simple counter-clockwise polygon. Vertices
// lying on a straight run of the boundary are skipped, so the output
// triangles all have positive area. Returns index triples into `poly`.
// `start` rotates where the ear search begins, which yields a different (but
// equally valid) triangulation.
inline std::vector<std::array<int, 3>> ear_clip(std::span<const Point> poly, int start = 0) {
  if (poly.size() < 3) throw TriangulationError("polygon has fewer than 3 vertices");
  const double scale = polygon_diameter(poly);
  const double tol = 1e-13 * scale;

  std::vector<int> idx = detail::strip_collinear(poly, tol);
  std::vector<Point> reduced;
  reduced.reserve(idx.size());
  for (int i : idx) reduced.push_back(poly[i]);
  if (!polygon_is_simple(reduced, tol)) throw TriangulationError("polygon is self-intersecting");
  if (signed_area(reduced) <= 0.0) throw TriangulationError("polygon is not counter-clockwise");

  std::vector<std::array<int, 3>> tris;
  tris.reserve(idx.size());
  if (!idx.empty() && start != 0) {
    const auto s = static_cast<std::size_t>(start) % idx.size();
    std::rotate(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s), idx.end());
  }

  auto convex = [&](int a, int b, int c) { return orient(poly[a], poly[b], poly[c]) > tol * (poly[c] - poly[a]).norm(); };

  std::size_t k = 0;
  std::size_t misses = 0;
  while (idx.size() > 3) {
    const std::size_t n = idx.size();
    const int a = idx[(k + n - 1) % n];
    const int b = idx[k % n];
    const int c = idx[(k + 1) % n];
    bool ear = convex(a, b, c);
    if (ear) {
      Point lo = poly[a].cwiseMin(poly[b]).cwiseMin(poly[c]);
      Point hi = poly[a].cwiseMax(poly[b]).cwiseMax(poly[c]);
      for (std::size_t m = 0; m < n && ear; ++m) {
        const int q = idx[m];
        if (q == a || q == b || q == c) continue;
        const Point& p = poly[q];
        if (p.x() < lo.x() - tol || p.y() < lo.y() - tol || p.x() > hi.x() + tol || p.y() > hi.y() + tol) continue;
        // Convex vertices cannot poke into an ear; only reflex ones can.
        const int qp = idx[(m + n - 1) % n];
        const int qn = idx[(m + 1) % n];
        if (convex(qp, q, qn)) continue;
        if (orient(poly[a], poly[b], p) >= -tol && orient(poly[b], poly[c], p) >= -tol &&
            orient(poly[c], poly[a], p) >= -tol)
          ear = false;
      }
    }
    if (ear) {
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k % n));
      k = (k % n == 0) ? 0 : (k % n) - 1;
      misses = 0;
    } else {
      k = (k + 1) % n;
      if (++misses > n) throw TriangulationError("ear clipping found no ear (degenerate polygon)");
    }
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

inline std::vector<Triangle> triangulate_polygon(std::span<const Point> poly, int start = 0) {
  std::vector<Triangle> out;
  for (const auto& t : ear_clip(poly, start)) out.push_back(Triangle{{poly[t[0]], poly[t[1]], poly[t[2]]}});
  return out;
}

}  // namespace polydg
