#pragma once

#include "polydg/geometry.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace polydg {

// A triangle inside a cell having one of the cell's faces as its base.
struct FaceSimplex {
  Point apex = Point::Zero();
  double height = 0.0;
  double area = 0.0;
};

// A face as seen from one cell: the cell interior lies to the left of a -> b.
struct OrientedSegment {
  Point a;
  Point b;
};

namespace detail {

inline double height_above(const OrientedSegment& f, const Point& p) {
  const Vec2 d = f.b - f.a;
  return cross(d, p - f.a) / d.norm();
}

inline Triangle simplex_triangle(const OrientedSegment& f, const Point& apex) { return Triangle{{f.a, f.b, apex}}; }

inline FaceSimplex make_simplex(const OrientedSegment& f, const Point& apex) {
  const double h = height_above(f, apex);
  return {apex, h, 0.5 * h * (f.b - f.a).norm()};
}

// Moves the apex towards the base so that the height scales by t.
inline FaceSimplex shrink(const OrientedSegment& f, const FaceSimplex& s, double t) {
  const Vec2 d = (f.b - f.a).normalized();
  double along = (s.apex - f.a).dot(d);
  along = std::clamp(along, 0.0, (f.b - f.a).norm());
  const Point foot = f.a + along * d;
  return make_simplex(f, foot + t * (s.apex - foot));
}

struct AssignmentResult {
  std::vector<FaceSimplex> simplices;
  double worst_ratio = std::numeric_limits<double>::infinity();  // max_F h / height
};

inline bool overlapping_pair_exists(std::span<const OrientedSegment> faces, std::span<const FaceSimplex> s,
                                    double tol, std::vector<std::pair<int, int>>* pairs = nullptr) {
  const int m = static_cast<int>(faces.size());
  std::vector<Triangle> tris(m);
  std::vector<Point> lo(m), hi(m);
  for (int i = 0; i < m; ++i) {
    tris[i] = simplex_triangle(faces[i], s[i].apex);
    lo[i] = tris[i].v[0].cwiseMin(tris[i].v[1]).cwiseMin(tris[i].v[2]);
    hi[i] = tris[i].v[0].cwiseMax(tris[i].v[1]).cwiseMax(tris[i].v[2]);
  }
  bool any = false;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (lo[i].x() > hi[j].x() - tol || lo[j].x() > hi[i].x() - tol || lo[i].y() > hi[j].y() - tol ||
          lo[j].y() > hi[i].y() - tol)
        continue;
      if (triangles_overlap(tris[i], tris[j], tol)) {
        if (!pairs) return true;
        pairs->emplace_back(i, j);
        any = true;
      }
    }
  }
  return any;
}

inline AssignmentResult score(std::vector<FaceSimplex> s, double diameter) {
  AssignmentResult r;
  r.worst_ratio = 0.0;
  for (const auto& x : s) r.worst_ratio = std::max(r.worst_ratio, x.height > 0.0 ? diameter / x.height : INFINITY);
  r.simplices = std::move(s);
  return r;
}

// Every face lies on an edge of exactly one sub-triangle. A sub-triangle
// carrying faces on one edge lends its opposite vertex; one carrying faces on
// several edges is split from its centroid. The result is always admissible.
inline std::vector<FaceSimplex> triangulation_assignment(std::span<const OrientedSegment> faces,
                                                         std::span<const Triangle> tris, double tol) {
  const int m = static_cast<int>(faces.size());
  std::vector<int> host_tri(m, -1), host_edge(m, -1);
  for (int f = 0; f < m; ++f) {
    for (int t = 0; t < static_cast<int>(tris.size()) && host_tri[f] < 0; ++t) {
      for (int e = 0; e < 3; ++e) {
        const Point& p = tris[t].v[e];
        const Point& q = tris[t].v[(e + 1) % 3];
        if (on_segment(faces[f].a, p, q, tol) && on_segment(faces[f].b, p, q, tol)) {
          host_tri[f] = t;
          host_edge[f] = e;
          break;
        }
      }
    }
  }
  std::vector<std::array<bool, 3>> carrying(tris.size(), {false, false, false});
  for (int f = 0; f < m; ++f)
    if (host_tri[f] >= 0) carrying[host_tri[f]][host_edge[f]] = true;

  std::vector<FaceSimplex> out(m);
  for (int f = 0; f < m; ++f) {
    if (host_tri[f] < 0) continue;  // left with zero height; caller reports it
    const Triangle& t = tris[host_tri[f]];
    const auto& c = carrying[host_tri[f]];
    const int count = int(c[0]) + int(c[1]) + int(c[2]);
    const Point apex = count == 1 ? t.v[(host_edge[f] + 2) % 3] : t.centroid();
    out[f] = make_simplex(faces[f], apex);
  }
  return out;
}

// Shrinks the taller member of each overlapping pair until all are disjoint.
inline bool separate_by_pairwise_shrink(std::span<const OrientedSegment> faces, std::vector<FaceSimplex>& s,
                                        double tol) {
  for (int round = 0; round < 200; ++round) {
    std::vector<std::pair<int, int>> pairs;
    if (!overlapping_pair_exists(faces, s, tol, &pairs)) return true;
    std::vector<bool> hit(s.size(), false);
    for (auto [i, j] : pairs) {
      if (s[i].height >= s[j].height) hit[i] = true;
      if (s[j].height >= s[i].height) hit[j] = true;
    }
    for (std::size_t i = 0; i < s.size(); ++i)
      if (hit[i]) s[i] = shrink(faces[i], s[i], 0.5);
  }
  return !overlapping_pair_exists(faces, s, tol);
}

inline bool separate_by_uniform_shrink(std::span<const OrientedSegment> faces, std::vector<FaceSimplex>& s,
                                       double tol) {
  const std::vector<FaceSimplex> base = s;
  double t = 1.0;
  for (int k = 0; k < 80; ++k) {
    if (!overlapping_pair_exists(faces, s, tol)) return true;
    t *= 0.8;
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = shrink(faces[i], base[i], t);
  }
  return false;
}

}  // namespace detail

// Assigns to every face of a cell a simplex inside the cell, pairwise
// non-overlapping, trying to make the smallest height/diameter ratio as large
// as possible. Candidate apexes are the cell vertices, the centroid and the
// incentre; when per-face maximal apexes overlap they are shrunk towards the
// face. Several strategies are scored and the best is returned.
inline std::vector<FaceSimplex> assign_face_simplices(std::span<const Point> poly,
                                                      std::span<const OrientedSegment> faces,
                                                      std::span<const Triangle> subtriangles, const Point& centroid,
                                                      const Point& incenter, double diameter) {
  using namespace detail;
  const double tol = 1e-12 * diameter;
  const double overlap_tol = 1e-10 * diameter;
  const int m = static_cast<int>(faces.size());

  std::vector<FaceSimplex> fallback = triangulation_assignment(faces, subtriangles, tol);
  AssignmentResult best = score(fallback, diameter);

  auto admissible = [&](const OrientedSegment& f, const Point& apex) {
    if (height_above(f, apex) <= tol) return false;
    return triangle_inside_polygon(simplex_triangle(f, apex), poly, 1e-9);
  };

  // Fans from an interior centre, patched with the triangulation simplices.
  for (const Point& c : {centroid, incenter}) {
    std::vector<FaceSimplex> s(m);
    bool any_fan = false;
    for (int f = 0; f < m; ++f) {
      if (admissible(faces[f], c)) {
        s[f] = make_simplex(faces[f], c);
        any_fan = true;
      } else {
        s[f] = fallback[f];
      }
    }
    if (!any_fan) continue;
    if (separate_by_pairwise_shrink(faces, s, overlap_tol)) {
      auto r = score(std::move(s), diameter);
      if (r.worst_ratio < best.worst_ratio) best = std::move(r);
    }
  }

  // Per-face tallest admissible apex, then a uniform shrink to disjointness.
  {
    std::vector<Point> candidates(poly.begin(), poly.end());
    candidates.push_back(centroid);
    candidates.push_back(incenter);
    std::vector<FaceSimplex> s(m);
    std::vector<std::pair<double, int>> order(candidates.size());
    for (int f = 0; f < m; ++f) {
      s[f] = fallback[f];
      for (std::size_t k = 0; k < candidates.size(); ++k) order[k] = {height_above(faces[f], candidates[k]), int(k)};
      std::sort(order.begin(), order.end(), std::greater<>());
      for (const auto& [h, k] : order) {
        if (h <= s[f].height) break;
        if (admissible(faces[f], candidates[k])) {
          s[f] = make_simplex(faces[f], candidates[k]);
          break;
        }
      }
    }
    if (separate_by_uniform_shrink(faces, s, overlap_tol)) {
      auto r = score(std::move(s), diameter);
      if (r.worst_ratio < best.worst_ratio) best = std::move(r);
    }
  }
  return best.simplices;
}

}  // namespace polydg
