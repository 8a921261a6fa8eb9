#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace polydg {

using Point = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Twice the signed area of (a, b, c); positive when counter-clockwise.
inline double orient(const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); }

inline Vec2 perp_right(const Vec2& d) { return {d.y(), -d.x()}; }

struct Triangle {
  std::array<Point, 3> v;

  double signed_area() const { return 0.5 * orient(v[0], v[1], v[2]); }
  double area() const { return std::abs(signed_area()); }
  Point centroid() const { return (v[0] + v[1] + v[2]) / 3.0; }
};

struct Rect {
  Point lo{0.0, 0.0};
  Point hi{1.0, 1.0};

  double width() const { return hi.x() - lo.x(); }
  double height() const { return hi.y() - lo.y(); }
  double area() const { return width() * height(); }
};

struct Circle {
  Point center;
  double radius = 0.0;
};

inline double signed_area(std::span<const Point> poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

inline Point polygon_centroid(std::span<const Point> poly) {
  // Shift to the first vertex to keep the shoelace sums well conditioned.
  const Point o = poly[0];
  double a = 0.0;
  Point c = Point::Zero();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = poly[i] - o;
    const Point q = poly[(i + 1) % n] - o;
    const double w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  if (a == 0.0) {
    Point m = Point::Zero();
    for (const auto& p : poly) m += p;
    return m / static_cast<double>(n);
  }
  return o + c / (3.0 * a);
}

inline double polygon_diameter(std::span<const Point> poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, (poly[i] - poly[j]).norm());
  return d;
}

inline void bounding_box(std::span<const Point> poly, Point& lo, Point& hi) {
  lo = Point::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const auto& p : poly) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
}

inline double distance_to_segment(const Point& p, const Point& a, const Point& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

// Even-odd rule; points on the boundary may land on either side.
inline bool point_in_polygon(const Point& p, std::span<const Point> poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

// Positive inside, negative outside.
inline double signed_boundary_distance(const Point& p, std::span<const Point> poly) {
  double d = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) d = std::min(d, distance_to_segment(p, poly[i], poly[(i + 1) % n]));
  return point_in_polygon(p, poly) ? d : -d;
}

// Sutherland-Hodgman clip against the half-plane {x : normal.x <= offset}.
// Works for non-convex subjects in the sense that the shoelace area of the
// output equals the area of the intersection.
inline std::vector<Point> clip_halfplane(std::span<const Point> poly, const Vec2& normal, double offset) {
  std::vector<Point> out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  out.reserve(n + 4);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    const double sp = normal.dot(p) - offset;
    const double sq = normal.dot(q) - offset;
    if (sp <= 0.0) out.push_back(p);
    if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) {
      const double t = sp / (sp - sq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

// Area of poly ∩ tri (tri must be counter-clockwise).
inline double overlap_area(const Triangle& tri, std::span<const Point> poly) {
  std::vector<Point> cur(poly.begin(), poly.end());
  for (int e = 0; e < 3 && !cur.empty(); ++e) {
    const Point& a = tri.v[e];
    const Point& b = tri.v[(e + 1) % 3];
    const Vec2 n = perp_right(b - a);
    cur = clip_halfplane(cur, n, n.dot(a));
  }
  return cur.size() < 3 ? 0.0 : std::abs(signed_area(cur));
}

inline bool triangle_inside_polygon(const Triangle& tri, std::span<const Point> poly, double rel_tol = 1e-10) {
  const double a = tri.area();
  if (a <= 0.0) return false;
  return overlap_area(tri, poly) >= a * (1.0 - rel_tol);
}

// Separating-axis test; triangles whose interiors overlap by less than tol
// along some axis are reported as disjoint (touching is allowed).
inline bool triangles_overlap(const Triangle& s, const Triangle& t, double tol) {
  auto separated_by = [&](const Triangle& owner) {
    for (int e = 0; e < 3; ++e) {
      Vec2 axis = perp_right(owner.v[(e + 1) % 3] - owner.v[e]);
      const double len = axis.norm();
      if (len == 0.0) continue;
      axis /= len;
      double s_lo = std::numeric_limits<double>::infinity(), s_hi = -s_lo;
      double t_lo = s_lo, t_hi = -s_lo;
      for (const auto& p : s.v) {
        s_lo = std::min(s_lo, axis.dot(p));
        s_hi = std::max(s_hi, axis.dot(p));
      }
      for (const auto& p : t.v) {
        t_lo = std::min(t_lo, axis.dot(p));
        t_hi = std::max(t_hi, axis.dot(p));
      }
      if (std::min(s_hi, t_hi) - std::max(s_lo, t_lo) <= tol) return true;
    }
    return false;
  };
  return !(separated_by(s) || separated_by(t));
}

inline bool segments_properly_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double d1 = orient(c, d, a);
  const double d2 = orient(c, d, b);
  const double d3 = orient(a, b, c);
  const double d4 = orient(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

inline bool on_segment(const Point& p, const Point& a, const Point& b, double tol) {
  return distance_to_segment(p, a, b) <= tol;
}

// True when no two non-adjacent edges intersect and no vertex touches a
// non-incident edge.
inline bool polygon_is_simple(std::span<const Point> poly, double tol) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    if ((a - b).norm() <= tol) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t jn = (j + 1) % n;
      if (j == i + 1 || jn == i) continue;
      const Point& c = poly[j];
      const Point& d = poly[jn];
      if (segments_properly_intersect(a, b, c, d)) return false;
      if (on_segment(c, a, b, tol) || on_segment(d, a, b, tol) || on_segment(a, c, d, tol) ||
          on_segment(b, c, d, tol))
        return false;
    }
  }
  return true;
}

inline Circle triangle_incircle(const Point& a, const Point& b, const Point& c) {
  const double la = (b - c).norm();
  const double lb = (c - a).norm();
  const double lc = (a - b).norm();
  const double per = la + lb + lc;
  const double area = 0.5 * std::abs(orient(a, b, c));
  return {(la * a + lb * b + lc * c) / per, 2.0 * area / per};
}

// Pole of inaccessibility by quadtree branch and bound.
inline Circle largest_inscribed_circle(std::span<const Point> poly, double precision, int max_probes = 200000) {
  if (poly.size() == 3) return triangle_incircle(poly[0], poly[1], poly[2]);

  Point lo, hi;
  bounding_box(poly, lo, hi);
  const double w = hi.x() - lo.x();
  const double h = hi.y() - lo.y();
  const double size = std::min(w, h);
  if (size <= 0.0) return {lo, 0.0};

  struct Probe {
    Point c;
    double half;
    double d;
    double bound;
  };
  auto make = [&](const Point& c, double half) {
    const double d = signed_boundary_distance(c, poly);
    return Probe{c, half, d, d + half * std::sqrt(2.0)};
  };
  auto cmp = [](const Probe& a, const Probe& b) { return a.bound < b.bound; };
  std::priority_queue<Probe, std::vector<Probe>, decltype(cmp)> queue(cmp);

  const double half = 0.5 * size;
  for (double x = lo.x(); x < hi.x(); x += size)
    for (double y = lo.y(); y < hi.y(); y += size) queue.push(make(Point(x + half, y + half), half));

  Probe best = make(polygon_centroid(poly), 0.0);
  const Probe box_center = make(0.5 * (lo + hi), 0.0);
  if (box_center.d > best.d) best = box_center;

  int probes = 0;
  while (!queue.empty() && probes < max_probes) {
    const Probe cell = queue.top();
    queue.pop();
    if (cell.d > best.d) best = cell;
    if (cell.bound - best.d <= precision) continue;
    const double hh = 0.5 * cell.half;
    queue.push(make(cell.c + Point(-hh, -hh), hh));
    queue.push(make(cell.c + Point(hh, -hh), hh));
    queue.push(make(cell.c + Point(-hh, hh), hh));
    queue.push(make(cell.c + Point(hh, hh), hh));
    probes += 4;
  }
  return {best.c, best.d};
}

}  // namespace polydg
