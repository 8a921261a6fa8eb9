#pragma once

#include "polydg/geometry.hpp"
#include "polydg/mesh.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace polydg {

struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

using CellQuadrature = QuadratureRule;
using FaceQuadrature = QuadratureRule;

struct GaussLegendre1D {
  std::vector<double> nodes;  // on [0, 1]
  std::vector<double> weights;
};

inline constexpr int kMaxGaussPoints = 64;

namespace detail {

// Newton iteration on the Legendre recurrence, mapped to [0, 1].
inline GaussLegendre1D compute_gauss_legendre(int n) {
  GaussLegendre1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = 0.5 * (1.0 - x);
    r.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    r.weights[i] = r.weights[n - 1 - i] = 0.5 * w;
  }
  return r;
}

}  // namespace detail

// n-point Gauss-Legendre rule on [0, 1], exact to degree 2n - 1.
inline const GaussLegendre1D& gauss_legendre(int n) {
  if (n < 1 || n > kMaxGaussPoints) throw std::invalid_argument("gauss_legendre: unsupported number of points");
  static const std::vector<GaussLegendre1D> table = [] {
    std::vector<GaussLegendre1D> t(kMaxGaussPoints + 1);
    for (int k = 1; k <= kMaxGaussPoints; ++k) t[k] = detail::compute_gauss_legendre(k);
    return t;
  }();
  return table[n];
}

inline int gauss_points_for_degree(int degree) { return std::max(1, (degree + 2) / 2); }

// Collapsed (Duffy) Gauss product rule on a triangle. The collapsed direction
// carries one extra degree from the Jacobian, hence the extra point.
inline void append_triangle_rule(const Triangle& t, int degree, QuadratureRule& out) {
  const auto& ga = gauss_legendre(gauss_points_for_degree(degree));
  const auto& gb = gauss_legendre(gauss_points_for_degree(degree + 1));
  const double area = t.area();
  const Vec2 e1 = t.v[1] - t.v[0];
  const Vec2 e2 = t.v[2] - t.v[0];
  for (std::size_t j = 0; j < gb.nodes.size(); ++j) {
    const double s = gb.nodes[j];
    for (std::size_t i = 0; i < ga.nodes.size(); ++i) {
      const double r = ga.nodes[i];
      // (r, s) in the unit square -> (xi, eta) = (r (1 - s), s) in the reference triangle.
      const double xi = r * (1.0 - s);
      const double eta = s;
      out.points.push_back(t.v[0] + xi * e1 + eta * e2);
      out.weights.push_back(2.0 * area * ga.weights[i] * gb.weights[j] * (1.0 - s));
    }
  }
}

inline QuadratureRule triangle_rule(const Triangle& t, int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_rule: degree must be non-negative");
  QuadratureRule q;
  q.degree = degree;
  append_triangle_rule(t, degree, q);
  return q;
}

inline QuadratureRule composite_rule(std::span<const Triangle> tris, int degree) {
  if (degree < 0) throw std::invalid_argument("composite_rule: degree must be non-negative");
  QuadratureRule q;
  q.degree = degree;
  for (const auto& t : tris) append_triangle_rule(t, degree, q);
  return q;
}

inline QuadratureRule cell_rule(const Cell& cell, int degree) { return composite_rule(cell.subtriangles, degree); }

inline QuadratureRule segment_rule(const Point& a, const Point& b, int degree) {
  if (degree < 0) throw std::invalid_argument("segment_rule: degree must be non-negative");
  const auto& g = gauss_legendre(gauss_points_for_degree(degree));
  const double len = (b - a).norm();
  QuadratureRule q;
  q.degree = degree;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    q.points.push_back(a + g.nodes[i] * (b - a));
    q.weights.push_back(len * g.weights[i]);
  }
  return q;
}

inline QuadratureRule face_rule(const Face& face, int degree) { return segment_rule(face.a, face.b, degree); }

}  // namespace polydg
