#pragma once

#include "polydg/geometry.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace polydg {

// Manufactured solution with the derivatives the load and the error norms
// need. f = bilaplacian(u); g_D = u and g_N = grad u . n on the boundary.
struct ExactSolution {
  std::string name;
  std::function<double(const Point&)> value;
  std::function<Vec2(const Point&)> grad;
  std::function<double(const Point&)> lap;
  std::function<Vec2(const Point&)> grad_lap;
  std::function<double(const Point&)> bilap;
  int polynomial_degree = -1;  // -1 when not a polynomial

  double g_dirichlet(const Point& x) const { return value(x); }
  double g_neumann(const Point& x, const Vec2& n) const { return grad(x).dot(n); }
};

struct Monomial {
  double c = 0.0;
  int i = 0;  // power of x
  int j = 0;  // power of y
};

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Monomial> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_)
      if (t.i < 0 || t.j < 0) throw std::invalid_argument("Polynomial: negative exponent");
  }

  int degree() const {
    int d = 0;
    for (const auto& t : terms_)
      if (t.c != 0.0) d = std::max(d, t.i + t.j);
    return d;
  }
  const std::vector<Monomial>& terms() const { return terms_; }

  // d^a/dx^a d^b/dy^b evaluated at x.
  double derivative(const Point& x, int a, int b) const {
    double s = 0.0;
    for (const auto& t : terms_) {
      if (t.i < a || t.j < b) continue;
      double c = t.c;
      for (int k = 0; k < a; ++k) c *= (t.i - k);
      for (int k = 0; k < b; ++k) c *= (t.j - k);
      s += c * std::pow(x.x(), t.i - a) * std::pow(x.y(), t.j - b);
    }
    return s;
  }
  double operator()(const Point& x) const { return derivative(x, 0, 0); }

  // Parses a comma-separated list of c:i:j terms, each meaning c x^i y^j.
  static Polynomial parse(const std::string& text) {
    std::vector<Monomial> terms;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::stringstream is(item);
      Monomial m;
      char colon1 = 0, colon2 = 0;
      if (!(is >> m.c >> colon1 >> m.i >> colon2 >> m.j) || colon1 != ':' || colon2 != ':')
        throw std::invalid_argument("polynomial term '" + item + "' is not of the form c:i:j");
      terms.push_back(m);
    }
    if (terms.empty()) throw std::invalid_argument("empty polynomial");
    return Polynomial(std::move(terms));
  }

 private:
  std::vector<Monomial> terms_;
};

inline ExactSolution polynomial_solution(const Polynomial& u, std::string name = "polynomial") {
  ExactSolution s;
  s.name = std::move(name);
  s.polynomial_degree = u.degree();
  s.value = [u](const Point& x) { return u(x); };
  s.grad = [u](const Point& x) { return Vec2(u.derivative(x, 1, 0), u.derivative(x, 0, 1)); };
  s.lap = [u](const Point& x) { return u.derivative(x, 2, 0) + u.derivative(x, 0, 2); };
  s.grad_lap = [u](const Point& x) {
    return Vec2(u.derivative(x, 3, 0) + u.derivative(x, 1, 2), u.derivative(x, 2, 1) + u.derivative(x, 0, 3));
  };
  s.bilap = [u](const Point& x) {
    return u.derivative(x, 4, 0) + 2.0 * u.derivative(x, 2, 2) + u.derivative(x, 0, 4);
  };
  return s;
}

// u = sin^2(pi x) sin^2(pi y); u and its normal derivative vanish on the
// boundary of the unit square.
inline ExactSolution sine_squared_solution() {
  using std::cos;
  using std::sin;
  constexpr double pi = std::numbers::pi;
  // S(t) = sin^2(pi t) and its derivatives.
  auto S = [](double t, int k) {
    switch (k) {
      case 0: return 0.5 * (1.0 - cos(2.0 * pi * t));
      case 1: return pi * sin(2.0 * pi * t);
      case 2: return 2.0 * pi * pi * cos(2.0 * pi * t);
      case 3: return -4.0 * pi * pi * pi * sin(2.0 * pi * t);
      default: return -8.0 * pi * pi * pi * pi * cos(2.0 * pi * t);
    }
  };
  ExactSolution s;
  s.name = "example1";
  s.value = [S](const Point& x) { return S(x.x(), 0) * S(x.y(), 0); };
  s.grad = [S](const Point& x) { return Vec2(S(x.x(), 1) * S(x.y(), 0), S(x.x(), 0) * S(x.y(), 1)); };
  s.lap = [S](const Point& x) { return S(x.x(), 2) * S(x.y(), 0) + S(x.x(), 0) * S(x.y(), 2); };
  s.grad_lap = [S](const Point& x) {
    return Vec2(S(x.x(), 3) * S(x.y(), 0) + S(x.x(), 1) * S(x.y(), 2),
                S(x.x(), 2) * S(x.y(), 1) + S(x.x(), 0) * S(x.y(), 3));
  };
  s.bilap = [S](const Point& x) {
    return S(x.x(), 4) * S(x.y(), 0) + 2.0 * S(x.x(), 2) * S(x.y(), 2) + S(x.x(), 0) * S(x.y(), 4);
  };
  return s;
}

// u = x(1-x) y(1-y) = xy - x^2 y - x y^2 + x^2 y^2.
inline Polynomial bubble_polynomial() { return Polynomial({{1, 1, 1}, {-1, 2, 1}, {-1, 1, 2}, {1, 2, 2}}); }

// A biharmonic quartic with nonzero boundary data on the unit square:
// u = x^4 - 3 x^2 y^2 + 2 x y^3 + x^2 - y + 1.
inline Polynomial biharmonic_quartic() { return Polynomial({{1, 4, 0}, {-3, 2, 2}, {2, 1, 3}, {1, 2, 0}, {-1, 0, 1}, {1, 0, 0}}); }

// Registry keys: example1, example2, quartic.
inline ExactSolution problem_by_name(const std::string& key) {
  if (key == "example1") return sine_squared_solution();
  if (key == "example2") return polynomial_solution(bubble_polynomial(), "example2");
  if (key == "quartic") return polynomial_solution(biharmonic_quartic(), "quartic");
  throw std::invalid_argument("unknown problem '" + key + "' (expected example1, example2, quartic or custom)");
}

}  // namespace polydg
