#pragma once

#include "polydg/geometry.hpp"
#include "polydg/mesh.hpp"
#include "polydg/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polydg {

inline int poly_dim(int p) { return p < 0 ? 0 : (p + 1) * (p + 2) / 2; }

// Exponents (i, j) of x^i y^j with i + j <= p, grouped by total degree and
// ordered x^k, x^(k-1) y, ..., y^k inside each group. A space of degree q < p
// occupies the first poly_dim(q) entries.
inline std::vector<std::array<int, 2>> monomial_exponents(int p) {
  std::vector<std::array<int, 2>> e;
  e.reserve(static_cast<std::size_t>(poly_dim(p)));
  for (int k = 0; k <= p; ++k)
    for (int j = 0; j <= k; ++j) e.push_back({k - j, j});
  return e;
}

inline int monomial_index(int i, int j) { return poly_dim(i + j - 1) + j; }

// Basis values and the derivatives that enter the bilinear form, one row per
// point and one column per basis function.
template <class T>
struct BasisTablesOf {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix value;
  Matrix dx;
  Matrix dy;
  Matrix lap;
  Matrix dlap_x;  // d/dx of the Laplacian
  Matrix dlap_y;
};
using BasisTables = BasisTablesOf<double>;

// Polynomials of total degree <= p in the physical frame, written as
// coefficient columns over scaled monomials ((x - c_x)/s_x)^i ((y - c_y)/s_y)^j.
class ElementBasis {
 public:
  ElementBasis() = default;
  ElementBasis(int degree, const Point& center, const Vec2& half_widths)
      : degree_(degree), center_(center), half_(half_widths), exps_(monomial_exponents(degree)) {
    if (degree < 0) throw std::invalid_argument("ElementBasis: negative degree");
    if (!(half_widths.x() > 0.0 && half_widths.y() > 0.0))
      throw std::invalid_argument("ElementBasis: scaling half-widths must be positive");
    coeffs_ = Eigen::MatrixXd::Identity(poly_dim(degree), poly_dim(degree));
  }

  int cell_id = -1;

  int degree() const { return degree_; }
  int dim() const { return static_cast<int>(coeffs_.cols()); }
  int num_monomials() const { return poly_dim(degree_); }
  const Point& center() const { return center_; }
  const Vec2& half_widths() const { return half_; }
  const Eigen::MatrixXd& coefficients() const { return coeffs_; }
  bool orthonormal() const { return orthonormal_; }

  void set_coefficients(Eigen::MatrixXd c, bool orthonormal) {
    if (c.rows() != num_monomials()) throw std::invalid_argument("ElementBasis: coefficient row count mismatch");
    coeffs_ = std::move(c);
    orthonormal_ = orthonormal;
  }

  // Scaled-monomial tables; derivatives are exact.
  BasisTables monomial_tables(std::span<const Point> pts) const { return monomial_tables_as<double>(pts); }

  // Same tables evaluated in scalar type T (e.g. long double for residuals).
  template <class T>
  BasisTablesOf<T> monomial_tables_as(std::span<const Point> pts) const {
    const int n = static_cast<int>(pts.size());
    const int m = num_monomials();
    const int p = degree_;
    BasisTablesOf<T> t;
    t.value.resize(n, m);
    t.dx.resize(n, m);
    t.dy.resize(n, m);
    t.lap.resize(n, m);
    t.dlap_x.resize(n, m);
    t.dlap_y.resize(n, m);
    const T sx = T(1) / T(half_.x()), sy = T(1) / T(half_.y());
    // d[k][i] = k-th derivative of xi^i (k = 0..3).
    std::vector<std::array<T, 4>> X(p + 1), Y(p + 1);
    for (int q = 0; q < n; ++q) {
      const T xi = (T(pts[q].x()) - T(center_.x())) * sx;
      const T eta = (T(pts[q].y()) - T(center_.y())) * sy;
      derivative_powers(xi, X);
      derivative_powers(eta, Y);
      for (int k = 0; k < m; ++k) {
        const auto [i, j] = exps_[k];
        t.value(q, k) = X[i][0] * Y[j][0];
        t.dx(q, k) = X[i][1] * Y[j][0] * sx;
        t.dy(q, k) = X[i][0] * Y[j][1] * sy;
        t.lap(q, k) = X[i][2] * Y[j][0] * sx * sx + X[i][0] * Y[j][2] * sy * sy;
        t.dlap_x(q, k) = X[i][3] * Y[j][0] * sx * sx * sx + X[i][1] * Y[j][2] * sx * sy * sy;
        t.dlap_y(q, k) = X[i][2] * Y[j][1] * sx * sx * sy + X[i][0] * Y[j][3] * sy * sy * sy;
      }
    }
    return t;
  }

  template <class T>
  BasisTablesOf<T> eval_as(std::span<const Point> pts) const {
    BasisTablesOf<T> t = monomial_tables_as<T>(pts);
    const auto c = coeffs_.cast<T>();
    t.value = t.value * c;
    t.dx = t.dx * c;
    t.dy = t.dy * c;
    t.lap = t.lap * c;
    t.dlap_x = t.dlap_x * c;
    t.dlap_y = t.dlap_y * c;
    return t;
  }

  BasisTables eval(std::span<const Point> pts) const {
    BasisTables t = monomial_tables(pts);
    t.value = t.value * coeffs_;
    t.dx = t.dx * coeffs_;
    t.dy = t.dy * coeffs_;
    t.lap = t.lap * coeffs_;
    t.dlap_x = t.dlap_x * coeffs_;
    t.dlap_y = t.dlap_y * coeffs_;
    return t;
  }

  Eigen::MatrixXd values(std::span<const Point> pts) const {
    const int n = static_cast<int>(pts.size());
    Eigen::MatrixXd v(n, num_monomials());
    std::vector<std::array<double, 4>> X(degree_ + 1), Y(degree_ + 1);
    for (int q = 0; q < n; ++q) {
      derivative_powers((pts[q].x() - center_.x()) / half_.x(), X);
      derivative_powers((pts[q].y() - center_.y()) / half_.y(), Y);
      for (int k = 0; k < num_monomials(); ++k) v(q, k) = X[exps_[k][0]][0] * Y[exps_[k][1]][0];
    }
    return v * coeffs_;
  }

  // True when every point lies in the (slightly enlarged) scaling box.
  bool covers(std::span<const Point> pts, double rel_tol = 1e-9) const {
    for (const auto& x : pts) {
      const Vec2 r = (x - center_).cwiseAbs();
      if (r.x() > half_.x() * (1.0 + rel_tol) || r.y() > half_.y() * (1.0 + rel_tol)) return false;
    }
    return true;
  }

 private:
  template <class T>
  static void derivative_powers(T x, std::vector<std::array<T, 4>>& d) {
    const int p = static_cast<int>(d.size()) - 1;
    std::vector<T> pw(p + 1);
    pw[0] = T(1);
    for (int k = 1; k <= p; ++k) pw[k] = pw[k - 1] * x;
    for (int i = 0; i <= p; ++i) {
      d[i][0] = pw[i];
      d[i][1] = i >= 1 ? T(i) * pw[i - 1] : T(0);
      d[i][2] = i >= 2 ? T(i * (i - 1)) * pw[i - 2] : T(0);
      d[i][3] = i >= 3 ? T(i * (i - 1) * (i - 2)) * pw[i - 3] : T(0);
    }
  }

  int degree_ = 0;
  Point center_ = Point::Zero();
  Vec2 half_ = Vec2::Ones();
  std::vector<std::array<int, 2>> exps_;
  Eigen::MatrixXd coeffs_;
  bool orthonormal_ = false;
};

// Raw monomials lose accuracy quickly with the degree; above this they are
// orthonormalised by default.
inline bool default_orthonormalize(int p) { return p >= 4; }

// Half-widths of the cell's bounding box, guarded against degenerate boxes.
inline Vec2 cell_half_widths(const Cell& cell) {
  Vec2 h = 0.5 * (cell.bbox_hi - cell.bbox_lo);
  const double floor = 1e-3 * h.maxCoeff();
  return h.cwiseMax(Vec2(floor, floor));
}

inline Point cell_box_center(const Cell& cell) { return 0.5 * (cell.bbox_lo + cell.bbox_hi); }

// Gram matrix of the current basis under the rule.
inline Eigen::MatrixXd gram_matrix(const ElementBasis& b, const QuadratureRule& quad) {
  const Eigen::MatrixXd v = b.values(quad.points);
  const Eigen::Map<const Eigen::VectorXd> w(quad.weights.data(), static_cast<Eigen::Index>(quad.weights.size()));
  return v.transpose() * w.asDiagonal() * v;
}

// Cholesky-based Gram-Schmidt, applied twice; the coefficient matrix stays
// upper triangular.
inline void orthonormalize(ElementBasis& b, const QuadratureRule& quad) {
  Eigen::MatrixXd c = b.coefficients();
  for (int pass = 0; pass < 2; ++pass) {
    ElementBasis tmp = b;
    tmp.set_coefficients(c, false);
    const Eigen::MatrixXd g = gram_matrix(tmp, quad);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("orthonormalize: Gram matrix is not positive definite (quadrature too weak?)");
    // c <- c L^{-T}
    const Eigen::MatrixXd lt = llt.matrixU();
    c = lt.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(c);
  }
  b.set_coefficients(std::move(c), true);
}

inline ElementBasis build_basis(const Cell& cell, int cell_id, int p, bool orthonormal, const QuadratureRule& quad) {
  if (p < 2)
    throw std::invalid_argument("build_basis: degree " + std::to_string(p) +
                                " rejected; the interior penalty method for the biharmonic problem needs p >= 2");
  ElementBasis b(p, cell_box_center(cell), cell_half_widths(cell));
  b.cell_id = cell_id;
  if (orthonormal) orthonormalize(b, quad);
  return b;
}

// Same scaled monomials without the p >= 2 restriction (projection spaces,
// inequality checks).
inline ElementBasis build_space(const Cell& cell, int cell_id, int p, bool orthonormal, const QuadratureRule& quad) {
  ElementBasis b(p, cell_box_center(cell), cell_half_widths(cell));
  b.cell_id = cell_id;
  if (orthonormal) orthonormalize(b, quad);
  return b;
}

// ---------------------------------------------------------------------------
// Harmonic polynomials

namespace detail {

struct Fraction {
  long long num = 0;
  long long den = 1;

  Fraction() = default;
  Fraction(long long n, long long d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) num = -num, den = -den;
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) num /= g, den /= g;
  }
  bool zero() const { return num == 0; }
  friend Fraction operator-(const Fraction& a, const Fraction& b) {
    return Fraction(a.num * b.den - b.num * a.den, a.den * b.den);
  }
  friend Fraction operator*(const Fraction& a, const Fraction& b) { return Fraction(a.num * b.num, a.den * b.den); }
  friend Fraction operator/(const Fraction& a, const Fraction& b) { return Fraction(a.num * b.den, a.den * b.num); }
};

}  // namespace detail

// Integer matrix of the Laplacian from monomials of degree <= p to monomials
// of degree <= p - 2 (both in monomial_exponents order).
inline std::vector<std::vector<long long>> laplacian_matrix(int p) {
  const int rows = poly_dim(p - 2), cols = poly_dim(p);
  std::vector<std::vector<long long>> L(static_cast<std::size_t>(rows), std::vector<long long>(cols, 0));
  const auto e = monomial_exponents(p);
  for (int k = 0; k < cols; ++k) {
    const auto [i, j] = e[k];
    if (i >= 2) L[monomial_index(i - 2, j)][k] += static_cast<long long>(i) * (i - 1);
    if (j >= 2) L[monomial_index(i, j - 2)][k] += static_cast<long long>(j) * (j - 1);
  }
  return L;
}

// Exact Laplacian of an integer-coefficient polynomial of degree <= p.
inline std::vector<long long> apply_laplacian(std::span<const long long> coeffs, int p) {
  const auto L = laplacian_matrix(p);
  std::vector<long long> out(L.size(), 0);
  for (std::size_t r = 0; r < L.size(); ++r)
    for (std::size_t k = 0; k < coeffs.size(); ++k) out[r] += L[r][k] * coeffs[k];
  return out;
}

struct HarmonicBasis {
  int degree = 0;
  std::vector<std::vector<long long>> integer_coeffs;  // exact null-space vectors
  Eigen::MatrixXd coeffs;                              // columns, unit Euclidean norm

  int dim() const { return static_cast<int>(coeffs.cols()); }
};

// Null space of the Laplacian on P_p by exact rational elimination.
inline HarmonicBasis harmonic_subspace(int p) {
  if (p < 0) throw std::invalid_argument("harmonic_subspace: negative degree");
  const int cols = poly_dim(p);
  const auto Lint = laplacian_matrix(p);
  const int rows = static_cast<int>(Lint.size());
  std::vector<std::vector<detail::Fraction>> A(rows, std::vector<detail::Fraction>(cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) A[r][c] = detail::Fraction(Lint[r][c]);

  std::vector<int> pivot_col;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (!A[i][c].zero()) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(A[r], A[piv]);
    const detail::Fraction inv = A[r][c];
    for (int k = 0; k < cols; ++k) A[r][k] = A[r][k] / inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r || A[i][c].zero()) continue;
      const detail::Fraction f = A[i][c];
      for (int k = 0; k < cols; ++k) A[i][k] = A[i][k] - f * A[r][k];
    }
    pivot_col.push_back(c);
    ++r;
  }

  std::vector<bool> is_pivot(cols, false);
  for (int c : pivot_col) is_pivot[c] = true;

  HarmonicBasis h;
  h.degree = p;
  for (int free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    std::vector<detail::Fraction> v(cols, detail::Fraction(0));
    v[free] = detail::Fraction(1);
    for (std::size_t i = 0; i < pivot_col.size(); ++i) v[pivot_col[i]] = detail::Fraction(0) - A[i][free];
    long long lcm = 1;
    for (const auto& x : v) lcm = std::lcm(lcm, x.den);
    std::vector<long long> iv(cols);
    for (int k = 0; k < cols; ++k) iv[k] = v[k].num * (lcm / v[k].den);
    h.integer_coeffs.push_back(std::move(iv));
  }
  h.coeffs.resize(cols, static_cast<Eigen::Index>(h.integer_coeffs.size()));
  for (std::size_t j = 0; j < h.integer_coeffs.size(); ++j) {
    for (int k = 0; k < cols; ++k) h.coeffs(k, static_cast<Eigen::Index>(j)) = double(h.integer_coeffs[j][k]);
    h.coeffs.col(static_cast<Eigen::Index>(j)).normalize();
  }
  return h;
}

// Harmonic polynomials of degree <= p on a cell. The scaling is isotropic so
// that harmonicity in the scaled variables carries over to x, y.
inline ElementBasis harmonic_basis_on(const Cell& cell, int p) {
  const Vec2 half = cell_half_widths(cell);
  const double s = half.maxCoeff();
  ElementBasis b(p, cell_box_center(cell), Vec2(s, s));
  b.set_coefficients(harmonic_subspace(p).coeffs, false);
  return b;
}

}  // namespace polydg
