#include "polydg/agglomerate.hpp"
#include "polydg/verify.hpp"
#include "polydg/voronoi.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace polydg;

namespace {

PolyMesh unit_square_cell() {
  return PolyMesh::from_polygons({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}});
}

const Triangle kUnitRight{{Point(0, 0), Point(1, 0), Point(0, 1)}};

}  // namespace

TEST(SimplexTrace, ConstantsAttainTheBound) {
  const InequalityWitness w = check_simplex_trace(kUnitRight, 1, 0, 10);
  const double ratio = std::sqrt(2.0) / 0.5;
  EXPECT_NEAR(w.max_ratio, ratio, 1e-12);
  EXPECT_NEAR(w.bound, ratio, 1e-12);
  EXPECT_TRUE(w.holds());
}

// Oracle: generalized eigenvalue of the exact face and cell mass matrices of
// the monomials 1, x, y, x^2, xy, y^2 on the reference triangle, with the
// hypotenuse as the face. Entries are integrals of x^a y^b:
// cell a! b! / (a+b+2)!, hypotenuse sqrt(2) a! b! / (a+b+1)!.
TEST(SimplexTrace, QuadraticsOnReferenceTriangle) {
  auto fact = [](int n) {
    double f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
  };
  const auto e = monomial_exponents(2);
  const int n = static_cast<int>(e.size());
  Eigen::MatrixXd M(n, n), K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int a = e[i][0] + e[j][0], b = e[i][1] + e[j][1];
      M(i, j) = fact(a) * fact(b) / fact(a + b + 2);
      K(i, j) = std::sqrt(2.0) * fact(a) * fact(b) / fact(a + b + 1);
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  const double want = es.eigenvalues().maxCoeff();
  const InequalityWitness w = check_simplex_trace(kUnitRight, 1, 2, 50);
  EXPECT_NEAR(w.max_ratio, want, 1e-9 * want);
  EXPECT_NEAR(w.bound, 6.0 * std::sqrt(2.0) / 0.5, 1e-12);
  EXPECT_TRUE(w.holds());
}

TEST(SimplexTrace, SliverStillHolds) {
  const Triangle sliver{{Point(0, 0), Point(1, 0.001), Point(0.4, 0.0015)}};
  for (int p = 0; p <= 6; ++p)
    for (int e = 0; e < 3; ++e) {
      const InequalityWitness w = check_simplex_trace(sliver, e, p, 10);
      EXPECT_TRUE(w.holds()) << "p=" << p << " e=" << e << " ratio " << w.max_ratio << " bound " << w.bound;
      EXPECT_GT(w.max_ratio, 0.0);
    }
}

// Property: sampled ratios never exceed the eigenvalue maximum.
TEST(SimplexTrace, SamplingDoesNotBeatEigensolve) {
  const Triangle t{{Point(0.1, 0.2), Point(0.9, 0.35), Point(0.3, 0.8)}};
  const double eig = check_simplex_trace(t, 0, 4, 0).max_ratio;
  const double both = check_simplex_trace(t, 0, 4, 500).max_ratio;
  EXPECT_NEAR(both, eig, 1e-10 * eig);
}

TEST(SimplexTrace, SmallRandomSuite) {
  const SuiteReport r = simplex_trace_suite(50, 6, 3, 5);
  EXPECT_EQ(r.checks, 50 * 7 * 3);
  EXPECT_TRUE(r.passed());
  EXPECT_GE(r.min_slack, 0.0);
}

TEST(PolytopicTrace, ConstantOnSquare) {
  const PolyMesh m = unit_square_cell();
  const InequalityWitness w = check_polytopic_trace(m, 0, 0);
  EXPECT_NEAR(w.max_ratio, 4.0, 1e-12);
  EXPECT_TRUE(w.holds());
}

// Oracle: 1D mass matrices on [0,1]; the square's boundary Gram pair for P_1
// is assembled from exact integrals of 1, x, y on edges and the cell.
TEST(PolytopicTrace, LinearsOnSquare) {
  // Basis 1, x-1/2, y-1/2 is orthogonal on the square with norms 1, 1/12, 1/12.
  Eigen::Matrix3d M = Eigen::Vector3d(1, 1.0 / 12, 1.0 / 12).asDiagonal();
  // Boundary: 4 edges of length 1; int (x-1/2)^2 over the boundary is
  // 2 * (1/12) + 2 * (1/4) = 2/3, cross terms vanish by symmetry.
  Eigen::Matrix3d K = Eigen::Vector3d(4, 2.0 / 3, 2.0 / 3).asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> es(K, M);
  const PolyMesh m = unit_square_cell();
  const InequalityWitness w = check_polytopic_trace(m, 0, 1);
  EXPECT_NEAR(w.max_ratio, es.eigenvalues().maxCoeff(), 1e-10);
  EXPECT_TRUE(w.holds());
}

TEST(PolytopicTrace, ManyFaceCellDoesNotDegrade) {
  const PolyMesh fine = criss_cross_mesh(Rect{}, 32, 32);
  const PolyMesh m = agglomerate(fine, 4, 2);
  for (int p : {2, 4}) {
    const SuiteReport r = polytopic_trace_suite(m, p);
    EXPECT_TRUE(r.passed()) << "p=" << p;
  }
}

TEST(HarmonicH1, ConstantHasZeroRatio) {
  const PolyMesh m = unit_square_cell();
  const InequalityWitness w = check_harmonic_h1(m, 0, 0);
  EXPECT_NEAR(w.max_ratio, 0.0, 1e-14);
  EXPECT_TRUE(w.holds());
}

// On the unit square H_1 = span{1, x, y}; x - 1/2 gives ||grad v||^2/||v||^2 = 12,
// the maximum, while v = x alone gives 3.
TEST(HarmonicH1, LinearsOnSquare) {
  const PolyMesh m = unit_square_cell();
  const InequalityWitness w = check_harmonic_h1(m, 0, 1);
  EXPECT_NEAR(w.max_ratio, 12.0, 1e-10);
  const double cs = cell_face_simplex_constant(m, 0);
  EXPECT_NEAR(w.bound, std::pow(cs * 2.0 * 3.0 / std::sqrt(2.0), 2), 1e-10);
  EXPECT_GE(w.bound, 3.0);
  EXPECT_TRUE(w.holds());
  EXPECT_GE(w.full_space_ratio, w.max_ratio - 1e-10);
}

TEST(HarmonicH1, VoronoiCellsHold) {
  const PolyMesh m = generate_voronoi(Rect{}, 30, 20, 4);
  for (int p = 0; p <= 6; ++p) EXPECT_TRUE(harmonic_h1_suite(m, p).passed()) << "p=" << p;
}

// Property: the observed quotient scales as h^-2 under dilation.
TEST(HarmonicH1, DilationScaling) {
  const PolyMesh m = generate_voronoi(Rect{}, 8, 10, 6);
  const auto prof = harmonic_dilation_profile(m, 3, 4, {0.01, 1.0, 100.0});
  EXPECT_NEAR(prof[0] / prof[1], 1.0, 1e-6);
  EXPECT_NEAR(prof[2] / prof[1], 1.0, 1e-6);
}

TEST(HarmonicH1, RejectsDegreeAboveSix) {
  const PolyMesh m = unit_square_cell();
  EXPECT_THROW(check_harmonic_h1(m, 0, 7), std::invalid_argument);
}
