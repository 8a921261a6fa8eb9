#include "polydg/penalty.hpp"
#include "polydg/voronoi.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace polydg;

namespace {

PolyMesh unit_square_cell() {
  return PolyMesh::from_polygons({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}});
}

PolyMesh dilate(const PolyMesh& m, double s) { return m.transformed(s * Eigen::Matrix2d::Identity(), Vec2(0.3, -1.2)); }

}  // namespace

TEST(Penalty, BoundedUnitSquareValues) {
  const PolyMesh m = unit_square_cell();
  const std::vector<int> deg{2};
  PenaltyConstants k;
  k.c_sigma = 1.0;
  k.c_tau = 1.0;
  const PenaltyField pf = penalties_bounded(m, deg, k);
  // Each face simplex has area 1/4, so C_INV = min(4, p^2) = 4; h^2 = 2.
  for (int f = 0; f < 4; ++f) {
    EXPECT_NEAR(pf.sigma[f], 128.0, 1e-10);
    EXPECT_NEAR(pf.tau[f], 16.0, 1e-12);
  }
}

TEST(Penalty, CInvCapsAtPPowerWhenCoverable) {
  const PolyMesh m = unit_square_cell();
  EXPECT_NEAR(c_inv_factor(m, 0, 0, 2, true, 1.0), 4.0, 1e-12);
  EXPECT_NEAR(c_inv_factor(m, 0, 0, 3, true, 1.0), 4.0, 1e-12);
  EXPECT_NEAR(c_inv_factor(m, 0, 0, 3, false, 2.5), 10.0, 1e-12);
}

TEST(Penalty, CInvRejectsForeignFace) {
  const PolyMesh m = PolyMesh::from_polygons({{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}},
                                             {{0, 1, 4, 5}, {1, 2, 3, 4}});
  int foreign = -1;
  for (int f = 0; f < m.num_faces(); ++f)
    if (m.cell(0).local_face(f) < 0) foreign = f;
  ASSERT_GE(foreign, 0);
  EXPECT_THROW(c_inv_factor(m, 0, foreign, 2, true, 1.0), std::invalid_argument);
}

TEST(Penalty, ArbitraryUnitSquareValues) {
  const PolyMesh m = unit_square_cell();
  const std::vector<int> deg{2};
  PenaltyConstants k;
  k.c_sigma = 1.0;
  k.c_tau = 1.0;
  const PenaltyField pf = penalties_arbitrary(m, deg, k);
  const double g = 3.0 * 4.0 / std::sqrt(2.0);
  for (int f = 0; f < 4; ++f) {
    EXPECT_NEAR(pf.sigma[f], g * g * g, 1e-10);
    EXPECT_NEAR(pf.tau[f], g, 1e-12);
  }
}

TEST(Penalty, ArbitraryRejectsHighDegreeUnlessOverridden) {
  const PolyMesh m = unit_square_cell();
  const std::vector<int> deg{4};
  EXPECT_THROW(penalties_arbitrary(m, deg, {}), std::invalid_argument);
  EXPECT_NO_THROW(penalties_arbitrary(m, deg, {}, true));
}

TEST(Penalty, RejectsLowDegreeAndWrongCount) {
  const PolyMesh m = unit_square_cell();
  EXPECT_THROW(penalties_bounded(m, std::vector<int>{1}, {}), std::invalid_argument);
  EXPECT_THROW(penalties_bounded(m, std::vector<int>{2, 2}, {}), std::invalid_argument);
}

TEST(Penalty, ParseRegime) {
  EXPECT_EQ(parse_regime("bounded"), Regime::BoundedFaces);
  EXPECT_EQ(parse_regime("arbitrary"), Regime::ArbitraryFaces);
  EXPECT_THROW(parse_regime("other"), std::invalid_argument);
}

// Property: under x -> s x, sigma scales as s^-3 and tau as s^-1.
TEST(Penalty, DilationScaling) {
  const PolyMesh m = generate_voronoi(Rect{Point(0, 0), Point(1, 1)}, 25, 5, 9);
  const std::vector<int> deg(static_cast<std::size_t>(m.num_cells()), 3);
  for (double s : {0.1, 3.0}) {
    const PolyMesh ms = dilate(m, s);
    for (Regime r : {Regime::BoundedFaces, Regime::ArbitraryFaces}) {
      PenaltyConfig cfg;
      cfg.regime = r;
      const PenaltyField a = make_penalties(m, deg, cfg);
      const PenaltyField b = make_penalties(ms, deg, cfg);
      for (int f = 0; f < m.num_faces(); ++f) {
        EXPECT_NEAR(b.sigma[f], a.sigma[f] / (s * s * s), 1e-9 * b.sigma[f]);
        EXPECT_NEAR(b.tau[f], a.tau[f] / s, 1e-9 * b.tau[f]);
      }
    }
  }
}

// Property: penalties depend on the unordered pair of neighbours only.
TEST(Penalty, SymmetricInNeighbours) {
  const PolyMesh m = generate_voronoi(Rect{Point(0, 0), Point(1, 1)}, 16, 5, 2);
  std::vector<FaceRecord> rec = m.face_records();
  for (auto& r : rec)
    if (r.right >= 0) {
      std::swap(r.left, r.right);
      std::swap(r.v0, r.v1);
    }
  std::vector<Point> verts(m.vertices().begin(), m.vertices().end());
  const PolyMesh flipped = PolyMesh::from_records(verts, m.cell_loops(), rec);
  std::vector<int> deg(static_cast<std::size_t>(m.num_cells()));
  for (int c = 0; c < m.num_cells(); ++c) deg[c] = 2 + c % 2;
  for (Regime r : {Regime::BoundedFaces, Regime::ArbitraryFaces}) {
    PenaltyConfig cfg;
    cfg.regime = r;
    const PenaltyField a = make_penalties(m, deg, cfg);
    const PenaltyField b = make_penalties(flipped, deg, cfg);
    for (int f = 0; f < m.num_faces(); ++f) {
      EXPECT_NEAR(a.sigma[f], b.sigma[f], 1e-12 * a.sigma[f]);
      EXPECT_NEAR(a.tau[f], b.tau[f], 1e-12 * a.tau[f]);
    }
  }
}

// Property: sigma and tau are linear in C_sigma and C_tau.
TEST(Penalty, LinearInConstants) {
  const PolyMesh m = generate_voronoi(Rect{Point(0, 0), Point(1, 1)}, 9, 5, 3);
  const std::vector<int> deg(static_cast<std::size_t>(m.num_cells()), 2);
  PenaltyConstants k1, k2;
  k2.c_sigma = 3.0 * k1.c_sigma;
  k2.c_tau = 0.5 * k1.c_tau;
  const PenaltyField a = penalties_bounded(m, deg, k1);
  const PenaltyField b = penalties_bounded(m, deg, k2);
  for (int f = 0; f < m.num_faces(); ++f) {
    EXPECT_NEAR(b.sigma[f], 3.0 * a.sigma[f], 1e-12 * b.sigma[f]);
    EXPECT_NEAR(b.tau[f], 0.5 * a.tau[f], 1e-12 * b.tau[f]);
  }
}
