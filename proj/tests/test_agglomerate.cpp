#include "polydg/agglomerate.hpp"
#include "polydg/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace polydg;

namespace {

bool collinear(const Face& a, const Face& b) {
  const Vec2 da = a.b - a.a;
  auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
  return std::abs(cross(da, b.a - a.a)) < 1e-12 && std::abs(cross(da, b.b - a.a)) < 1e-12;
}

}  // namespace

TEST(CrissCross, CountsAndArea) {
  const PolyMesh m = criss_cross_mesh(Rect{}, 4, 3);
  EXPECT_EQ(m.num_cells(), 24);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-14);
  EXPECT_TRUE(m.validate().empty());
  int boundary = 0;
  for (const auto& f : m.faces()) boundary += f.is_boundary();
  EXPECT_EQ(boundary, 2 * (4 + 3));
}

TEST(Agglomerate, TargetEqualToCellCountIsIdentity) {
  const PolyMesh fine = criss_cross_mesh(Rect{}, 3, 3);
  const std::vector<int> owner = agglomeration_map(fine, fine.num_cells(), 5);
  std::vector<int> sorted = owner;
  std::sort(sorted.begin(), sorted.end());
  for (int k = 0; k < fine.num_cells(); ++k) EXPECT_EQ(sorted[k], k);
  const PolyMesh m = coarsen(fine, owner, fine.num_cells());
  EXPECT_EQ(m.num_cells(), fine.num_cells());
  EXPECT_EQ(m.num_faces(), fine.num_faces());
  for (int c = 0; c < fine.num_cells(); ++c) EXPECT_NEAR(m.cell(owner[c]).area, fine.cell(c).area, 1e-15);
}

// Two aggregates of the 2x2 criss-cross square: BFS fronts from the two
// farthest seeds meet along a polyline of fine edges, and fine faces there
// are kept separate.
TEST(Agglomerate, EightTrianglesIntoTwo) {
  const PolyMesh fine = criss_cross_mesh(Rect{}, 2, 2);
  ASSERT_EQ(fine.num_cells(), 8);
  const PolyMesh m = agglomerate(fine, 2, 0);
  ASSERT_EQ(m.num_cells(), 2);
  EXPECT_NEAR(m.cell(0).area + m.cell(1).area, 1.0, 1e-14);
  std::vector<int> shared;
  for (int f = 0; f < m.num_faces(); ++f)
    if (!m.face(f).is_boundary()) shared.push_back(f);
  ASSERT_GE(shared.size(), 2u);
  bool some_collinear_pair = false;
  for (std::size_t i = 0; i < shared.size(); ++i)
    for (std::size_t j = i + 1; j < shared.size(); ++j)
      some_collinear_pair |= collinear(m.face(shared[i]), m.face(shared[j]));
  EXPECT_TRUE(some_collinear_pair);
}

TEST(Agglomerate, RejectsBadTarget) {
  const PolyMesh fine = criss_cross_mesh(Rect{}, 2, 2);
  EXPECT_THROW(agglomerate(fine, 0, 1), std::invalid_argument);
  EXPECT_THROW(agglomerate(fine, 9, 1), std::invalid_argument);
}

// Properties on a moderate fine mesh: valid cells that are unions of fine
// cells, connected and simply connected, with unmerged collinear faces.
TEST(Agglomerate, CoarseMeshInvariants) {
  const PolyMesh fine = criss_cross_mesh(Rect{}, 32, 32);
  for (int n : {4, 16, 64}) {
    std::vector<std::string> log;
    const std::vector<int> owner = agglomeration_map(fine, n, 3, &log);
    const PolyMesh m = coarsen(fine, owner, n);
    EXPECT_EQ(m.num_cells(), n);
    EXPECT_TRUE(m.validate().empty());
    EXPECT_NEAR(m.total_area(), 1.0, 1e-10);
    std::vector<double> area(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < fine.num_cells(); ++c) area[owner[c]] += fine.cell(c).area;
    for (int k = 0; k < n; ++k) EXPECT_NEAR(m.cell(k).area, area[k], 1e-12);
    // Total face length is preserved: every coarse face is a fine face.
    double fine_len = 0.0, coarse_len = 0.0;
    for (const auto& f : fine.faces())
      if (f.is_boundary() || owner[f.cells[0]] != owner[f.cells[1]]) fine_len += f.measure;
    for (const auto& f : m.faces()) coarse_len += f.measure;
    EXPECT_NEAR(coarse_len, fine_len, 1e-12);
  }
}

TEST(Agglomerate, DeterministicForSeed) {
  const PolyMesh fine = criss_cross_mesh(Rect{}, 16, 16);
  EXPECT_EQ(agglomeration_map(fine, 10, 7), agglomeration_map(fine, 10, 7));
}

TEST(Agglomerate, CoarseCellsHaveManyFaces) {
  const PolyMesh fine = criss_cross_mesh(Rect{}, 64, 64);
  const PolyMesh m = agglomerate(fine, 8, 1);
  EXPECT_GT(compute_metrics(m, 2).face_count_max, 50);
}
