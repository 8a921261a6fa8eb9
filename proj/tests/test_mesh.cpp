#include "polydg/mesh.hpp"
#include "polydg/mesh_io.hpp"
#include "polydg/metrics.hpp"
#include "polydg/voronoi.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace polydg;

namespace {

const Rect kUnit{Point(0, 0), Point(1, 1)};

PolyMesh unit_square_cell() {
  return PolyMesh::from_polygons({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}});
}

void expect_valid(const PolyMesh& m) {
  const auto issues = m.validate();
  for (const auto& s : issues) ADD_FAILURE() << s;
}

void expect_face_simplices_admissible(const PolyMesh& m) {
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto& cell = m.cell(c);
    const auto poly = m.cell_polygon(c);
    std::vector<Triangle> tris;
    for (std::size_t k = 0; k < cell.face_ids.size(); ++k) {
      const Face& f = m.face(cell.face_ids[k]);
      const auto seg = f.seen_from(f.side_of(c));
      const Triangle t{{seg.a, seg.b, cell.face_simplices[k].apex}};
      EXPECT_GT(t.signed_area(), 0.0);
      EXPECT_TRUE(triangle_inside_polygon(t, poly, 1e-9)) << "cell " << c << " face " << k;
      tris.push_back(t);
    }
    for (std::size_t i = 0; i < tris.size(); ++i)
      for (std::size_t j = i + 1; j < tris.size(); ++j)
        EXPECT_FALSE(triangles_overlap(tris[i], tris[j], 1e-10 * cell.diameter)) << "cell " << c;
  }
}

}  // namespace

TEST(Voronoi, SingleSeedGivesTheSquare) {
  const PolyMesh m = generate_voronoi(kUnit, 1, 0, 12345);
  ASSERT_EQ(m.num_cells(), 1);
  EXPECT_EQ(m.num_faces(), 4);
  for (const auto& f : m.faces()) EXPECT_TRUE(f.is_boundary());
  EXPECT_NEAR(m.cell(0).area, 1.0, 1e-15);
  expect_valid(m);
}

TEST(Voronoi, SixtyFourCellsWithLloyd) {
  const PolyMesh m = generate_voronoi(kUnit, 64, 100, 42);
  EXPECT_EQ(m.num_cells(), 64);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-12);
  EXPECT_LE(compute_metrics(m, 2).face_count_max, 8);
  expect_valid(m);
  expect_face_simplices_admissible(m);
}

TEST(Voronoi, FourSeedsRelaxToQuarters) {
  const PolyMesh m = generate_voronoi(kUnit, 4, 1000, 7);
  ASSERT_EQ(m.num_cells(), 4);
  for (const auto& c : m.cells()) EXPECT_NEAR(c.area, 0.25, 0.01);
}

TEST(Voronoi, DeterministicForFixedSeed) {
  const PolyMesh a = generate_voronoi(kUnit, 50, 10, 9);
  const PolyMesh b = generate_voronoi(kUnit, 50, 10, 9);
  std::ostringstream sa, sb;
  write_mesh(sa, a);
  write_mesh(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Voronoi, RejectsBadArguments) {
  EXPECT_THROW(generate_voronoi(kUnit, 0, 0, 1), std::invalid_argument);
  EXPECT_THROW(generate_voronoi(kUnit, 4, -1, 1), std::invalid_argument);
}

TEST(Voronoi, CoincidentSeedsAreReportedAndSeparated) {
  std::vector<Point> seeds{{0.3, 0.3}, {0.3, 0.3}, {0.7, 0.6}};
  std::mt19937_64 rng(1);
  std::vector<std::string> log;
  detail::separate_coincident_seeds(kUnit, seeds, rng, &log);
  EXPECT_FALSE(log.empty());
  EXPECT_GT((seeds[0] - seeds[1]).norm(), 0.0);
}

TEST(Mesh, InvariantsOnVoronoiFamily) {
  for (int n : {16, 64, 256}) {
    const PolyMesh m = generate_voronoi(kUnit, n, 30, 1000 + n);
    EXPECT_NEAR(m.total_area(), 1.0, 1e-10);
    for (const auto& f : m.faces()) {
      EXPECT_NEAR(f.normal.norm(), 1.0, 1e-14);
      if (!f.is_boundary()) {
        EXPECT_LT((f.normal_for(0) + f.normal_for(1)).norm(), 1e-12);
      }
    }
    expect_valid(m);
  }
}

TEST(Mesh, HangingNodeSplitsFaces) {
  // Left: one tall cell. Right: two stacked cells. The left cell's right edge
  // is covered by two faces.
  std::vector<Point> v{{0, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0, 1}, {2, 0}, {2, 0.5}, {2, 1}};
  const PolyMesh m = PolyMesh::from_polygons(v, {{0, 1, 3, 4}, {1, 5, 6, 2}, {2, 6, 7, 3}});
  expect_valid(m);
  int shared = 0;
  for (int fid : m.cell(0).face_ids)
    if (!m.face(fid).is_boundary()) ++shared;
  EXPECT_EQ(shared, 2);
  EXPECT_EQ(m.cell(0).face_ids.size(), 5u);
  expect_face_simplices_admissible(m);
}

TEST(Mesh, ClockwiseLoopsAreReoriented) {
  const PolyMesh m = PolyMesh::from_polygons({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{3, 2, 1, 0}});
  EXPECT_NEAR(m.cell(0).area, 1.0, 1e-15);
  expect_valid(m);
}

TEST(Metrics, UnitSquareCell) {
  const PolyMesh m = unit_square_cell();
  const MeshMetrics mm = compute_metrics(m, 2);
  EXPECT_EQ(mm.face_count_max, 4);
  EXPECT_NEAR(mm.face_simplex, 2.0 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(mm.shape_regularity, std::sqrt(2.0) / 0.5, 1e-6);
  EXPECT_EQ(mm.theta, 1.0);
}

// Brute-force oracle: the best achievable worst-face height for four
// disjoint face triangles in the unit square is 1/2. Sample apex positions on
// a grid, one common height per face, and confirm that no larger common
// height admits disjoint simplices.
TEST(Metrics, UnitSquareFaceSimplexHeightIsOptimalAgainstSampling) {
  const PolyMesh m = unit_square_cell();
  double best = 0.0;
  const int n = 40;
  for (int k = 1; k <= n; ++k) {
    const double h = 0.5 + 0.5 * k / n;
    bool ok = false;
    for (int i = 0; i <= n && !ok; ++i) {
      const double t = double(i) / n;
      // Symmetric placement: each face apex at height h, offset t along the face.
      std::vector<Triangle> tris{
          Triangle{{Point(0, 0), Point(1, 0), Point(t, h)}},
          Triangle{{Point(1, 0), Point(1, 1), Point(1 - h, t)}},
          Triangle{{Point(1, 1), Point(0, 1), Point(1 - t, 1 - h)}},
          Triangle{{Point(0, 1), Point(0, 0), Point(h, 1 - t)}},
      };
      bool disjoint = true;
      for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) disjoint = disjoint && !triangles_overlap(tris[a], tris[b], 1e-12);
      ok = disjoint;
    }
    if (ok) best = h;
  }
  EXPECT_EQ(best, 0.0);
  for (const auto& s : m.cell(0).face_simplices) EXPECT_NEAR(s.height, 0.5, 1e-12);
}

TEST(Metrics, EquilateralTriangleShapeRegularity) {
  const double side = 1.7;
  const PolyMesh m =
      PolyMesh::from_polygons({{0, 0}, {side, 0}, {0.5 * side, std::sqrt(3.0) / 2.0 * side}}, {{0, 1, 2}});
  const MeshMetrics mm = compute_metrics(m, 2);
  EXPECT_EQ(mm.face_count_max, 3);
  const double rho = side / (2.0 * std::sqrt(3.0));
  EXPECT_NEAR(mm.shape_regularity, side / rho, 1e-9);
  EXPECT_NEAR(mm.shape_regularity, 2.0 * std::sqrt(3.0), 1e-9);
}

TEST(Metrics, SymmetricPairHasUnitTheta) {
  const PolyMesh m =
      PolyMesh::from_polygons({{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}}, {{0, 1, 4, 5}, {1, 2, 3, 4}});
  EXPECT_DOUBLE_EQ(compute_metrics(m, 3).theta, 1.0);
  const std::vector<int> mixed{2, 3};
  EXPECT_NEAR(compute_metrics(m, mixed).theta, (4.0 * 5.0) / (3.0 * 4.0), 1e-14);
}

TEST(Metrics, RejectsLowDegrees) {
  const PolyMesh m = unit_square_cell();
  EXPECT_THROW(compute_metrics(m, 1), std::invalid_argument);
}

TEST(Metrics, InvariantUnderRigidMotions) {
  const PolyMesh m = generate_voronoi(kUnit, 40, 20, 5);
  const MeshMetrics a = compute_metrics(m, 3);
  const double t = 0.7;
  Eigen::Matrix2d R;
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  const PolyMesh moved = m.transformed(R, Vec2(3.5, -2.25));
  const MeshMetrics b = compute_metrics(moved, 3);
  EXPECT_EQ(a.face_count_max, b.face_count_max);
  EXPECT_NEAR(a.shape_regularity, b.shape_regularity, 1e-10 * a.shape_regularity);
  EXPECT_NEAR(a.face_simplex, b.face_simplex, 1e-10 * a.face_simplex);
  EXPECT_NEAR(a.theta, b.theta, 1e-10);
}

TEST(MeshIo, RoundTripIsExact) {
  const PolyMesh m = generate_voronoi(kUnit, 30, 5, 77);
  std::ostringstream os;
  write_mesh(os, m);
  std::istringstream is(os.str());
  const PolyMesh r = read_mesh(is);
  ASSERT_EQ(r.num_vertices(), m.num_vertices());
  ASSERT_EQ(r.num_cells(), m.num_cells());
  ASSERT_EQ(r.num_faces(), m.num_faces());
  for (int i = 0; i < m.num_vertices(); ++i) EXPECT_EQ(r.vertex(i), m.vertex(i));
  for (int c = 0; c < m.num_cells(); ++c) {
    EXPECT_EQ(r.cell(c).vertex_ids, m.cell(c).vertex_ids);
    EXPECT_EQ(r.cell(c).area, m.cell(c).area);
  }
  for (int f = 0; f < m.num_faces(); ++f) {
    EXPECT_EQ(r.face(f).vertex_ids, m.face(f).vertex_ids);
    EXPECT_EQ(r.face(f).cells, m.face(f).cells);
    EXPECT_EQ(r.face(f).tag, m.face(f).tag);
  }
  std::ostringstream again;
  write_mesh(again, r);
  EXPECT_EQ(again.str(), os.str());
}

TEST(MeshIo, MalformedInputIsRejected) {
  std::istringstream bad("polymesh 2\nvertices 1\n0 zero\n");
  EXPECT_THROW(read_mesh(bad), MeshError);
  std::istringstream tag("polymesh 2\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n3 0 1 2\nfaces 1\n0 1 0 -1 neumann\n");
  EXPECT_THROW(read_mesh(tag), MeshError);
}
