#pragma once

#include "polydg/face_simplex.hpp"
#include "polydg/geometry.hpp"
#include "polydg/triangulate.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace polydg {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FaceTag { Interior, Dirichlet };

struct Cell {
  std::vector<int> vertex_ids;  // counter-clockwise loop
  std::vector<int> face_ids;    // in boundary traversal order
  double diameter = 0.0;
  double area = 0.0;
  double inradius = 0.0;
  Point centroid = Point::Zero();
  Point incenter = Point::Zero();
  Point bbox_lo = Point::Zero();
  Point bbox_hi = Point::Zero();
  std::vector<Triangle> subtriangles;
  std::vector<FaceSimplex> face_simplices;  // parallel to face_ids

  int local_face(int face_id) const {
    for (std::size_t i = 0; i < face_ids.size(); ++i)
      if (face_ids[i] == face_id) return static_cast<int>(i);
    return -1;
  }
};

struct Face {
  std::array<int, 2> vertex_ids{-1, -1};
  std::array<int, 2> cells{-1, -1};  // cells[0] lies to the left of v0 -> v1
  FaceTag tag = FaceTag::Interior;
  Point a = Point::Zero();
  Point b = Point::Zero();
  double measure = 0.0;
  Vec2 normal = Vec2::Zero();  // unit outward normal of cells[0]

  bool is_boundary() const { return cells[1] < 0; }
  int side_of(int cell) const { return cells[0] == cell ? 0 : (cells[1] == cell ? 1 : -1); }
  Vec2 normal_for(int side) const { return side == 0 ? normal : Vec2(-normal); }
  OrientedSegment seen_from(int side) const { return side == 0 ? OrientedSegment{a, b} : OrientedSegment{b, a}; }
};

// Face line of the mesh file: `v0 v1 cell_left cell_right|-1 tag`.
struct FaceRecord {
  int v0 = -1;
  int v1 = -1;
  int left = -1;
  int right = -1;
  FaceTag tag = FaceTag::Interior;
};

class PolyMesh {
 public:
  PolyMesh() = default;

  // Builds faces by matching cell edges. Edges of one cell that are covered
  // by several collinear edges of neighbours (hanging nodes) are split into
  // one face per overlap.
  static PolyMesh from_polygons(std::vector<Point> vertices, std::vector<std::vector<int>> cells);

  // Uses the given face list verbatim (mesh files).
  static PolyMesh from_records(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                               std::vector<FaceRecord> faces);

  int dimension() const { return 2; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Cell> cells() const { return cells_; }
  std::span<const Face> faces() const { return faces_; }
  const Point& vertex(int i) const { return vertices_[i]; }
  const Cell& cell(int i) const { return cells_[i]; }
  const Face& face(int i) const { return faces_[i]; }

  std::vector<Point> cell_polygon(int c) const {
    std::vector<Point> out;
    out.reserve(cells_[c].vertex_ids.size());
    for (int v : cells_[c].vertex_ids) out.push_back(vertices_[v]);
    return out;
  }

  std::vector<FaceRecord> face_records() const {
    std::vector<FaceRecord> out;
    out.reserve(faces_.size());
    for (const auto& f : faces_) out.push_back({f.vertex_ids[0], f.vertex_ids[1], f.cells[0], f.cells[1], f.tag});
    return out;
  }

  std::vector<std::vector<int>> cell_loops() const {
    std::vector<std::vector<int>> out;
    out.reserve(cells_.size());
    for (const auto& c : cells_) out.push_back(c.vertex_ids);
    return out;
  }

  double total_area() const {
    double a = 0.0;
    for (const auto& c : cells_) a += c.area;
    return a;
  }

  double max_diameter() const {
    double h = 0.0;
    for (const auto& c : cells_) h = std::max(h, c.diameter);
    return h;
  }

  // Applies x -> R x + t to every vertex and rebuilds all derived geometry.
  PolyMesh transformed(const Eigen::Matrix2d& rotation, const Vec2& shift) const {
    std::vector<Point> v;
    v.reserve(vertices_.size());
    for (const auto& p : vertices_) v.push_back(rotation * p + shift);
    return from_records(std::move(v), cell_loops(), face_records());
  }

  // Lists every violated structural invariant (empty when valid).
  std::vector<std::string> validate() const;

 private:
  void finalize();

  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<Face> faces_;
};

namespace detail {

inline std::uint64_t edge_key(int u, int v) {
  const auto lo = static_cast<std::uint32_t>(std::min(u, v));
  const auto hi = static_cast<std::uint32_t>(std::max(u, v));
  return (std::uint64_t(lo) << 32) | hi;
}

inline double scale_of(std::span<const Point> pts) {
  if (pts.empty()) return 1.0;
  Point lo, hi;
  bounding_box(pts, lo, hi);
  return std::max((hi - lo).norm(), std::numeric_limits<double>::min());
}

}  // namespace detail

inline PolyMesh PolyMesh::from_polygons(std::vector<Point> vertices, std::vector<std::vector<int>> loops) {
  PolyMesh m;
  m.vertices_ = std::move(vertices);
  const double tol = 1e-12 * detail::scale_of(m.vertices_);

  m.cells_.resize(loops.size());
  for (std::size_t c = 0; c < loops.size(); ++c) {
    auto& loop = loops[c];
    if (loop.size() < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    std::vector<Point> poly;
    for (int v : loop) {
      if (v < 0 || v >= static_cast<int>(m.vertices_.size()))
        throw MeshError("cell " + std::to_string(c) + " references a missing vertex");
      poly.push_back(m.vertices_[v]);
    }
    if (signed_area(poly) < 0.0) std::reverse(loop.begin(), loop.end());
    m.cells_[c].vertex_ids = loop;
  }

  struct DirectedEdge {
    int cell;
    int u;
    int v;
  };
  std::unordered_map<std::uint64_t, std::vector<DirectedEdge>> by_key;
  std::vector<DirectedEdge> edges;
  for (std::size_t c = 0; c < m.cells_.size(); ++c) {
    const auto& loop = m.cells_[c].vertex_ids;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      DirectedEdge e{static_cast<int>(c), loop[i], loop[(i + 1) % loop.size()]};
      edges.push_back(e);
      by_key[detail::edge_key(e.u, e.v)].push_back(e);
    }
  }

  // Per cell, per loop edge: faces produced for that edge, ordered along it.
  std::vector<std::vector<std::vector<int>>> edge_faces(m.cells_.size());
  for (std::size_t c = 0; c < m.cells_.size(); ++c) edge_faces[c].resize(m.cells_[c].vertex_ids.size());
  auto loop_index = [&](int cell, int u) {
    const auto& loop = m.cells_[cell].vertex_ids;
    return static_cast<int>(std::find(loop.begin(), loop.end(), u) - loop.begin());
  };

  std::vector<DirectedEdge> unmatched;
  for (const auto& e : edges) {
    const auto& bucket = by_key[detail::edge_key(e.u, e.v)];
    const DirectedEdge* twin = nullptr;
    for (const auto& o : bucket)
      if (o.cell != e.cell && o.u == e.v && o.v == e.u) twin = &o;
    if (!twin) {
      unmatched.push_back(e);
      continue;
    }
    if (twin->cell < e.cell) continue;  // created from the other side
    Face f;
    f.vertex_ids = {e.u, e.v};
    f.cells = {e.cell, twin->cell};
    f.tag = FaceTag::Interior;
    const int id = static_cast<int>(m.faces_.size());
    m.faces_.push_back(f);
    edge_faces[e.cell][loop_index(e.cell, e.u)].push_back(id);
    edge_faces[twin->cell][loop_index(twin->cell, twin->u)].push_back(id);
  }

  // Hanging nodes: split each unmatched edge at the endpoints of collinear,
  // oppositely oriented unmatched edges of other cells.
  struct Piece {
    double t0, t1;
    int u, v;
    int other;  // neighbouring cell or -1
  };
  for (const auto& e : unmatched) {
    const Point& pa = m.vertices_[e.u];
    const Point& pb = m.vertices_[e.v];
    const Vec2 d = pb - pa;
    const double len = d.norm();
    const Vec2 dir = d / len;
    std::vector<std::pair<double, int>> cuts{{0.0, e.u}, {1.0, e.v}};
    struct Cover {
      double t0, t1;
      int cell;
    };
    std::vector<Cover> covers;
    for (const auto& o : unmatched) {
      if (o.cell == e.cell) continue;
      const Point& qa = m.vertices_[o.u];
      const Point& qb = m.vertices_[o.v];
      if (std::abs(cross(dir, qa - pa)) > tol || std::abs(cross(dir, qb - pa)) > tol) continue;
      if ((qb - qa).dot(d) >= 0.0) continue;
      const double s0 = (qb - pa).dot(dir) / len;  // o runs opposite: qb is its start along e
      const double s1 = (qa - pa).dot(dir) / len;
      const double lo = std::max(0.0, s0), hi = std::min(1.0, s1);
      if (hi - lo <= tol / len) continue;
      covers.push_back({lo, hi, o.cell});
      if (s0 > tol / len && s0 < 1.0 - tol / len) cuts.emplace_back(s0, o.v);
      if (s1 > tol / len && s1 < 1.0 - tol / len) cuts.emplace_back(s1, o.u);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::pair<double, int>> uniq;
    for (const auto& c : cuts)
      if (uniq.empty() || c.first - uniq.back().first > tol / len) uniq.push_back(c);
    const int edge_slot = loop_index(e.cell, e.u);
    for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
      const double mid = 0.5 * (uniq[k].first + uniq[k + 1].first);
      int other = -1;
      for (const auto& cv : covers)
        if (mid > cv.t0 && mid < cv.t1) other = cv.cell;
      Piece p{uniq[k].first, uniq[k + 1].first, uniq[k].second, uniq[k + 1].second, other};
      if (p.other >= 0 && p.other < e.cell) {
        // Created from the neighbour's side; find it to register here.
        for (std::size_t fid = 0; fid < m.faces_.size(); ++fid) {
          const auto& f = m.faces_[fid];
          if (f.cells[0] == p.other && f.cells[1] == e.cell && f.vertex_ids[0] == p.v && f.vertex_ids[1] == p.u) {
            edge_faces[e.cell][edge_slot].push_back(static_cast<int>(fid));
            break;
          }
        }
        continue;
      }
      Face f;
      f.vertex_ids = {p.u, p.v};
      f.cells = {e.cell, p.other};
      f.tag = p.other >= 0 ? FaceTag::Interior : FaceTag::Dirichlet;
      const int id = static_cast<int>(m.faces_.size());
      m.faces_.push_back(f);
      edge_faces[e.cell][edge_slot].push_back(id);
    }
  }

  // Registration on the neighbour side of hanging faces created above.
  for (std::size_t fid = 0; fid < m.faces_.size(); ++fid) {
    const auto& f = m.faces_[fid];
    if (f.cells[1] < 0) continue;
    bool present = false;
    for (const auto& slot : edge_faces[f.cells[1]])
      if (std::find(slot.begin(), slot.end(), static_cast<int>(fid)) != slot.end()) present = true;
    if (present) continue;
    // Find the neighbour's loop edge containing this face.
    const auto& loop = m.cells_[f.cells[1]].vertex_ids;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Point& p = m.vertices_[loop[i]];
      const Point& q = m.vertices_[loop[(i + 1) % loop.size()]];
      if (on_segment(m.vertices_[f.vertex_ids[0]], p, q, tol) && on_segment(m.vertices_[f.vertex_ids[1]], p, q, tol)) {
        edge_faces[f.cells[1]][i].push_back(static_cast<int>(fid));
        break;
      }
    }
  }

  for (std::size_t c = 0; c < m.cells_.size(); ++c) {
    auto& ids = m.cells_[c].face_ids;
    const auto& loop = m.cells_[c].vertex_ids;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      auto slot = edge_faces[c][i];
      const Point& start = m.vertices_[loop[i]];
      std::sort(slot.begin(), slot.end(), [&](int x, int y) {
        auto mid = [&](int fid) {
          const auto& f = m.faces_[fid];
          return ((m.vertices_[f.vertex_ids[0]] + m.vertices_[f.vertex_ids[1]]) * 0.5 - start).norm();
        };
        return mid(x) < mid(y);
      });
      ids.insert(ids.end(), slot.begin(), slot.end());
    }
  }

  m.finalize();
  return m;
}

inline PolyMesh PolyMesh::from_records(std::vector<Point> vertices, std::vector<std::vector<int>> loops,
                                       std::vector<FaceRecord> records) {
  PolyMesh m;
  m.vertices_ = std::move(vertices);
  m.cells_.resize(loops.size());
  for (std::size_t c = 0; c < loops.size(); ++c) {
    for (int v : loops[c])
      if (v < 0 || v >= m.num_vertices()) throw MeshError("cell " + std::to_string(c) + " references a missing vertex");
    m.cells_[c].vertex_ids = std::move(loops[c]);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.v0 < 0 || r.v0 >= m.num_vertices() || r.v1 < 0 || r.v1 >= m.num_vertices())
      throw MeshError("face " + std::to_string(i) + " references a missing vertex");
    if (r.left < 0 || r.left >= m.num_cells() || r.right >= m.num_cells())
      throw MeshError("face " + std::to_string(i) + " references a missing cell");
    Face f;
    f.vertex_ids = {r.v0, r.v1};
    f.cells = {r.left, r.right};
    f.tag = r.tag;
    m.faces_.push_back(f);
    m.cells_[r.left].face_ids.push_back(static_cast<int>(i));
    if (r.right >= 0) m.cells_[r.right].face_ids.push_back(static_cast<int>(i));
  }
  m.finalize();
  return m;
}

inline void PolyMesh::finalize() {
  for (auto& f : faces_) {
    f.a = vertices_[f.vertex_ids[0]];
    f.b = vertices_[f.vertex_ids[1]];
    const Vec2 d = f.b - f.a;
    f.measure = d.norm();
    if (f.measure <= 0.0) throw MeshError("zero-length face");
    f.normal = perp_right(d) / f.measure;
  }
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    auto& cell = cells_[c];
    const std::vector<Point> poly = cell_polygon(static_cast<int>(c));
    cell.area = signed_area(poly);
    if (cell.area <= 0.0) throw MeshError("cell " + std::to_string(c) + " is not a positively oriented polygon");
    cell.centroid = polygon_centroid(poly);
    cell.diameter = polygon_diameter(poly);
    bounding_box(poly, cell.bbox_lo, cell.bbox_hi);
    try {
      cell.subtriangles = triangulate_polygon(poly);
    } catch (const TriangulationError& e) {
      throw MeshError("cell " + std::to_string(c) + ": " + e.what());
    }
    const Circle inc = largest_inscribed_circle(poly, 1e-13 * cell.diameter);
    cell.incenter = inc.center;
    cell.inradius = inc.radius;

    std::vector<OrientedSegment> segs;
    segs.reserve(cell.face_ids.size());
    for (int fid : cell.face_ids) {
      const Face& f = faces_[fid];
      const int side = f.side_of(static_cast<int>(c));
      if (side < 0) throw MeshError("face " + std::to_string(fid) + " is not adjacent to cell " + std::to_string(c));
      segs.push_back(f.seen_from(side));
    }
    cell.face_simplices =
        assign_face_simplices(poly, segs, cell.subtriangles, cell.centroid, cell.incenter, cell.diameter);
  }
}

inline std::vector<std::string> PolyMesh::validate() const {
  std::vector<std::string> issues;
  const double scale = detail::scale_of(vertices_);
  const double tol = 1e-10 * scale;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& cell = cells_[c];
    const std::string tag = "cell " + std::to_string(c) + ": ";
    if (!(cell.diameter > 0.0 && cell.area > 0.0 && cell.inradius > 0.0 && cell.inradius <= cell.diameter))
      issues.push_back(tag + "non-positive or inconsistent size measures");
    double tri_area = 0.0;
    for (const auto& t : cell.subtriangles) tri_area += t.area();
    if (std::abs(tri_area - cell.area) > 1e-12 * cell.area) issues.push_back(tag + "subtriangulation area mismatch");
    double perim = 0.0, face_len = 0.0;
    const auto& loop = cell.vertex_ids;
    for (std::size_t i = 0; i < loop.size(); ++i)
      perim += (vertices_[loop[(i + 1) % loop.size()]] - vertices_[loop[i]]).norm();
    for (int fid : cell.face_ids) face_len += faces_[fid].measure;
    if (std::abs(perim - face_len) > 1e-10 * perim) issues.push_back(tag + "faces do not cover the boundary");
    if (cell.face_simplices.size() != cell.face_ids.size()) issues.push_back(tag + "face simplices missing");
    for (const auto& s : cell.face_simplices)
      if (!(s.height > 0.0)) issues.push_back(tag + "face simplex with zero height");
  }
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    const auto& f = faces_[i];
    const std::string tag = "face " + std::to_string(i) + ": ";
    if (std::abs(f.normal.norm() - 1.0) > 1e-14) issues.push_back(tag + "normal not unit");
    if (f.is_boundary() != (f.tag == FaceTag::Dirichlet)) issues.push_back(tag + "tag does not match adjacency");
    if (f.cells[0] == f.cells[1]) issues.push_back(tag + "both sides are the same cell");
    for (int v : f.vertex_ids) {
      bool found = false;
      for (int side = 0; side < 2; ++side) {
        if (f.cells[side] < 0) continue;
        const auto& loop = cells_[f.cells[side]].vertex_ids;
        if (std::find(loop.begin(), loop.end(), v) != loop.end()) found = true;
      }
      if (!found) issues.push_back(tag + "endpoint is not a vertex of an adjacent cell");
    }
    // Each side must see the face on its own boundary with matching orientation.
    for (int side = 0; side < 2; ++side) {
      const int c = f.cells[side];
      if (c < 0) continue;
      const auto seg = f.seen_from(side);
      const auto poly = cell_polygon(c);
      bool on_boundary = false;
      for (std::size_t k = 0; k < poly.size() && !on_boundary; ++k) {
        const Point& p = poly[k];
        const Point& q = poly[(k + 1) % poly.size()];
        if (on_segment(seg.a, p, q, tol) && on_segment(seg.b, p, q, tol) && (seg.b - seg.a).dot(q - p) > 0.0)
          on_boundary = true;
      }
      if (!on_boundary) issues.push_back(tag + "not on the boundary of adjacent cell " + std::to_string(c));
    }
  }
  return issues;
}

}  // namespace polydg
