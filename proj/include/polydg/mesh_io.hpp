#pragma once

#include "polydg/mesh.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace polydg {

// Plain-text polygon mesh:
//
//   polymesh 2
//   vertices N
//   x y                      (N lines)
//   cells M
//   k v_0 ... v_{k-1}        (M lines, counter-clockwise loop)
//   faces K
//   v0 v1 left right tag     (K lines, right = -1 on the boundary,
//                             tag = interior | dirichlet)
//
// Coordinates are written with 17 significant digits so that reading back a
// written mesh reproduces it bit for bit.

inline void write_mesh(std::ostream& os, const PolyMesh& mesh) {
  os << "polymesh 2\n";
  os << "vertices " << mesh.num_vertices() << "\n";
  os << std::setprecision(17);
  for (const auto& p : mesh.vertices()) os << p.x() << " " << p.y() << "\n";
  os << "cells " << mesh.num_cells() << "\n";
  for (const auto& c : mesh.cells()) {
    os << c.vertex_ids.size();
    for (int v : c.vertex_ids) os << " " << v;
    os << "\n";
  }
  os << "faces " << mesh.num_faces() << "\n";
  for (const auto& f : mesh.faces()) {
    os << f.vertex_ids[0] << " " << f.vertex_ids[1] << " " << f.cells[0] << " " << f.cells[1] << " "
       << (f.tag == FaceTag::Dirichlet ? "dirichlet" : "interior") << "\n";
  }
}

namespace detail {

inline void expect_keyword(std::istream& is, const std::string& word, long& count) {
  std::string got;
  if (!(is >> got) || got != word) throw MeshError("mesh file: expected '" + word + "', got '" + got + "'");
  if (!(is >> count) || count < 0) throw MeshError("mesh file: bad count after '" + word + "'");
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw MeshError("mesh file: bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline PolyMesh read_mesh(std::istream& is) {
  std::string magic;
  int dim = 0;
  if (!(is >> magic >> dim) || magic != "polymesh") throw MeshError("mesh file: missing 'polymesh' header");
  if (dim != 2) throw MeshError("mesh file: only dimension 2 is supported");

  long n = 0;
  detail::expect_keyword(is, "vertices", n);
  std::vector<Point> vertices(static_cast<std::size_t>(n));
  for (auto& p : vertices) {
    std::string xs, ys;
    if (!(is >> xs >> ys)) throw MeshError("mesh file: truncated vertex list");
    p = Point(detail::parse_double(xs), detail::parse_double(ys));
  }

  detail::expect_keyword(is, "cells", n);
  std::vector<std::vector<int>> loops(static_cast<std::size_t>(n));
  for (auto& loop : loops) {
    int k = 0;
    if (!(is >> k) || k < 3) throw MeshError("mesh file: bad cell loop");
    loop.resize(k);
    for (int& v : loop)
      if (!(is >> v)) throw MeshError("mesh file: truncated cell loop");
  }

  detail::expect_keyword(is, "faces", n);
  std::vector<FaceRecord> faces(static_cast<std::size_t>(n));
  for (auto& f : faces) {
    std::string tag;
    if (!(is >> f.v0 >> f.v1 >> f.left >> f.right >> tag)) throw MeshError("mesh file: truncated face list");
    if (tag == "dirichlet")
      f.tag = FaceTag::Dirichlet;
    else if (tag == "interior")
      f.tag = FaceTag::Interior;
    else
      throw MeshError("mesh file: unknown face tag '" + tag + "'");
  }
  return PolyMesh::from_records(std::move(vertices), std::move(loops), std::move(faces));
}

inline void write_mesh_file(const std::string& path, const PolyMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw MeshError("cannot open '" + path + "' for writing");
  write_mesh(os, mesh);
}

inline PolyMesh read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MeshError("cannot open '" + path + "'");
  return read_mesh(is);
}

}  // namespace polydg
