#pragma once

#include "polydg/mesh.hpp"
#include "polydg/voronoi.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace polydg {

namespace detail {

// Face records for a conforming mesh given by counter-clockwise loops.
inline std::vector<FaceRecord> conforming_face_records(const std::vector<std::vector<int>>& loops) {
  std::unordered_map<std::uint64_t, int> open;
  std::vector<FaceRecord> rec;
  open.reserve(loops.size() * 3);
  for (std::size_t c = 0; c < loops.size(); ++c) {
    const auto& l = loops[c];
    for (std::size_t k = 0; k < l.size(); ++k) {
      const int u = l[k], v = l[(k + 1) % l.size()];
      const auto key = edge_key(u, v);
      auto it = open.find(key);
      if (it == open.end()) {
        open.emplace(key, static_cast<int>(rec.size()));
        rec.push_back({u, v, static_cast<int>(c), -1, FaceTag::Dirichlet});
      } else {
        FaceRecord& r = rec[it->second];
        if (r.right >= 0) throw MeshError("edge shared by more than two cells");
        r.right = static_cast<int>(c);
        r.tag = FaceTag::Interior;
      }
    }
  }
  return rec;
}

}  // namespace detail

// Uniform triangulation of a rectangle: nx * ny squares, each cut along one
// diagonal, with the diagonal direction alternating in a checkerboard.
inline PolyMesh criss_cross_mesh(const Rect& r, int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("criss_cross_mesh: nx and ny must be positive");
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  const Vec2 span = r.hi - r.lo;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) v.emplace_back(r.lo.x() + span.x() * i / nx, r.lo.y() + span.y() * j / ny);
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::vector<int>> loops;
  loops.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        loops.push_back({a, b, c});
        loops.push_back({a, c, d});
      } else {
        loops.push_back({a, b, d});
        loops.push_back({b, c, d});
      }
    }
  auto rec = detail::conforming_face_records(loops);
  return PolyMesh::from_records(std::move(v), std::move(loops), std::move(rec));
}

struct AgglomerationOptions {
  int lloyd_iters = 8;
  int max_attempts = 20;
  int max_repairs = 10000;
};

namespace detail {

struct DualGraph {
  std::vector<std::vector<int>> nbr;
};

inline DualGraph dual_graph(const PolyMesh& m) {
  DualGraph g;
  g.nbr.resize(static_cast<std::size_t>(m.num_cells()));
  for (const auto& f : m.faces())
    if (!f.is_boundary()) {
      g.nbr[f.cells[0]].push_back(f.cells[1]);
      g.nbr[f.cells[1]].push_back(f.cells[0]);
    }
  return g;
}

// Seeded breadth-first accretion: each aggregate keeps a FIFO front, and the
// aggregate with the smallest area so far claims the next unowned cell from
// its front. Aggregates stay connected and grow at balanced rates.
inline std::vector<int> grow(const PolyMesh& m, const DualGraph& g, const std::vector<int>& seeds) {
  const int n = static_cast<int>(seeds.size());
  std::vector<int> owner(g.nbr.size(), -1);
  std::vector<std::deque<int>> front(static_cast<std::size_t>(n));
  std::vector<double> area(static_cast<std::size_t>(n), 0.0);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  for (int k = 0; k < n; ++k) {
    owner[seeds[k]] = k;
    area[k] = m.cell(seeds[k]).area;
    for (int nb : g.nbr[seeds[k]]) front[k].push_back(nb);
    pq.emplace(area[k], k);
  }
  while (!pq.empty()) {
    const int k = pq.top().second;
    pq.pop();
    auto& q = front[k];
    while (!q.empty() && owner[q.front()] >= 0) q.pop_front();
    if (q.empty()) continue;
    const int c = q.front();
    q.pop_front();
    owner[c] = k;
    area[k] += m.cell(c).area;
    for (int nb : g.nbr[c])
      if (owner[nb] < 0) q.push_back(nb);
    pq.emplace(area[k], k);
  }
  return owner;
}

// Farthest-point seeds on cell centroids, starting from a random cell.
inline std::vector<int> spread_seeds(const PolyMesh& m, int n, std::mt19937_64& rng) {
  const int N = m.num_cells();
  std::vector<int> seeds;
  seeds.reserve(static_cast<std::size_t>(n));
  seeds.push_back(std::uniform_int_distribution<int>(0, N - 1)(rng));
  std::vector<double> dist(static_cast<std::size_t>(N), std::numeric_limits<double>::infinity());
  while (static_cast<int>(seeds.size()) < n) {
    const Point& s = m.cell(seeds.back()).centroid;
    int best = -1;
    double bd = -1.0;
    for (int c = 0; c < N; ++c) {
      dist[c] = std::min(dist[c], (m.cell(c).centroid - s).squaredNorm());
      if (dist[c] > bd) {
        bd = dist[c];
        best = c;
      }
    }
    seeds.push_back(best);
  }
  return seeds;
}

// Member cell nearest to the area-weighted centroid of each aggregate.
inline std::vector<int> recentre(const PolyMesh& m, const std::vector<int>& owner, int n) {
  std::vector<Point> sum(static_cast<std::size_t>(n), Point::Zero());
  std::vector<double> area(static_cast<std::size_t>(n), 0.0);
  for (int c = 0; c < m.num_cells(); ++c) {
    sum[owner[c]] += m.cell(c).area * m.cell(c).centroid;
    area[owner[c]] += m.cell(c).area;
  }
  std::vector<int> seed(static_cast<std::size_t>(n), -1);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int c = 0; c < m.num_cells(); ++c) {
    const int k = owner[c];
    const double d = (m.cell(c).centroid - sum[k] / area[k]).squaredNorm();
    if (d < best[k]) {
      best[k] = d;
      seed[k] = c;
    }
  }
  return seed;
}

// Directed boundary edges u -> v of an aggregate (counter-clockwise), keyed by
// tail vertex, with the fine face id.
struct BoundaryEdge {
  int u = -1;
  int v = -1;
  int face = -1;
};

inline std::vector<std::vector<BoundaryEdge>> boundary_edges(const PolyMesh& fine, const std::vector<int>& owner,
                                                             int n) {
  std::vector<std::vector<BoundaryEdge>> out(static_cast<std::size_t>(n));
  for (int f = 0; f < fine.num_faces(); ++f) {
    const Face& face = fine.face(f);
    const int a = owner[face.cells[0]];
    const int b = face.is_boundary() ? -1 : owner[face.cells[1]];
    if (a == b) continue;
    out[a].push_back({face.vertex_ids[0], face.vertex_ids[1], f});
    if (b >= 0) out[b].push_back({face.vertex_ids[1], face.vertex_ids[0], f});
  }
  return out;
}

// Vertices where an aggregate touches itself (more than one outgoing boundary
// edge). Sorted, one entry per vertex.
inline std::vector<int> pinch_vertices(const std::vector<BoundaryEdge>& edges) {
  std::vector<int> tails;
  tails.reserve(edges.size());
  for (const auto& e : edges) tails.push_back(e.u);
  std::sort(tails.begin(), tails.end());
  std::vector<int> out;
  for (std::size_t i = 1; i < tails.size(); ++i)
    if (tails[i] == tails[i - 1] && (out.empty() || out.back() != tails[i])) out.push_back(tails[i]);
  return out;
}

// Traces the boundary loops of an aggregate without pinches. Returns the loops
// as sequences of edges.
inline std::vector<std::vector<BoundaryEdge>> trace_loops(const std::vector<BoundaryEdge>& edges) {
  std::unordered_map<int, int> from;
  from.reserve(edges.size() * 2);
  for (std::size_t i = 0; i < edges.size(); ++i) from.emplace(edges[i].u, static_cast<int>(i));
  std::vector<bool> used(edges.size(), false);
  // Start at the edge with the smallest tail vertex for a canonical loop.
  std::vector<int> order(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return edges[a].u < edges[b].u; });
  std::vector<std::vector<BoundaryEdge>> loops;
  for (int start : order) {
    if (used[start]) continue;
    std::vector<BoundaryEdge> loop;
    int e = start;
    while (!used[e]) {
      used[e] = true;
      loop.push_back(edges[e]);
      auto it = from.find(edges[e].v);
      if (it == from.end()) throw MeshError("agglomerate: open aggregate boundary");
      e = it->second;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

inline bool connected_without(const DualGraph& g, const std::vector<int>& owner, int removed) {
  const int k = owner[removed];
  int start = -1, members = 0;
  for (std::size_t c = 0; c < owner.size(); ++c)
    if (owner[c] == k && static_cast<int>(c) != removed) {
      ++members;
      if (start < 0) start = static_cast<int>(c);
    }
  if (members == 0) return false;
  std::vector<char> seen(owner.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  int count = 0;
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    ++count;
    for (int n : g.nbr[c])
      if (!seen[n] && owner[n] == k && n != removed) {
        seen[n] = 1;
        stack.push_back(n);
      }
  }
  return count == members;
}

}  // namespace detail

// Coarsens `fine` into n_target aggregates grown by seeded breadth-first
// accretion on the dual graph, with Lloyd recentring sweeps. Aggregate
// boundaries keep every fine face; collinear faces are not merged. Aggregates
// that touch themselves at a vertex are repaired by moving a cell at that
// vertex to a neighbouring aggregate; aggregates with holes trigger a regrow
// from fresh seeds.
inline std::vector<int> agglomeration_map(const PolyMesh& fine, int n_target, std::uint64_t seed,
                                          std::vector<std::string>* log = nullptr,
                                          const AgglomerationOptions& opt = {}) {
  const int N = fine.num_cells();
  if (n_target < 1 || n_target > N)
    throw std::invalid_argument("agglomerate: n_target must lie in [1, " + std::to_string(N) + "]");
  const detail::DualGraph g = detail::dual_graph(fine);
  // Cells incident to each vertex, for pinch repair.
  std::vector<std::vector<int>> around(static_cast<std::size_t>(fine.num_vertices()));
  for (int c = 0; c < N; ++c)
    for (int v : fine.cell(c).vertex_ids) around[v].push_back(c);

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    std::vector<int> seeds = detail::spread_seeds(fine, n_target, rng);
    std::vector<int> owner = detail::grow(fine, g, seeds);
    for (int it = 0; it < opt.lloyd_iters; ++it) {
      seeds = detail::recentre(fine, owner, n_target);
      owner = detail::grow(fine, g, seeds);
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end())
      throw MeshError("agglomerate: the fine mesh is not connected");

    bool ok = false;
    for (int repair = 0; repair <= opt.max_repairs; ++repair) {
      const auto edges = detail::boundary_edges(fine, owner, n_target);
      int bad = -1, vertex = -1;
      for (int k = 0; k < n_target && bad < 0; ++k) {
        const auto p = detail::pinch_vertices(edges[k]);
        if (!p.empty()) {
          bad = k;
          vertex = p.front();
        }
      }
      if (bad < 0) {
        bool holes = false;
        for (int k = 0; k < n_target; ++k)
          if (detail::trace_loops(edges[k]).size() != 1) {
            holes = true;
            if (log) log->push_back("aggregate " + std::to_string(k) + " encloses another; regrown from fresh seeds");
            break;
          }
        ok = !holes;
        break;
      }
      // Move one cell of `bad` at the pinch to an edge-adjacent aggregate,
      // keeping `bad` connected. Smallest cell id first for determinism.
      bool moved = false;
      for (int c : around[vertex]) {
        if (owner[c] != bad) continue;
        int target = -1;
        for (int n : g.nbr[c])
          if (owner[n] != bad) {
            target = owner[n];
            break;
          }
        if (target < 0 || !detail::connected_without(g, owner, c)) continue;
        owner[c] = target;
        moved = true;
        break;
      }
      if (!moved) break;
    }
    if (ok) {
      if (log && attempt > 0) log->push_back("agglomerate: succeeded on attempt " + std::to_string(attempt + 1));
      return owner;
    }
    if (log) log->push_back("agglomerate: attempt " + std::to_string(attempt + 1) + " left a defective aggregate");
  }
  throw MeshError("agglomerate: no valid aggregation after " + std::to_string(opt.max_attempts) + " attempts");
}

// Builds the coarse mesh for a cell-to-aggregate map.
inline PolyMesh coarsen(const PolyMesh& fine, const std::vector<int>& owner, int n) {
  const auto edges = detail::boundary_edges(fine, owner, n);
  std::vector<int> new_id(static_cast<std::size_t>(fine.num_vertices()), -1);
  std::vector<Point> verts;
  std::vector<std::vector<int>> loops(static_cast<std::size_t>(n));
  std::vector<int> face_done(static_cast<std::size_t>(fine.num_faces()), 0);
  std::vector<FaceRecord> rec;
  auto vid = [&](int v) {
    if (new_id[v] < 0) {
      new_id[v] = static_cast<int>(verts.size());
      verts.push_back(fine.vertex(v));
    }
    return new_id[v];
  };
  for (int k = 0; k < n; ++k) {
    const auto loop = detail::trace_loops(edges[k]);
    if (loop.size() != 1) throw MeshError("coarsen: aggregate " + std::to_string(k) + " is not simply connected");
    for (const auto& e : loop.front()) {
      loops[k].push_back(vid(e.u));
      if (face_done[e.face]) continue;
      face_done[e.face] = 1;
      const Face& f = fine.face(e.face);
      FaceRecord r;
      r.v0 = vid(f.vertex_ids[0]);
      r.v1 = vid(f.vertex_ids[1]);
      r.left = owner[f.cells[0]];
      r.right = f.is_boundary() ? -1 : owner[f.cells[1]];
      r.tag = f.is_boundary() ? FaceTag::Dirichlet : FaceTag::Interior;
      rec.push_back(r);
    }
  }
  return PolyMesh::from_records(std::move(verts), std::move(loops), std::move(rec));
}

inline PolyMesh agglomerate(const PolyMesh& fine, int n_target, std::uint64_t seed,
                            std::vector<std::string>* log = nullptr, const AgglomerationOptions& opt = {}) {
  return coarsen(fine, agglomeration_map(fine, n_target, seed, log, opt), n_target);
}

}  // namespace polydg
