#pragma once

#include "polydg/geometry.hpp"
#include "polydg/mesh.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace polydg {

namespace detail {

class SeedGrid {
 public:
  SeedGrid(const Rect& domain, std::span<const Point> seeds) : domain_(domain), seeds_(seeds) {
    side_ = std::max(1, static_cast<int>(std::ceil(std::sqrt(double(seeds.size())))));
    dx_ = domain.width() / side_;
    dy_ = domain.height() / side_;
    buckets_.assign(static_cast<std::size_t>(side_ * side_), {});
    for (std::size_t i = 0; i < seeds.size(); ++i) buckets_[bucket_of(seeds[i])].push_back(static_cast<int>(i));
  }

  // Visits the seeds bucket ring by ring around `center_seed` until
  // `done(ring_distance)` returns true.
  template <class Visit, class Done>
  void rings(int center_seed, Visit&& visit, Done&& done) const {
    const auto [ci, cj] = coords(seeds_[center_seed]);
    for (int r = 0; r <= side_; ++r) {
      for (int i = ci - r; i <= ci + r; ++i) {
        for (int j = cj - r; j <= cj + r; ++j) {
          if (std::max(std::abs(i - ci), std::abs(j - cj)) != r) continue;
          if (i < 0 || j < 0 || i >= side_ || j >= side_) continue;
          for (int s : buckets_[static_cast<std::size_t>(i * side_ + j)])
            if (s != center_seed) visit(s);
        }
      }
      if (done(r * std::min(dx_, dy_))) return;
    }
  }

 private:
  std::pair<int, int> coords(const Point& p) const {
    const int i = std::clamp(static_cast<int>((p.x() - domain_.lo.x()) / dx_), 0, side_ - 1);
    const int j = std::clamp(static_cast<int>((p.y() - domain_.lo.y()) / dy_), 0, side_ - 1);
    return {i, j};
  }
  std::size_t bucket_of(const Point& p) const {
    const auto [i, j] = coords(p);
    return static_cast<std::size_t>(i * side_ + j);
  }

  Rect domain_;
  std::span<const Point> seeds_;
  int side_ = 1;
  double dx_ = 1.0, dy_ = 1.0;
  std::vector<std::vector<int>> buckets_;
};

// Voronoi cells of `seeds` clipped to the rectangle, by successive
// half-plane clipping against nearby bisectors.
inline std::vector<std::vector<Point>> clipped_voronoi_cells(const Rect& domain, std::span<const Point> seeds) {
  SeedGrid grid(domain, seeds);
  std::vector<std::vector<Point>> cells(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::vector<Point> poly{domain.lo, Point(domain.hi.x(), domain.lo.y()), domain.hi,
                            Point(domain.lo.x(), domain.hi.y())};
    const Point s = seeds[i];
    auto reach = [&] {
      double r = 0.0;
      for (const auto& p : poly) r = std::max(r, (p - s).norm());
      return r;
    };
    grid.rings(
        static_cast<int>(i),
        [&](int j) {
          const Vec2 n = seeds[j] - s;
          poly = clip_halfplane(poly, n, n.dot(0.5 * (s + seeds[j])));
        },
        [&](double ring_distance) { return ring_distance > 2.0 * reach(); });
    cells[i] = std::move(poly);
  }
  return cells;
}

inline void separate_coincident_seeds(const Rect& domain, std::vector<Point>& seeds, std::mt19937_64& rng,
                                      std::vector<std::string>* log) {
  const double tol = 1e-12 * std::hypot(domain.width(), domain.height());
  const double jitter = 1e-6 * std::min(domain.width(), domain.height());
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::unordered_map<long long, std::vector<int>> cells;
    const double cell = std::max(tol * 4.0, 1e-300);
    bool clash = false;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto kx = static_cast<long long>(std::floor(seeds[i].x() / cell));
      const auto ky = static_cast<long long>(std::floor(seeds[i].y() / cell));
      bool moved = false;
      for (long long dx = -1; dx <= 1 && !moved; ++dx) {
        for (long long dy = -1; dy <= 1 && !moved; ++dy) {
          auto it = cells.find((kx + dx) * 1000003LL + (ky + dy));
          if (it == cells.end()) continue;
          for (int j : it->second) {
            if ((seeds[j] - seeds[i]).norm() <= tol) {
              Point p = seeds[i] + jitter * Point(unit(rng), unit(rng));
              p = p.cwiseMax(domain.lo).cwiseMin(domain.hi);
              if (log)
                log->push_back("seed " + std::to_string(i) + " coincides with seed " + std::to_string(j) +
                               "; regenerated with jitter");
              seeds[i] = p;
              moved = clash = true;
              break;
            }
          }
        }
      }
      if (!moved) cells[kx * 1000003LL + ky].push_back(static_cast<int>(i));
    }
    if (!clash) return;
  }
  throw MeshError("generate_voronoi: could not separate coincident seeds");
}

// Merges vertices closer than `tol` and turns polygons into index loops.
inline PolyMesh weld_polygons(const std::vector<std::vector<Point>>& polys, double tol) {
  std::vector<Point> verts;
  std::unordered_map<long long, std::vector<int>> grid;
  const double cell = 4.0 * tol;
  auto key = [](long long x, long long y) { return x * 2000003LL + y; };
  auto find_or_add = [&](const Point& p) {
    const auto kx = static_cast<long long>(std::floor(p.x() / cell));
    const auto ky = static_cast<long long>(std::floor(p.y() / cell));
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = grid.find(key(kx + dx, ky + dy));
        if (it == grid.end()) continue;
        for (int v : it->second)
          if ((verts[v] - p).norm() <= tol) return v;
      }
    const int id = static_cast<int>(verts.size());
    verts.push_back(p);
    grid[key(kx, ky)].push_back(id);
    return id;
  };
  std::vector<std::vector<int>> loops;
  loops.reserve(polys.size());
  for (const auto& poly : polys) {
    std::vector<int> loop;
    for (const auto& p : poly) {
      const int v = find_or_add(p);
      if (loop.empty() || loop.back() != v) loop.push_back(v);
    }
    while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
    if (loop.size() < 3) throw MeshError("generate_voronoi: a cell collapsed while welding vertices");
    loops.push_back(std::move(loop));
  }
  return PolyMesh::from_polygons(std::move(verts), std::move(loops));
}

}  // namespace detail

// Clipped Voronoi tessellation of `n_cells` random seeds in `domain` after
// `lloyd_iters` centroidal (Lloyd) relaxation sweeps. Deterministic for a
// fixed seed. Coincident seeds are re-jittered and reported through `log`.
inline PolyMesh generate_voronoi(const Rect& domain, int n_cells, int lloyd_iters, std::uint64_t seed,
                                 std::vector<std::string>* log = nullptr) {
  if (n_cells < 1) throw std::invalid_argument("generate_voronoi: n_cells must be at least 1");
  if (lloyd_iters < 0) throw std::invalid_argument("generate_voronoi: lloyd_iters must be non-negative");
  if (!(domain.width() > 0.0 && domain.height() > 0.0)) throw std::invalid_argument("generate_voronoi: empty domain");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(domain.lo.x(), domain.hi.x());
  std::uniform_real_distribution<double> uy(domain.lo.y(), domain.hi.y());
  std::vector<Point> seeds(static_cast<std::size_t>(n_cells));
  for (auto& s : seeds) {
    const double x = ux(rng);
    s = Point(x, uy(rng));
  }

  std::vector<std::vector<Point>> cells;
  for (int it = 0; it <= lloyd_iters; ++it) {
    detail::separate_coincident_seeds(domain, seeds, rng, log);
    cells = detail::clipped_voronoi_cells(domain, seeds);
    if (it == lloyd_iters) break;
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = polygon_centroid(cells[i]);
  }
  const double tol = 1e-10 * std::hypot(domain.width(), domain.height());
  return detail::weld_polygons(cells, tol);
}

}  // namespace polydg
