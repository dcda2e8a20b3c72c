#ifndef SSA_GEOMETRY_HPP
#define SSA_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "ssa/core.hpp"

namespace ssa {

// ---------------------------------------------------------------------------
// Spatial hashing
// ---------------------------------------------------------------------------

/// Dense bucket grid over a box. Cells are at least `cell_size` wide, so all
/// items within `cell_size` of a query point sit in the 3^dim surrounding cells.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(const Point& lower, const Point& upper, int dim, double cell_size) : lower_(lower), dim_(dim) {
    require(cell_size > 0.0, "grid cell size must be positive");
    for (int a = 0; a < 3; ++a) {
      const double ext = a < dim ? upper[a] - lower[a] : 0.0;
      n_[a] = a < dim ? std::max(1, static_cast<int>(std::floor(ext / cell_size))) : 1;
      inv_[a] = (a < dim && ext > 0.0) ? n_[a] / ext : 0.0;
    }
    buckets_.assign(static_cast<std::size_t>(n_[0]) * n_[1] * n_[2], {});
  }

  SpatialGrid(const Window& w, double cell_size) : SpatialGrid(w.lower(), w.upper(), w.dim(), cell_size) {}

  std::array<int, 3> cell_of(const Point& p) const {
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < dim_; ++a)
      c[a] = std::clamp(static_cast<int>(std::floor((p[a] - lower_[a]) * inv_[a])), 0, n_[a] - 1);
    return c;
  }

  void insert(int index, const Point& p) { bucket(cell_of(p)).push_back(index); }

  void erase(int index, const Point& p) {
    auto& b = bucket(cell_of(p));
    auto it = std::find(b.begin(), b.end(), index);
    require(it != b.end(), "spatial grid: index not found in bucket");
    *it = b.back();
    b.pop_back();
  }

  /// Rename an item (used when the owning vector swap-removes).
  void relabel(int from, int to, const Point& p) {
    auto& b = bucket(cell_of(p));
    std::replace(b.begin(), b.end(), from, to);
  }

  void clear() {
    for (auto& b : buckets_) b.clear();
  }

  template <class F>
  void for_each_near(const Point& p, F&& f) const {
    const auto c = cell_of(p);
    const int z0 = std::max(0, c[2] - 1), z1 = std::min(n_[2] - 1, c[2] + 1);
    const int y0 = std::max(0, c[1] - 1), y1 = std::min(n_[1] - 1, c[1] + 1);
    const int x0 = std::max(0, c[0] - 1), x1 = std::min(n_[0] - 1, c[0] + 1);
    for (int k = z0; k <= z1; ++k)
      for (int j = y0; j <= y1; ++j)
        for (int i = x0; i <= x1; ++i)
          for (int idx : buckets_[flat(i, j, k)]) f(idx);
  }

 private:
  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * n_[1] + j) * n_[0] + i;
  }
  std::vector<int>& bucket(const std::array<int, 3>& c) { return buckets_[flat(c[0], c[1], c[2])]; }

  Point lower_{};
  int dim_ = 2;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> inv_{0, 0, 0};
  std::vector<std::vector<int>> buckets_;
};

/// Number of unordered pairs at Euclidean distance strictly below r.
inline long long pair_count(std::span<const Point> points, double r) {
  require(r > 0.0, "pair_count: radius must be positive");
  if (points.size() < 2) return 0;
  Point lo = points[0], hi = points[0];
  for (const auto& p : points)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  SpatialGrid grid(lo, hi, 3, r);
  const double r2 = r * r;
  long long count = 0;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    grid.for_each_near(points[i], [&](int j) {
      if (squared_distance(points[i], points[j]) < r2) ++count;
    });
    grid.insert(i, points[i]);
  }
  return count;
}

// ---------------------------------------------------------------------------
// Union-of-balls measure by midpoint quadrature
// ---------------------------------------------------------------------------

/// Regular grid of cubic cells with edge `h`; cell (i,j,k) has centre origin + (idx + 1/2) h.
struct QuadratureGrid {
  Point origin{};
  double h = 1.0;
  int dim = 2;
  std::array<int, 3> n{1, 1, 1};

  double cell_volume() const { return dim == 2 ? h * h : h * h * h; }
  double center(int axis, int idx) const { return origin[axis] + (idx + 0.5) * h; }

  /// Cells of row (j, k) whose centres lie in the closed ball b(p, r), clamped to the grid.
  std::optional<std::pair<int, int>> ball_row(const Point& p, double r, int j, int k) const {
    const double dy = center(1, j) - p.y;
    const double dz = dim == 3 ? center(2, k) - p.z : 0.0;
    const double rem = r * r - dy * dy - dz * dz;
    if (rem < 0.0) return std::nullopt;
    const double w = std::sqrt(rem);
    const int lo = std::max(0, static_cast<int>(std::ceil((p.x - w - origin.x) / h - 0.5)));
    const int hi = std::min(n[0] - 1, static_cast<int>(std::floor((p.x + w - origin.x) / h - 0.5)));
    if (lo > hi) return std::nullopt;
    return std::make_pair(lo, hi);
  }

  /// Visit every non-empty row span of the ball as f(j, k, lo, hi).
  template <class F>
  void for_each_ball_row(const Point& p, double r, F&& f) const {
    const int j0 = std::max(0, static_cast<int>(std::floor((p.y - r - origin.y) / h - 0.5)));
    const int j1 = std::min(n[1] - 1, static_cast<int>(std::ceil((p.y + r - origin.y) / h - 0.5)));
    int k0 = 0, k1 = 0;
    if (dim == 3) {
      k0 = std::max(0, static_cast<int>(std::floor((p.z - r - origin.z) / h - 0.5)));
      k1 = std::min(n[2] - 1, static_cast<int>(std::ceil((p.z + r - origin.z) / h - 0.5)));
    }
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j)
        if (auto span = ball_row(p, r, j, k)) f(j, k, span->first, span->second);
  }
};

/// nu[ union_i b(y_i, r) ] in 2-D (area) or 3-D (volume). The grid is anchored at
/// the lower corner of the union's bounding box. With `clip` set, only cells whose
/// centres lie inside the window count.
inline double union_balls_measure(std::span<const Point> points, double r, const Window& window, double resolution,
                                  bool clip = false) {
  require(r > 0.0 && resolution > 0.0, "union_balls_measure: radius and resolution must be positive");
  if (points.empty()) return 0.0;
  const int dim = window.dim();
  QuadratureGrid g;
  g.dim = dim;
  g.h = resolution;
  Point lo = points[0], hi = points[0];
  for (const auto& p : points)
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  for (int a = 0; a < dim; ++a) {
    g.origin[a] = lo[a] - r;
    g.n[a] = static_cast<int>(std::ceil((hi[a] - lo[a] + 2.0 * r) / resolution)) + 1;
  }

  // Collect one interval per (ball, row), then merge per row.
  struct Run {
    long long row;
    int lo, hi;
  };
  std::vector<Run> runs;
  for (const auto& p : points)
    g.for_each_ball_row(p, r, [&](int j, int k, int a, int b) {
      runs.push_back({static_cast<long long>(k) * g.n[1] + j, a, b});
    });
  std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return std::tie(a.row, a.lo) < std::tie(b.row, b.lo); });

  auto count_clipped = [&](long long row, int a, int b) -> long long {
    if (!clip) return b - a + 1;
    const int j = static_cast<int>(row % g.n[1]);
    const int k = static_cast<int>(row / g.n[1]);
    const double cy = g.center(1, j), cz = dim == 3 ? g.center(2, k) : 0.0;
    if (cy < window.lower().y || cy > window.upper().y) return 0;
    if (dim == 3 && (cz < window.lower().z || cz > window.upper().z)) return 0;
    const int ia = std::max(a, static_cast<int>(std::ceil((window.lower().x - g.origin.x) / g.h - 0.5)));
    const int ib = std::min(b, static_cast<int>(std::floor((window.upper().x - g.origin.x) / g.h - 0.5)));
    return ib >= ia ? ib - ia + 1 : 0;
  };

  long long covered = 0;
  std::size_t i = 0;
  while (i < runs.size()) {
    const long long row = runs[i].row;
    int cur_lo = runs[i].lo, cur_hi = runs[i].hi;
    for (++i; i < runs.size() && runs[i].row == row; ++i) {
      if (runs[i].lo <= cur_hi + 1) {
        cur_hi = std::max(cur_hi, runs[i].hi);
      } else {
        covered += count_clipped(row, cur_lo, cur_hi);
        cur_lo = runs[i].lo;
        cur_hi = runs[i].hi;
      }
    }
    covered += count_clipped(row, cur_lo, cur_hi);
  }
  return static_cast<double>(covered) * g.cell_volume();
}

/// Window-anchored coverage counts used inside samplers. Every cell stores how
/// many balls cover its centre; the covered measure is an exact integer count
/// times the cell volume, so birth/death updates telescope without drift.
/// Rows are stored in lazily allocated chunks, so fine 3-D grids only pay for
/// the region the balls actually touch.
class CoverageGrid {
 public:
  static constexpr int kChunk = 64;

  CoverageGrid() = default;
  CoverageGrid(const Window& window, double r, double resolution, bool clip_to_window) : r_(r) {
    require(r > 0.0 && resolution > 0.0, "coverage grid: radius and resolution must be positive");
    g_.dim = window.dim();
    g_.h = resolution;
    for (int a = 0; a < g_.dim; ++a) {
      if (clip_to_window) {
        g_.origin[a] = window.lower()[a];
        g_.n[a] = static_cast<int>(std::floor(window.extent(a) / resolution - 0.5)) + 1;
      } else {
        g_.origin[a] = window.lower()[a] - r;
        g_.n[a] = static_cast<int>(std::ceil((window.extent(a) + 2.0 * r) / resolution)) + 1;
      }
    }
    chunks_per_row_ = (g_.n[0] + kChunk - 1) / kChunk;
    const double table = static_cast<double>(g_.n[1]) * g_.n[2] * chunks_per_row_;
    require(table < 4e8, "coverage grid: resolution too fine for the window");
    chunk_of_.assign(static_cast<std::size_t>(table), 0);
    pool_.assign(kChunk, 0);  // chunk 0 is the shared all-zero chunk
  }

  double radius() const { return r_; }
  const QuadratureGrid& grid() const { return g_; }
  long long covered_cells() const { return covered_; }
  double covered_measure() const { return static_cast<double>(covered_) * g_.cell_volume(); }
  double cell_volume() const { return g_.cell_volume(); }

  /// Cells that adding a ball at p would newly cover.
  long long birth_gain(const Point& p) const { return count_in_ball(p, 0); }
  /// Cells that removing the ball at p would uncover (p must currently be present).
  long long death_loss(const Point& p) const { return count_in_ball(p, 1); }

  /// Net change in covered cells if the ball at `from` is moved to `to`.
  long long move_change(const Point& from, const Point& to) const {
    long long change = count_in_ball(to, 0);
    g_.for_each_ball_row(from, r_, [&](int j, int k, int a, int b) {
      const auto other = g_.ball_row(to, r_, j, k);
      for_each_run(j, k, a, b, [&](const std::uint16_t* c, int lo, int hi, int base) {
        for (int i = lo; i <= hi; ++i)
          if (c[i - base] == 1 && !(other && i >= other->first && i <= other->second)) --change;
      });
    });
    return change;
  }

  void add(const Point& p) {
    g_.for_each_ball_row(p, r_, [&](int j, int k, int a, int b) {
      for_each_run_mut(j, k, a, b, [&](std::uint16_t* c, int lo, int hi, int base) {
        for (int i = lo; i <= hi; ++i) covered_ += (c[i - base]++ == 0);
      });
    });
  }

  void remove(const Point& p) {
    g_.for_each_ball_row(p, r_, [&](int j, int k, int a, int b) {
      for_each_run_mut(j, k, a, b, [&](std::uint16_t* c, int lo, int hi, int base) {
        for (int i = lo; i <= hi; ++i) covered_ -= (--c[i - base] == 0);
      });
    });
  }

 private:
  std::size_t chunk_slot(int j, int k, int chunk) const {
    return (static_cast<std::size_t>(k) * g_.n[1] + j) * chunks_per_row_ + chunk;
  }

  // f(cells, lo, hi, base): cells[i - base] is the count of cell i for i in [lo, hi].
  template <class F>
  void for_each_run(int j, int k, int a, int b, F&& f) const {
    for (int ch = a / kChunk; ch <= b / kChunk; ++ch) {
      const int base = ch * kChunk;
      const std::uint32_t id = chunk_of_[chunk_slot(j, k, ch)];
      f(&pool_[static_cast<std::size_t>(id) * kChunk], std::max(a, base), std::min(b, base + kChunk - 1), base);
    }
  }

  template <class F>
  void for_each_run_mut(int j, int k, int a, int b, F&& f) {
    for (int ch = a / kChunk; ch <= b / kChunk; ++ch) {
      const int base = ch * kChunk;
      std::uint32_t& id = chunk_of_[chunk_slot(j, k, ch)];
      if (id == 0) {
        id = static_cast<std::uint32_t>(pool_.size() / kChunk);
        pool_.resize(pool_.size() + kChunk, 0);
      }
      f(&pool_[static_cast<std::size_t>(id) * kChunk], std::max(a, base), std::min(b, base + kChunk - 1), base);
    }
  }

  long long count_in_ball(const Point& p, std::uint16_t value) const {
    long long n = 0;
    g_.for_each_ball_row(p, r_, [&](int j, int k, int a, int b) {
      for_each_run(j, k, a, b, [&](const std::uint16_t* c, int lo, int hi, int base) {
        for (int i = lo; i <= hi; ++i) n += (c[i - base] == value);
      });
    });
    return n;
  }

  QuadratureGrid g_;
  double r_ = 1.0;
  int chunks_per_row_ = 1;
  std::vector<std::uint32_t> chunk_of_;
  std::vector<std::uint16_t> pool_;
  long long covered_ = 0;
};

// ---------------------------------------------------------------------------
// Distances to filament spines
// ---------------------------------------------------------------------------

struct SpineSet {
  std::vector<std::vector<Point>> polylines;

  bool empty() const { return polylines.empty(); }

  void validate() const {
    require(!polylines.empty(), "spine set is empty");
    for (const auto& line : polylines) {
      require(line.size() >= 2, "each spine polyline needs at least two vertices");
      for (const auto& v : line)
        require(std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z), "spine vertex is not finite");
    }
  }
};

inline double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const double ux = b.x - a.x, uy = b.y - a.y, uz = b.z - a.z;
  const double len2 = ux * ux + uy * uy + uz * uz;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * ux + (p.y - a.y) * uy + (p.z - a.z) * uz) / len2, 0.0, 1.0);
  return distance(p, Point{a.x + t * ux, a.y + t * uy, a.z + t * uz});
}

/// d(p, F): minimum distance from p to any segment of any spine.
inline double polyline_distance(const Point& p, const SpineSet& spines) {
  require(!spines.empty(), "polyline_distance: spine set is empty");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& line : spines.polylines) {
    require(line.size() >= 2, "polyline_distance: polyline needs two vertices");
    for (std::size_t i = 0; i + 1 < line.size(); ++i) best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Candy segment interactions
// ---------------------------------------------------------------------------

/// Axial distance between two undirected orientations in [0, pi); result in [0, pi/2].
inline double orientation_difference(double xi1, double xi2) {
  const double d = std::abs(xi1 - xi2);
  return std::min(d, std::numbers::pi - d);
}

struct CandyParams {
  double r_c = 0.01;   // connection distance
  double tau_c = 0.5;  // curvature tolerance
  double r_r = 0.06;   // rejection distance between centres
  double tau_r = 0.5;  // orthogonality tolerance
  double length = 0.12;
  bool connection_needs_alignment = true;

  void validate() const {
    require(r_c > 0.0 && r_r > 0.0 && length > 0.0, "candy: distances must be positive");
    require(tau_c > 0.0 && tau_c <= std::numbers::pi / 2, "candy: tau_c must lie in (0, pi/2]");
    require(tau_r > 0.0 && tau_r <= std::numbers::pi / 2, "candy: tau_r must lie in (0, pi/2]");
  }

  /// Largest centre distance at which two segments can interact.
  double interaction_range() const { return std::max(length + r_c, r_r); }
};

/// Endpoint indices (one per segment) of a connection, or nothing. Exactly one of
/// the four endpoint pairs may lie within r_c.
inline std::optional<std::pair<int, int>> candy_connection(const Segment& a, const Segment& b, const CandyParams& p) {
  if (p.connection_needs_alignment && !(orientation_difference(a.orientation(), b.orientation()) < p.tau_c))
    return std::nullopt;
  const auto ea = a.endpoints();
  const auto eb = b.endpoints();
  const double rc2 = p.r_c * p.r_c;
  int hits = 0;
  std::pair<int, int> where{-1, -1};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (squared_distance(ea[i], eb[j]) < rc2) {
        ++hits;
        where = {i, j};
      }
  if (hits != 1) return std::nullopt;
  return where;
}

/// Too close (centre distance < r_r) and not orthogonal within tau_r.
inline bool candy_repulsive(const Segment& a, const Segment& b, const CandyParams& p) {
  if (!(squared_distance(a.center(), b.center()) < p.r_r * p.r_r)) return false;
  const double d = orientation_difference(a.orientation(), b.orientation());
  return std::abs(d - std::numbers::pi / 2) > p.tau_r;
}

struct CandyCounts {
  long long doubly = 0, singly = 0, free = 0, rejected = 0;
  friend bool operator==(const CandyCounts&, const CandyCounts&) = default;
};

enum class CandyClass { free = 0, singly = 1, doubly = 2 };

inline CandyClass candy_class(int left_connections, int right_connections) {
  return static_cast<CandyClass>((left_connections > 0) + (right_connections > 0));
}

inline CandyCounts candy_counts(std::span<const Segment> segments, const CandyParams& params) {
  const std::size_t n = segments.size();
  for (const auto& s : segments)
    require(std::abs(s.length() - params.length) <= 1e-12 * params.length, "candy: segment length differs from model");
  std::vector<std::array<int, 2>> conn(n, {0, 0});
  CandyCounts c;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (auto link = candy_connection(segments[i], segments[j], params)) {
        ++conn[i][link->first];
        ++conn[j][link->second];
      }
      if (candy_repulsive(segments[i], segments[j], params)) ++c.rejected;
    }
  for (const auto& e : conn) {
    switch (candy_class(e[0], e[1])) {
      case CandyClass::doubly: ++c.doubly; break;
      case CandyClass::singly: ++c.singly; break;
      case CandyClass::free: ++c.free; break;
    }
  }
  return c;
}

}  // namespace ssa

#endif  // SSA_GEOMETRY_HPP
