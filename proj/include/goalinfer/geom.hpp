#pragma once

// 2D geometry over the unit square. Header-only and templated on the scalar
// type; the rest of the library uses the double instantiations below.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace goalinfer {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct GeomTolerance {
  static constexpr Scalar value = Scalar(1e-12);
};

/// z-component of (b - a) x (c - a).
template <typename Scalar>
Scalar orient(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

/// Whether c, known to be collinear with a-b, lies within the segment's box.
template <typename Scalar>
bool within_box(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
  constexpr Scalar eps = GeomTolerance<Scalar>::value;
  return std::min(a.x(), b.x()) - eps <= c.x() && c.x() <= std::max(a.x(), b.x()) + eps &&
         std::min(a.y(), b.y()) - eps <= c.y() && c.y() <= std::max(a.y(), b.y()) + eps;
}

template <typename Scalar>
bool on_segment(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
  return std::abs(orient(a, b, c)) <= GeomTolerance<Scalar>::value && within_box(a, b, c);
}

/// Closed-segment intersection test. Touching and collinear overlap count.
template <typename Scalar>
bool segments_intersect(const Point2<Scalar>& p1, const Point2<Scalar>& p2,
                        const Point2<Scalar>& q1, const Point2<Scalar>& q2) {
  constexpr Scalar eps = GeomTolerance<Scalar>::value;
  const Scalar d1 = orient(q1, q2, p1);
  const Scalar d2 = orient(q1, q2, p2);
  const Scalar d3 = orient(p1, p2, q1);
  const Scalar d4 = orient(p1, p2, q2);
  const bool straddle_q = (d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps);
  const bool straddle_p = (d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps);
  if (straddle_q && straddle_p) return true;
  if (std::abs(d1) <= eps && within_box(q1, q2, p1)) return true;
  if (std::abs(d2) <= eps && within_box(q1, q2, p2)) return true;
  if (std::abs(d3) <= eps && within_box(p1, p2, q1)) return true;
  if (std::abs(d4) <= eps && within_box(p1, p2, q2)) return true;
  return false;
}

/// Simple polygon with at least three vertices, plus its bounding box.
template <typename Scalar>
class PolygonT {
 public:
  using Point = Point2<Scalar>;

  explicit PolygonT(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
    for (const auto& v : vertices_) {
      if (!v.allFinite()) throw std::invalid_argument("polygon vertex is not finite");
    }
    if (!is_simple()) throw std::invalid_argument("polygon is self-intersecting");
    lo_ = hi_ = vertices_.front();
    for (const auto& v : vertices_) {
      lo_ = lo_.cwiseMin(v);
      hi_ = hi_.cwiseMax(v);
    }
  }

  /// Axis-aligned rectangle [x0,x1] x [y0,y1].
  static PolygonT box(Scalar x0, Scalar y0, Scalar x1, Scalar y1) {
    return PolygonT({Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1)});
  }

  const std::vector<Point>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point& vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }
  const Point& lower() const { return lo_; }
  const Point& upper() const { return hi_; }

  /// Inside or on the boundary.
  bool contains(const Point& a) const {
    constexpr Scalar eps = GeomTolerance<Scalar>::value;
    if ((a.array() < lo_.array() - eps).any() || (a.array() > hi_.array() + eps).any()) {
      return false;
    }
    bool inside = false;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& vi = vertices_[i];
      const Point& vj = vertices_[j];
      if (on_segment(vj, vi, a)) return true;
      if ((vi.y() > a.y()) != (vj.y() > a.y())) {
        const Scalar x_cross = vj.x() + (a.y() - vj.y()) * (vi.x() - vj.x()) / (vi.y() - vj.y());
        if (a.x() < x_cross) inside = !inside;
      }
    }
    return inside;
  }

  bool edge_hits(const Point& b, const Point& c) const {
    if (std::max(b.x(), c.x()) < lo_.x() - GeomTolerance<Scalar>::value ||
        std::min(b.x(), c.x()) > hi_.x() + GeomTolerance<Scalar>::value ||
        std::max(b.y(), c.y()) < lo_.y() - GeomTolerance<Scalar>::value ||
        std::min(b.y(), c.y()) > hi_.y() + GeomTolerance<Scalar>::value) {
      return false;
    }
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      if (segments_intersect(b, c, vertices_[j], vertices_[i])) return true;
    }
    return false;
  }

 private:
  bool is_simple() const {
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
        if (adjacent) continue;
        if (segments_intersect(vertex(i), vertex(i + 1), vertex(j), vertex(j + 1))) return false;
      }
    }
    return true;
  }

  std::vector<Point> vertices_;
  Point lo_;
  Point hi_;
};

/// A set of polygonal obstacles over the unit square. Obstacles may overlap.
template <typename Scalar>
class WorldMapT {
 public:
  using Point = Point2<Scalar>;
  using Polygon = PolygonT<Scalar>;

  WorldMapT() = default;
  explicit WorldMapT(std::vector<Polygon> obstacles) : obstacles_(std::move(obstacles)) {}

  const std::vector<Polygon>& obstacles() const { return obstacles_; }
  void add(Polygon p) { obstacles_.push_back(std::move(p)); }

  /// Inside the unit square and strictly outside every obstacle.
  bool valid_state(const Point& a) const {
    if (!a.allFinite()) return false;
    if ((a.array() < Scalar(0)).any() || (a.array() > Scalar(1)).any()) return false;
    return std::none_of(obstacles_.begin(), obstacles_.end(),
                        [&](const Polygon& p) { return p.contains(a); });
  }

  bool clear_line(const Point& b, const Point& c) const {
    if (!valid_state(b) || !valid_state(c)) return false;
    return std::none_of(obstacles_.begin(), obstacles_.end(),
                        [&](const Polygon& p) { return p.edge_hits(b, c); });
  }

  bool clear_path(std::span<const Point> path) const {
    if (path.empty()) return false;
    if (!valid_state(path.front())) return false;
    for (std::size_t i = 1; i < path.size(); ++i) {
      if (!clear_line(path[i - 1], path[i])) return false;
    }
    return true;
  }

 private:
  std::vector<Polygon> obstacles_;
};

template <typename Scalar>
Scalar path_length(std::span<const Point2<Scalar>> path) {
  Scalar total(0);
  for (std::size_t i = 1; i < path.size(); ++i) total += (path[i] - path[i - 1]).norm();
  return total;
}

/// Index of the closest vertex; ties go to the lowest index.
template <typename Scalar>
std::size_t nearest_vertex_index(std::span<const Point2<Scalar>> vertices,
                                 const Point2<Scalar>& a) {
  if (vertices.empty()) throw std::invalid_argument("nearest_vertex: empty vertex list");
  std::size_t best = 0;
  Scalar best_d2 = (vertices[0] - a).squaredNorm();
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    const Scalar d2 = (vertices[i] - a).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

template <typename Scalar>
const Point2<Scalar>& nearest_vertex(std::span<const Point2<Scalar>> vertices,
                                     const Point2<Scalar>& a) {
  return vertices[nearest_vertex_index(vertices, a)];
}

using Point = Point2<double>;
using Polygon = PolygonT<double>;
using WorldMap = WorldMapT<double>;
/// Ordered points from start to goal; at least two entries once planned.
using Path = std::vector<Point>;

inline double path_length(const Path& p) { return path_length<double>(std::span<const Point>(p)); }

}  // namespace goalinfer
