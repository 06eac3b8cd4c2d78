#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace anchorcast {

// Geometric boundary tolerance in meters. Rule semantics are
// boundary-inclusive; anything within this distance of an edge counts as on
// the boundary.
inline constexpr double kGeomTol = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2& o) const = default;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  Vec2 rotated(double angle) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
};

// Vertex list, implicitly closed (last vertex connects back to the first).
using Polygon = std::vector<Vec2>;

inline double polygon_signed_area(const Polygon& poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    a += p.cross(q);
  }
  return 0.5 * a;
}

inline void require_valid_polygon(const Polygon& poly) {
  if (poly.size() < 3 || std::abs(polygon_signed_area(poly)) <= kGeomTol * kGeomTol) {
    throw std::invalid_argument("degenerate polygon (fewer than 3 vertices or zero area)");
  }
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

inline double point_polygon_boundary_distance(const Vec2& p, const Polygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
  }
  return best;
}

// Boundary-inclusive point containment: points within kGeomTol of an edge
// count as inside, otherwise the winding number decides.
inline bool point_in_polygon(const Vec2& p, const Polygon& poly) {
  require_valid_polygon(poly);
  if (point_polygon_boundary_distance(p, poly) <= kGeomTol) return true;
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if (a.y <= p.y) {
      if (b.y > p.y && (b - a).cross(p - a) > 0.0) ++wn;
    } else {
      if (b.y <= p.y && (b - a).cross(p - a) < 0.0) --wn;
    }
  }
  return wn != 0;
}

// 0 when inside or on the boundary, otherwise distance to the nearest edge.
inline double point_polygon_distance(const Vec2& p, const Polygon& poly) {
  if (point_in_polygon(p, poly)) return 0.0;
  return point_polygon_boundary_distance(p, poly);
}

namespace detail {
inline bool on_segment_collinear(const Vec2& p, const Vec2& a, const Vec2& b) {
  return std::min(a.x, b.x) - kGeomTol <= p.x && p.x <= std::max(a.x, b.x) + kGeomTol &&
         std::min(a.y, b.y) - kGeomTol <= p.y && p.y <= std::max(a.y, b.y) + kGeomTol;
}
}  // namespace detail

// Inclusive segment intersection: touching endpoints and collinear overlap
// count as intersecting.
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = (q2 - q1).cross(p1 - q1);
  const double d2 = (q2 - q1).cross(p2 - q1);
  const double d3 = (p2 - p1).cross(q1 - p1);
  const double d4 = (p2 - p1).cross(q2 - p1);

  if (((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
      ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))) {
    return true;
  }
  if (d1 == 0.0 && detail::on_segment_collinear(p1, q1, q2)) return true;
  if (d2 == 0.0 && detail::on_segment_collinear(p2, q1, q2)) return true;
  if (d3 == 0.0 && detail::on_segment_collinear(q1, p1, p2)) return true;
  if (d4 == 0.0 && detail::on_segment_collinear(q2, p1, p2)) return true;
  return false;
}

// True iff any polyline vertex lies inside/on the polygon, or any polyline
// segment intersects a polygon edge.
inline bool polyline_intersects_polygon(const std::vector<Vec2>& pts, const Polygon& poly) {
  require_valid_polygon(poly);
  for (const Vec2& p : pts) {
    if (point_in_polygon(p, poly)) return true;
  }
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (segments_intersect(pts[i], pts[i + 1], poly[j], poly[(j + 1) % n])) return true;
    }
  }
  return false;
}

// Distance along the ray (origin, unit dir) to the segment a-b; +inf when the
// ray misses it.
inline double ray_segment_distance(const Vec2& origin, const Vec2& dir, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const Vec2 ao = a - origin;
  const double denom = dir.cross(ab);
  const double inf = std::numeric_limits<double>::infinity();
  if (std::abs(denom) < 1e-14) {
    // parallel; only collinear overlap yields a hit
    if (std::abs(ao.cross(dir)) > kGeomTol) return inf;
    const double ta = ao.dot(dir);
    const double tb = (b - origin).dot(dir);
    const double lo = std::min(ta, tb), hi = std::max(ta, tb);
    if (hi < 0.0) return inf;
    return std::max(lo, 0.0);
  }
  const double t = ao.cross(ab) / denom;
  const double s = ao.cross(dir) / denom;
  if (t < 0.0 || s < -1e-12 || s > 1.0 + 1e-12) return inf;
  return t;
}

// Nearest hit of the ray against any polygon edge, +inf when nothing is hit.
inline double ray_polygon_distance(const Vec2& origin, const Vec2& dir, const Polygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, ray_segment_distance(origin, dir, poly[i], poly[(i + 1) % n]));
  }
  return best;
}

// Simplicity check: no two non-adjacent edges intersect. O(n^2), used on
// construction paths and in tests only.
inline bool polygon_is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t ni = (i + 1) % n, nj = (j + 1) % n;
      if (j == i || nj == i || ni == j) continue;  // adjacent edges share a vertex
      if (segments_intersect(poly[i], poly[ni], poly[j], poly[nj])) return false;
    }
  }
  return true;
}

}  // namespace anchorcast
