#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace srcid {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2, Point2) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double x1 = 1.0;
  double y0 = 0.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool valid() const { return x1 > x0 && y1 > y0; }

  bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }

  /// Euclidean distance from p to the rectangle (0 inside).
  double distance_to(Point2 p) const {
    const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
    const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
    return std::hypot(dx, dy);
  }

  /// Distance from an interior point p to the rectangle's boundary.
  double distance_to_boundary(Point2 p) const {
    return std::min({p.x - x0, x1 - p.x, p.y - y0, y1 - p.y});
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline const Rect kUnitSquare{0.0, 1.0, 0.0, 1.0};

/// Distance between two closed rectangles.
inline double distance(const Rect& a, const Rect& b) {
  const double dx = std::max({a.x0 - b.x1, 0.0, b.x0 - a.x1});
  const double dy = std::max({a.y0 - b.y1, 0.0, b.y0 - a.y1});
  return std::hypot(dx, dy);
}

inline double distance_to_union(std::span<const Rect> rects, Point2 p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& r : rects) d = std::min(d, r.distance_to(p));
  return d;
}

}  // namespace srcid
