#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "srcid/error.hpp"
#include "srcid/geometry.hpp"

namespace srcid {

/// Boundary condition class of a boundary edge: impedance (Z) or Neumann (N).
enum class BoundaryTag { Impedance, Neumann };

/// Per-face tagging rule. Faces are bottom (y = y0), right, top, left.
struct BoundaryTagging {
  BoundaryTag bottom = BoundaryTag::Impedance;
  BoundaryTag right = BoundaryTag::Impedance;
  BoundaryTag top = BoundaryTag::Impedance;
  BoundaryTag left = BoundaryTag::Impedance;

  static BoundaryTagging all(BoundaryTag t) { return {t, t, t, t}; }
};

struct BoundaryEdge {
  std::array<std::size_t, 2> nodes;
  BoundaryTag tag;
};

/// Location of a point: containing triangle and barycentric coordinates with
/// respect to that triangle's node order.
struct Location {
  std::size_t triangle;
  std::array<double, 3> bary;
};

/// Non-zero entries of the nodal evaluation vector e(x), e(x)_i = phi_i(x).
struct HatValues {
  std::array<std::size_t, 3> nodes;
  std::array<double, 3> values;

  template <class Vec>
  auto interpolate(const Vec& nodal) const {
    return values[0] * nodal[nodes[0]] + values[1] * nodal[nodes[1]] + values[2] * nodal[nodes[2]];
  }
};

/// Uniform triangulation of a rectangle: n_div x n_div cells, each cut along
/// the diagonal from its lower-left to its upper-right corner.
///
/// Node (i, j) has index j * (n_div + 1) + i. Cell (i, j) owns triangles
/// 2 * (j * n_div + i) (lower, below the diagonal) and 2 * (j * n_div + i) + 1
/// (upper). Both are stored counter-clockwise.
class StructuredTriMesh {
 public:
  StructuredTriMesh(std::size_t n_div, const Rect& domain = kUnitSquare,
                    const BoundaryTagging& tagging = {})
      : n_div_(n_div), domain_(domain), tagging_(tagging) {
    if (n_div == 0) throw ConfigError("mesh: n_div must be at least 1");
    if (!domain.valid()) throw ConfigError("mesh: degenerate domain rectangle");
    dx_ = domain.width() / static_cast<double>(n_div);
    dy_ = domain.height() / static_cast<double>(n_div);
    build();
  }

  std::size_t n_div() const { return n_div_; }
  const Rect& domain() const { return domain_; }
  const BoundaryTagging& tagging() const { return tagging_; }

  /// Element diameter (length of the cell diagonal).
  double h() const { return std::hypot(dx_, dy_); }
  double dx() const { return dx_; }
  double dy() const { return dy_; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<std::array<std::size_t, 3>>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

  std::size_t node_index(std::size_t i, std::size_t j) const { return j * (n_div_ + 1) + i; }

  double signed_area(std::size_t t) const {
    const auto& tri = triangles_[t];
    const Point2 a = nodes_[tri[0]], b = nodes_[tri[1]], c = nodes_[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }

  /// Containing triangle computed from the coordinates. Points on shared
  /// element boundaries resolve to the lowest-index containing triangle.
  Location locate(Point2 p) const {
    if (!domain_.contains(p)) throw DomainError("locate: point outside the mesh domain");
    const double u = (p.x - domain_.x0) / dx_;
    const double v = (p.y - domain_.y0) / dy_;
    const std::size_t i = cell_index(u);
    const std::size_t j = cell_index(v);
    const double s = std::clamp(u - static_cast<double>(i), 0.0, 1.0);
    const double t = std::clamp(v - static_cast<double>(j), 0.0, 1.0);
    const std::size_t base = 2 * (j * n_div_ + i);
    if (s >= t) return {base, {1.0 - s, s - t, t}};
    return {base + 1, {1.0 - t, s, t - s}};
  }

  HatValues hat_values(Point2 p) const {
    const Location loc = locate(p);
    return {triangles_[loc.triangle], loc.bary};
  }

  /// Node and element lists as CSV (debug dump).
  void write_csv(std::ostream& nodes_out, std::ostream& elements_out) const {
    nodes_out << "node,x,y\n";
    for (std::size_t n = 0; n < nodes_.size(); ++n) nodes_out << n << ',' << nodes_[n].x << ',' << nodes_[n].y << '\n';
    elements_out << "triangle,n0,n1,n2\n";
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      elements_out << t << ',' << tri[0] << ',' << tri[1] << ',' << tri[2] << '\n';
    }
  }

 private:
  // Lowest cell whose closed interval contains coordinate u (in cell units).
  std::size_t cell_index(double u) const {
    const double c = std::ceil(u) - 1.0;
    if (c <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(c), n_div_ - 1);
  }

  void build() {
    const std::size_t n = n_div_;
    nodes_.reserve((n + 1) * (n + 1));
    for (std::size_t j = 0; j <= n; ++j)
      for (std::size_t i = 0; i <= n; ++i)
        nodes_.push_back({domain_.x0 + static_cast<double>(i) * dx_, domain_.y0 + static_cast<double>(j) * dy_});
    // Pin the far edges to the rectangle exactly.
    for (std::size_t k = 0; k <= n; ++k) {
      nodes_[node_index(n, k)].x = domain_.x1;
      nodes_[node_index(k, n)].y = domain_.y1;
    }

    triangles_.reserve(2 * n * n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto n00 = node_index(i, j), n10 = node_index(i + 1, j);
        const auto n01 = node_index(i, j + 1), n11 = node_index(i + 1, j + 1);
        triangles_.push_back({n00, n10, n11});
        triangles_.push_back({n00, n11, n01});
      }
    }

    boundary_edges_.reserve(4 * n);
    for (std::size_t k = 0; k < n; ++k) {
      boundary_edges_.push_back({{node_index(k, 0), node_index(k + 1, 0)}, tagging_.bottom});
      boundary_edges_.push_back({{node_index(n, k), node_index(n, k + 1)}, tagging_.right});
      boundary_edges_.push_back({{node_index(k + 1, n), node_index(k, n)}, tagging_.top});
      boundary_edges_.push_back({{node_index(0, k + 1), node_index(0, k)}, tagging_.left});
    }
  }

  std::size_t n_div_;
  Rect domain_;
  BoundaryTagging tagging_;
  double dx_ = 0.0;
  double dy_ = 0.0;
  std::vector<Point2> nodes_;
  std::vector<std::array<std::size_t, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
};

inline StructuredTriMesh build_mesh(std::size_t n_div, const BoundaryTagging& tagging = {},
                                    const Rect& domain = kUnitSquare) {
  return StructuredTriMesh(n_div, domain, tagging);
}

/// Mesh size h = sqrt(2) * 2^-level on the unit square.
inline std::size_t n_div_for_level(int level) { return std::size_t{1} << level; }

}  // namespace srcid
