#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "srcid/error.hpp"
#include "srcid/geometry.hpp"
#include "srcid/random.hpp"

namespace srcid {

using Complex = std::complex<double>;

/// One point source: complex amplitude at a position.
struct Source {
  Complex alpha;
  Point2 x;

  friend bool operator==(const Source&, const Source&) = default;
};

/// Finitely many point sources; k = sources.size() may be 0.
struct SourceConfig {
  std::vector<Source> sources;

  std::size_t k() const { return sources.size(); }
  bool empty() const { return sources.empty(); }

  /// sum_l (|alpha_l| + ||x_l||)
  double l1_norm() const {
    double s = 0.0;
    for (const auto& src : sources) s += std::abs(src.alpha) + norm(src.x);
    return s;
  }

  friend bool operator==(const SourceConfig&, const SourceConfig&) = default;
};

/// Concatenation of the source lists.
inline SourceConfig concat(const SourceConfig& a, const SourceConfig& b) {
  SourceConfig out = a;
  out.sources.insert(out.sources.end(), b.sources.begin(), b.sources.end());
  return out;
}

/// Union of closed axis-aligned rectangles kept at distance > kappa from the
/// boundary of the enclosing domain. Rectangles may share edges but not
/// interior area, so area-weighted sampling is uniform on the union.
class SourceDomain {
 public:
  SourceDomain(std::vector<Rect> rects, double kappa, const Rect& enclosing = kUnitSquare)
      : rects_(std::move(rects)), kappa_(kappa), enclosing_(enclosing) {
    if (rects_.empty()) throw ConfigError("source domain: at least one rectangle required");
    if (!(kappa_ > 0.0)) throw ConfigError("source domain: kappa must be positive");
    for (std::size_t i = 0; i < rects_.size(); ++i) {
      const auto& r = rects_[i];
      if (!r.valid()) throw ConfigError("source domain: rectangle " + std::to_string(i) + " is degenerate");
      const double gap = std::min({r.x0 - enclosing_.x0, enclosing_.x1 - r.x1, r.y0 - enclosing_.y0,
                                   enclosing_.y1 - r.y1});
      if (!(gap > kappa_))
        throw ConfigError("source domain: rectangle " + std::to_string(i) +
                          " violates dist(D_kappa, boundary) > kappa");
      for (std::size_t j = 0; j < i; ++j) {
        const auto& q = rects_[j];
        const double ox = std::min(r.x1, q.x1) - std::max(r.x0, q.x0);
        const double oy = std::min(r.y1, q.y1) - std::max(r.y0, q.y0);
        if (ox > 0.0 && oy > 0.0)
          throw ConfigError("source domain: rectangles " + std::to_string(j) + " and " + std::to_string(i) +
                            " overlap");
      }
    }
    cumulative_area_.resize(rects_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < rects_.size(); ++i) cumulative_area_[i] = (acc += rects_[i].area());
  }

  const std::vector<Rect>& rects() const { return rects_; }
  double kappa() const { return kappa_; }
  const Rect& enclosing() const { return enclosing_; }
  double area() const { return cumulative_area_.back(); }

  bool contains(Point2 p) const {
    for (const auto& r : rects_)
      if (r.contains(p)) return true;
    return false;
  }

  bool contains(const SourceConfig& u) const {
    for (const auto& s : u.sources)
      if (!contains(s.x)) return false;
    return true;
  }

  double distance_to(Point2 p) const { return distance_to_union(rects_, p); }

  /// Uniform point: rectangle chosen with probability proportional to area.
  Point2 sample(Rng& rng) const {
    const double a = rng.uniform(0.0, area());
    std::size_t i = 0;
    while (i + 1 < rects_.size() && a >= cumulative_area_[i]) ++i;
    const auto& r = rects_[i];
    return {rng.uniform(r.x0, r.x1), rng.uniform(r.y0, r.y1)};
  }

  /// Measurement-domain membership: dist(z, D_kappa) > kappa and
  /// dist(z, boundary) > kappa.
  bool in_measurement_domain(Point2 z) const {
    return enclosing_.contains(z) && distance_to(z) > kappa_ && enclosing_.distance_to_boundary(z) > kappa_;
  }

  /// Throws ConfigError naming the point if it is not in the measurement domain.
  void check_measurement_point(Point2 z, const std::string& name) const {
    if (in_measurement_domain(z)) return;
    std::ostringstream msg;
    msg << name << " = (" << z.x << ", " << z.y << ") violates the measurement-domain condition: ";
    if (!enclosing_.contains(z))
      msg << "outside the domain";
    else
      msg << "dist to source domain = " << distance_to(z)
          << ", dist to boundary = " << enclosing_.distance_to_boundary(z) << ", both must exceed kappa = " << kappa_;
    throw ConfigError(msg.str());
  }

 private:
  std::vector<Rect> rects_;
  double kappa_;
  Rect enclosing_;
  std::vector<double> cumulative_area_;
};

}  // namespace srcid
