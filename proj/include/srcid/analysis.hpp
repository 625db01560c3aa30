#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srcid/error.hpp"
#include "srcid/geometry.hpp"
#include "srcid/helmholtz.hpp"
#include "srcid/parallel.hpp"
#include "srcid/smc.hpp"
#include "srcid/sources.hpp"

namespace srcid {

/// Smooth cut-off approximating the indicator of the eps-ball:
/// 1 inside eps, cosine ramp to 0 on [eps, 1.5 eps], 0 beyond.
inline double cutoff(double r, double eps) {
  if (r <= eps) return 1.0;
  if (r <= 1.5 * eps) return 0.5 + 0.5 * std::cos((2.0 / eps) * std::numbers::pi * (r - eps));
  return 0.0;
}

inline double cutoff(Point2 x, double eps) { return cutoff(norm(x), eps); }

/// Regular grid of nx x ny points spanning a rectangle, boundaries included.
/// Values are row-major with y as the slow index.
struct HeatGrid {
  Rect extent = kUnitSquare;
  std::size_t nx = 200;
  std::size_t ny = 200;
  std::vector<double> values;

  static HeatGrid zeros(const Rect& extent, std::size_t nx, std::size_t ny) {
    if (nx < 2 || ny < 2) throw ConfigError("heat grid: need at least 2 points per axis");
    return {extent, nx, ny, std::vector<double>(nx * ny, 0.0)};
  }

  double x(std::size_t i) const { return extent.x0 + extent.width() * static_cast<double>(i) / static_cast<double>(nx - 1); }
  double y(std::size_t j) const { return extent.y0 + extent.height() * static_cast<double>(j) / static_cast<double>(ny - 1); }
  Point2 point(std::size_t i, std::size_t j) const { return {x(i), y(j)}; }
  double& at(std::size_t i, std::size_t j) { return values[j * nx + i]; }
  double at(std::size_t i, std::size_t j) const { return values[j * nx + i]; }
};

namespace detail {

// Adds weight * max_{l in active} K_eps(p - x_l) to every grid point p within
// reach of an active source, visiting each grid point once.
inline void splat_max(HeatGrid& grid, std::span<const Point2> active, double weight, double eps) {
  const double reach = 1.5 * eps;
  const double sx = grid.extent.width() / static_cast<double>(grid.nx - 1);
  const double sy = grid.extent.height() / static_cast<double>(grid.ny - 1);
  auto lo = [](double v, double origin, double step) {
    return static_cast<std::ptrdiff_t>(std::ceil((v - origin) / step));
  };
  auto hi = [](double v, double origin, double step) {
    return static_cast<std::ptrdiff_t>(std::floor((v - origin) / step));
  };
  const auto nxs = static_cast<std::ptrdiff_t>(grid.nx), nys = static_cast<std::ptrdiff_t>(grid.ny);
  for (std::size_t l = 0; l < active.size(); ++l) {
    const Point2 c = active[l];
    const auto i0 = std::max<std::ptrdiff_t>(0, lo(c.x - reach, grid.extent.x0, sx));
    const auto i1 = std::min<std::ptrdiff_t>(nxs - 1, hi(c.x + reach, grid.extent.x0, sx));
    const auto j0 = std::max<std::ptrdiff_t>(0, lo(c.y - reach, grid.extent.y0, sy));
    const auto j1 = std::min<std::ptrdiff_t>(nys - 1, hi(c.y + reach, grid.extent.y0, sy));
    for (auto j = j0; j <= j1; ++j) {
      for (auto i = i0; i <= i1; ++i) {
        const Point2 p = grid.point(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (distance(p, c) > reach) continue;
        // Owned by the first active source that reaches p.
        bool owned_earlier = false;
        for (std::size_t q = 0; q < l && !owned_earlier; ++q) owned_earlier = distance(p, active[q]) <= reach;
        if (owned_earlier) continue;
        double v = 0.0;
        for (const auto& other : active) v = std::max(v, cutoff(p - other, eps));
        grid.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) += weight * v;
      }
    }
  }
}

}  // namespace detail

/// P_emp(x) = sum_n w_n max_l K_eps(x - x_l^(n)); particles without sources
/// contribute 0. `filter(u)` restricts to a sub-ensemble, renormalized.
template <class Filter>
HeatGrid p_emp_filtered(const Ensemble& ensemble, const HeatGrid& spec, double eps, Filter&& filter) {
  if (!(eps > 0.0)) throw ConfigError("p_emp: eps must be positive");
  HeatGrid grid = HeatGrid::zeros(spec.extent, spec.nx, spec.ny);
  double mass = 0.0;
  std::vector<Point2> active;
  for (std::size_t n = 0; n < ensemble.size(); ++n) {
    const auto& u = ensemble.particles[n];
    if (!filter(u)) continue;
    mass += ensemble.weights[n];
    if (ensemble.weights[n] == 0.0 || u.empty()) continue;
    active.clear();
    for (const auto& s : u.sources) active.push_back(s.x);
    detail::splat_max(grid, active, ensemble.weights[n], eps);
  }
  if (!(mass > 0.0)) throw ConfigError("p_emp: conditioning set has zero posterior mass");
  for (auto& v : grid.values) v = std::clamp(v / mass, 0.0, 1.0);
  return grid;
}

inline HeatGrid p_emp(const Ensemble& ensemble, const HeatGrid& spec, double eps) {
  return p_emp_filtered(ensemble, spec, eps, [](const SourceConfig&) { return true; });
}

/// P_emp(. | k): restricted to particles with exactly k sources.
inline HeatGrid p_emp_given_k(const Ensemble& ensemble, std::size_t k, const HeatGrid& spec, double eps) {
  return p_emp_filtered(ensemble, spec, eps, [k](const SourceConfig& u) { return u.k() == k; });
}

/// P_emp(x | Q, k): over particles with k sources of which at least one lies in
/// Q, the renormalized weighted max of K_eps over the sources not in Q.
inline HeatGrid p_emp_conditional(const Ensemble& ensemble, const Rect& q, std::size_t k, const HeatGrid& spec,
                                  double eps) {
  if (!(eps > 0.0)) throw ConfigError("p_emp_conditional: eps must be positive");
  HeatGrid grid = HeatGrid::zeros(spec.extent, spec.nx, spec.ny);
  double mass = 0.0;
  std::size_t members = 0;
  std::vector<Point2> active;
  for (std::size_t n = 0; n < ensemble.size(); ++n) {
    const auto& u = ensemble.particles[n];
    if (u.k() != k) continue;
    bool hit = false;
    active.clear();
    for (const auto& s : u.sources) {
      if (q.contains(s.x))
        hit = true;
      else
        active.push_back(s.x);
    }
    if (!hit) continue;
    ++members;
    mass += ensemble.weights[n];
    if (ensemble.weights[n] > 0.0 && !active.empty()) detail::splat_max(grid, active, ensemble.weights[n], eps);
  }
  if (members == 0) throw ConfigError("p_emp_conditional: no particle with k sources has a source in Q");
  if (!(mass > 0.0)) throw ConfigError("p_emp_conditional: conditioning set has zero weight");
  for (auto& v : grid.values) v = std::clamp(v / mass, 0.0, 1.0);
  return grid;
}

struct Peak {
  Point2 x;
  double value;
};

/// Grid local maxima (>= all 8 neighbours, > 0), largest first, keeping only
/// peaks at least `min_separation` from every stronger kept peak.
inline std::vector<Peak> local_maxima(const HeatGrid& grid, std::size_t count, double min_separation) {
  std::vector<Peak> cand;
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double v = grid.at(i, j);
      if (!(v > 0.0)) continue;
      bool is_max = true;
      for (int dj = -1; dj <= 1 && is_max; ++dj)
        for (int di = -1; di <= 1 && is_max; ++di) {
          const auto ii = static_cast<std::ptrdiff_t>(i) + di, jj = static_cast<std::ptrdiff_t>(j) + dj;
          if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= static_cast<std::ptrdiff_t>(grid.nx) ||
              jj >= static_cast<std::ptrdiff_t>(grid.ny))
            continue;
          is_max = v >= grid.at(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
        }
      if (is_max) cand.push_back({grid.point(i, j), v});
    }
  }
  std::stable_sort(cand.begin(), cand.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
  std::vector<Peak> kept;
  for (const auto& p : cand) {
    if (kept.size() == count) break;
    bool far = true;
    for (const auto& k : kept) far = far && distance(p.x, k.x) >= min_separation;
    if (far) kept.push_back(p);
  }
  return kept;
}

struct MapIndices {
  std::size_t global;
  std::map<std::size_t, std::size_t> per_k;  // k -> index
};

/// Weight argmax, globally and per source count; ties go to the lowest index.
inline MapIndices map_indices(const Ensemble& ensemble) {
  ensemble.validate();
  MapIndices out{0, {}};
  for (std::size_t n = 0; n < ensemble.size(); ++n) {
    const double w = ensemble.weights[n];
    if (w > ensemble.weights[out.global]) out.global = n;
    const auto k = ensemble.particles[n].k();
    auto it = out.per_k.find(k);
    if (it == out.per_k.end())
      out.per_k.emplace(k, n);
    else if (w > ensemble.weights[it->second])
      it->second = n;
  }
  return out;
}

/// P(k) = sum of weights of particles with k sources.
inline std::map<std::size_t, double> posterior_k_pmf(const Ensemble& ensemble) {
  ensemble.validate();
  std::map<std::size_t, double> pmf;
  for (std::size_t n = 0; n < ensemble.size(); ++n) pmf[ensemble.particles[n].k()] += ensemble.weights[n];
  return pmf;
}

/// Posterior prediction functionals at a point z_pred.
class Functionals {
 public:
  static constexpr std::size_t kCount = 5;

  Functionals(const AssembledSystem& system, Point2 z_pred, const SourceDomain& domain, double t,
              const NeumannData& g = {})
      : cache_(system, {z_pred}, domain, g), zeta_(system.params().zeta), t_(t) {}

  /// y_{u,h}(z_pred)
  Complex pressure(const SourceConfig& u) const {
    Complex out;
    cache_.observe_into(u, std::span<Complex>(&out, 1));
    return out;
  }

  double f1(const SourceConfig& u) const { return u.l1_norm(); }
  double f2(const SourceConfig& u) const { return u.k() == 2 ? 1.0 : 0.0; }
  double f3(const SourceConfig& u) const { return std::abs(pressure(u)); }
  double f5(const SourceConfig& u) const {
    const Complex p = pressure(u) * std::polar(1.0, -zeta_ * t_);
    return 10.0 * std::log10(std::max(1.0, std::abs(p.real())));
  }

  /// Weighted estimates of E[f1], E[f2], E[f3], Var[|y(z_pred)|], E[f5].
  std::array<double, kCount> expectations(std::span<const SourceConfig> particles, std::span<const double> weights) const {
    std::array<double, kCount> e{};
    double g2 = 0.0;
    for (std::size_t n = 0; n < particles.size(); ++n) {
      const double w = weights[n];
      if (w == 0.0) continue;
      const auto& u = particles[n];
      const Complex p = pressure(u);
      const double g = std::abs(p);
      const Complex rot = p * std::polar(1.0, -zeta_ * t_);
      e[0] += w * u.l1_norm();
      e[1] += w * (u.k() == 2 ? 1.0 : 0.0);
      e[2] += w * g;
      g2 += w * g * g;
      e[4] += w * 10.0 * std::log10(std::max(1.0, std::abs(rot.real())));
    }
    e[3] = std::max(0.0, g2 - e[2] * e[2]);
    return e;
  }

  std::array<double, kCount> expectations(const Ensemble& ensemble) const {
    return expectations(ensemble.particles, ensemble.weights);
  }

  static constexpr std::array<const char*, kCount> names{"f1", "f2", "f3", "f4", "f5"};

 private:
  ObservationCache cache_;
  double zeta_;
  double t_;
};

/// Self-normalized importance weights w_n exp(a_n) / sum_m w_m exp(a_m),
/// computed in log space.
inline std::vector<double> tilt_weights(std::span<const double> weights, std::span<const double> log_ratio) {
  double max_a = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < weights.size(); ++n)
    if (weights[n] > 0.0) max_a = std::max(max_a, log_ratio[n]);
  std::vector<double> out(weights.size(), 0.0);
  double z = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n)
    if (weights[n] > 0.0) z += (out[n] = weights[n] * std::exp(log_ratio[n] - max_a));
  for (auto& w : out) w /= z;
  return out;
}

namespace detail {
// E_w[(1 - sqrt(rho / Z))^2] with rho = exp(a), Z = E_w[rho].
inline double hellinger_half(std::span<const double> weights, std::span<const double> a) {
  double max_a = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < weights.size(); ++n)
    if (weights[n] > 0.0) max_a = std::max(max_a, a[n]);
  double z = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n)
    if (weights[n] > 0.0) z += weights[n] * std::exp(a[n] - max_a);
  const double log_z = max_a + std::log(z);
  double s = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (!(weights[n] > 0.0)) continue;
    const double r = 1.0 - std::exp(0.5 * (a[n] - log_z));
    s += weights[n] * r * r;
  }
  return s;
}
}  // namespace detail

/// Potentials of one ensemble's particles under both discretizations.
struct CrossPotentials {
  std::vector<double> psi_h;
  std::vector<double> psi_ref;
};

template <PotentialFunction PotH, PotentialFunction PotRef>
CrossPotentials cross_potentials(const Ensemble& ensemble, const PotH& psi_h, const PotRef& psi_ref,
                                 std::size_t workers = 1) {
  CrossPotentials out{std::vector<double>(ensemble.size()), std::vector<double>(ensemble.size())};
  parallel_for(ensemble.size(), workers, [&](std::size_t n) {
    out.psi_h[n] = psi_h(ensemble.particles[n]);
    out.psi_ref[n] = psi_ref(ensemble.particles[n]);
  });
  return out;
}

/// Hellinger distance between two posteriors for the same data, each
/// represented by a weighted ensemble, using
///   4 d^2 = E_ref[(1 - sqrt(dmu_h/dmu_ref))^2] + E_h[(1 - sqrt(dmu_ref/dmu_h))^2],
/// dmu_h/dmu_ref = exp(Psi_ref - Psi_h) / Z with Z the ensemble-weighted mean of
/// the numerator (and symmetrically for the reverse derivative).
inline double hellinger_estimate(std::span<const double> weights_h, const CrossPotentials& on_h,
                                 std::span<const double> weights_ref, const CrossPotentials& on_ref) {
  std::vector<double> a_ref(weights_ref.size()), a_h(weights_h.size());
  for (std::size_t n = 0; n < a_ref.size(); ++n) a_ref[n] = on_ref.psi_ref[n] - on_ref.psi_h[n];
  for (std::size_t n = 0; n < a_h.size(); ++n) a_h[n] = on_h.psi_h[n] - on_h.psi_ref[n];
  return std::sqrt(0.25 * (detail::hellinger_half(weights_ref, a_ref) + detail::hellinger_half(weights_h, a_h)));
}

template <PotentialFunction PotH, PotentialFunction PotRef>
double hellinger_estimate(const Ensemble& ensemble_h, const Ensemble& ensemble_ref, const PotH& psi_h,
                          const PotRef& psi_ref) {
  ensemble_h.validate();
  ensemble_ref.validate();
  return hellinger_estimate(ensemble_h.weights, cross_potentials(ensemble_h, psi_h, psi_ref), ensemble_ref.weights,
                            cross_potentials(ensemble_ref, psi_h, psi_ref));
}

enum class RateModel { InverseN, LogH };

struct RateFit {
  RateModel model;
  std::vector<double> abscissae;
  std::vector<double> errors;
  double slope;     // against log N, or against log(|ln h| h^2)
  double constant;  // intercept of the same regression
  double slope_log_h = std::numeric_limits<double>::quiet_NaN();  // LogH model only
  double order_h = std::numeric_limits<double>::quiet_NaN();      // p in C |ln h| h^p, LogH model only
};

namespace detail {
inline std::pair<double, double> least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}
}  // namespace detail

inline double log_h_regressor(double h) { return std::log(std::abs(std::log(h)) * h * h); }

/// Least-squares slope on log-log data. InverseN: log error vs log N (expect
/// -1). LogH: log error vs log(|ln h| h^2) (expect 1), plus the plain slope
/// vs log h and the order p of the law C |ln h| h^p.
inline RateFit fit_rate(std::span<const double> abscissae, std::span<const double> errors, RateModel model) {
  if (abscissae.size() != errors.size()) throw ConfigError("fit_rate: size mismatch");
  if (abscissae.size() < 3) throw ConfigError("fit_rate: at least 3 points required");
  std::vector<double> lx, ly, lh, lq;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0.0)) throw ConfigError("fit_rate: errors must be positive");
    if (!(abscissae[i] > 0.0)) throw ConfigError("fit_rate: abscissae must be positive");
    if (model == RateModel::LogH && !(abscissae[i] < 1.0)) throw ConfigError("fit_rate: h must be below 1");
    ly.push_back(std::log(errors[i]));
    lh.push_back(std::log(abscissae[i]));
    if (model == RateModel::LogH) lq.push_back(ly.back() - std::log(std::abs(std::log(abscissae[i]))));
    lx.push_back(model == RateModel::InverseN ? std::log(abscissae[i]) : log_h_regressor(abscissae[i]));
  }
  const auto [slope, constant] = detail::least_squares(lx, ly);
  RateFit fit{model, {abscissae.begin(), abscissae.end()}, {errors.begin(), errors.end()}, slope, constant};
  if (model == RateModel::LogH) {
    fit.slope_log_h = detail::least_squares(lh, ly).first;
    fit.order_h = detail::least_squares(lh, lq).first;
  }
  return fit;
}

}  // namespace srcid
