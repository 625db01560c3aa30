#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srcid/error.hpp"
#include "srcid/helmholtz.hpp"
#include "srcid/random.hpp"
#include "srcid/sources.hpp"

namespace srcid {

/// Circular complex Gaussian measurement noise N(0, Gamma, 0) with diagonal
/// covariance Gamma. The relation matrix is fixed to zero.
class NoiseModel {
 public:
  explicit NoiseModel(std::vector<double> variances, double relation = 0.0) : variances_(std::move(variances)) {
    if (variances_.empty()) throw ConfigError("noise: at least one variance required");
    for (double v : variances_)
      if (!(v > 0.0)) throw ConfigError("noise: variances must be positive");
    if (relation != 0.0) throw ConfigError("noise: only circular noise (relation matrix C = 0) is supported");
  }

  static NoiseModel iid(std::size_t m, double variance) { return NoiseModel(std::vector<double>(m, variance)); }

  std::size_t size() const { return variances_.size(); }
  const std::vector<double>& variances() const { return variances_; }

 private:
  std::vector<double> variances_;
};

/// ||z||_Sigma^2 = 2 sum_j |z_j|^2 / Gamma_jj.
inline double sigma_norm_sq(const NoiseModel& noise, std::span<const Complex> z) {
  if (z.size() != noise.size()) throw ConfigError("sigma_norm_sq: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += std::norm(z[j]) / noise.variances()[j];
  return 2.0 * s;
}

inline double sigma_norm_sq(const NoiseModel& noise, const ComplexVector& z) {
  return sigma_norm_sq(noise, std::span<const Complex>(z.data(), static_cast<std::size_t>(z.size())));
}

/// eta_j = sqrt(Gamma_jj / 2) (xi_re + i xi_im).
inline ComplexVector sample_noise(const NoiseModel& noise, Rng& rng) {
  ComplexVector eta(static_cast<Eigen::Index>(noise.size()));
  for (std::size_t j = 0; j < noise.size(); ++j) eta[static_cast<Eigen::Index>(j)] = rng.complex_normal(noise.variances()[j]);
  return eta;
}

/// Data misfit potential Psi_h(u, y) = 1/2 ||y - G_h(u)||_Sigma^2 for fixed
/// data y. Callable as `double(const SourceConfig&)`; pure and thread-safe.
class Potential {
 public:
  Potential(const ObservationCache& cache, NoiseModel noise, ComplexVector data)
      : cache_(&cache), noise_(std::move(noise)), data_(std::move(data)) {
    if (noise_.size() != cache_->size() || static_cast<std::size_t>(data_.size()) != cache_->size())
      throw ConfigError("potential: data, noise and measurement counts differ");
    weights_.resize(noise_.size());
    for (std::size_t j = 0; j < noise_.size(); ++j) weights_[j] = 1.0 / noise_.variances()[j];
  }

  double operator()(const SourceConfig& u) const {
    const std::size_t m = cache_->size();
    thread_local std::vector<Complex> g;
    g.resize(m);
    cache_->observe_into(u, g);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += std::norm(data_[static_cast<Eigen::Index>(j)] - g[j]) * weights_[j];
    return s;  // = 1/2 * 2 sum |r_j|^2 / Gamma_jj
  }

  const ObservationCache& cache() const { return *cache_; }
  const NoiseModel& noise() const { return noise_; }
  const ComplexVector& data() const { return data_; }

 private:
  const ObservationCache* cache_;
  NoiseModel noise_;
  ComplexVector data_;
  std::vector<double> weights_;
};

inline double potential(const ObservationCache& cache, const NoiseModel& noise, const SourceConfig& u,
                        const ComplexVector& y) {
  const ComplexVector r = y - cache.observe(u);
  return 0.5 * sigma_norm_sq(noise, r);
}

/// G_h(u_exact), plus one noise draw when an rng is supplied.
inline ComplexVector synth_data(const ObservationCache& cache, const NoiseModel& noise, const SourceConfig& u_exact,
                                Rng* rng = nullptr) {
  if (noise.size() != cache.size()) throw ConfigError("synth_data: noise and measurement counts differ");
  ComplexVector y = cache.observe(u_exact);
  if (rng) y += sample_noise(noise, *rng);
  return y;
}

}  // namespace srcid
