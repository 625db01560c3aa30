#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "srcid/error.hpp"
#include "srcid/parallel.hpp"
#include "srcid/prior.hpp"
#include "srcid/random.hpp"
#include "srcid/sources.hpp"

namespace srcid {

/// Anything that maps a source configuration to a potential value.
template <class F>
concept PotentialFunction = requires(const F& f, const SourceConfig& u) {
  { f(u) } -> std::convertible_to<double>;
};

/// Weighted particle approximation sum_n w_n delta_{u_n}.
struct Ensemble {
  std::vector<SourceConfig> particles;
  std::vector<double> weights;

  std::size_t size() const { return particles.size(); }

  static Ensemble uniform(std::vector<SourceConfig> particles) {
    Ensemble e;
    const double w = 1.0 / static_cast<double>(particles.size());
    e.weights.assign(particles.size(), w);
    e.particles = std::move(particles);
    return e;
  }

  void validate() const {
    if (particles.empty()) throw ConfigError("ensemble: at least one particle required");
    if (particles.size() != weights.size()) throw ConfigError("ensemble: particle and weight counts differ");
  }

  /// sum_n w_n f(u_n)
  template <class F>
  double expectation(F&& f) const {
    double s = 0.0;
    for (std::size_t n = 0; n < particles.size(); ++n) s += weights[n] * f(particles[n]);
    return s;
  }

  double ess() const {
    double s = 0.0;
    for (double w : weights) s += w * w;
    return 1.0 / s;
  }
};

/// 0 = beta_0 < beta_1 < ... < beta_J = 1.
class TemperSchedule {
 public:
  explicit TemperSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.size() < 2) throw ConfigError("temper schedule: need at least two temperatures");
    if (betas_.front() != 0.0 || betas_.back() != 1.0) throw ConfigError("temper schedule: must start at 0 and end at 1");
    for (std::size_t j = 1; j < betas_.size(); ++j)
      if (!(betas_[j] > betas_[j - 1])) throw ConfigError("temper schedule: temperatures must increase strictly");
  }

  static TemperSchedule uniform(std::size_t steps) {
    std::vector<double> b(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) b[j] = static_cast<double>(j) / static_cast<double>(steps);
    b.back() = 1.0;
    return TemperSchedule(std::move(b));
  }

  const std::vector<double>& betas() const { return betas_; }
  std::size_t steps() const { return betas_.size() - 1; }

 private:
  std::vector<double> betas_;
};

struct KernelParams {
  double gamma_x = 0.1;      // random-walk step of positions
  double gamma_alpha = 0.4;  // pCN step of amplitudes, in [0, 1]
  int n_mcmc = 10;           // kernel applications per temper step

  void validate() const {
    if (!(gamma_x >= 0.0)) throw ConfigError("kernel: gamma_x must be non-negative");
    if (!(gamma_alpha >= 0.0 && gamma_alpha <= 1.0)) throw ConfigError("kernel: gamma_alpha must lie in [0, 1]");
    if (n_mcmc < 1) throw ConfigError("kernel: n_mcmc must be positive");
  }
};

/// Prior-reversible proposal: k' = k; x'_l = x_l + gamma_x eta_l if that stays
/// in the source domain, else x_l; amplitudes by preconditioned Crank-Nicolson
///   alpha' = sqrt(1 - gamma_alpha^2) (alpha - m) + m + gamma_alpha xi.
inline void propose(const SourceConfig& u, SourceConfig& out, const PriorSpec& prior, const KernelParams& kernel,
                    Rng& rng) {
  out.sources.resize(u.sources.size());
  const double contraction = std::sqrt(1.0 - kernel.gamma_alpha * kernel.gamma_alpha);
  for (std::size_t l = 0; l < u.sources.size(); ++l) {
    const Source& s = u.sources[l];
    const Point2 step{rng.normal(), rng.normal()};
    const Point2 moved = s.x + kernel.gamma_x * step;
    out.sources[l].x = prior.domain.contains(moved) ? moved : s.x;
    const Complex xi = rng.complex_normal(prior.amp_variance);
    out.sources[l].alpha = contraction * (s.alpha - prior.amp_mean) + prior.amp_mean + kernel.gamma_alpha * xi;
  }
}

struct MhOutcome {
  bool proposed = false;  // false for k = 0, where the kernel is the identity
  bool accepted = false;
};

/// One Metropolis-Hastings step targeting exp(-beta Psi) mu0. `u` and its cached
/// potential `psi_u` are updated in place; `scratch` is reused proposal storage.
template <PotentialFunction Pot>
MhOutcome mh_step(SourceConfig& u, double& psi_u, double beta, const PriorSpec& prior, const KernelParams& kernel,
                  const Pot& psi, Rng& rng, SourceConfig& scratch) {
  if (u.empty()) return {};
  propose(u, scratch, prior, kernel, rng);
  const double psi_new = psi(scratch);
  const double a = rng.uniform();
  bool accept = true;
  if (beta != 0.0) {
    const double log_ratio = beta * (psi_u - psi_new);
    accept = log_ratio >= 0.0 || std::log(a) <= log_ratio;
  }
  if (accept) {
    std::swap(u, scratch);
    psi_u = psi_new;
  }
  return {true, accept};
}

template <PotentialFunction Pot>
SourceConfig mh_step(const SourceConfig& u, double beta, const PriorSpec& prior, const KernelParams& kernel,
                     const Pot& psi, Rng& rng) {
  SourceConfig v = u, scratch;
  double psi_v = psi(v);
  mh_step(v, psi_v, beta, prior, kernel, psi, rng, scratch);
  return v;
}

enum class ResamplingScheme { Multinomial, Systematic };

/// Ancestor indices drawn from the weights.
inline std::vector<std::size_t> resample_indices(const std::vector<double>& weights, std::size_t n, Rng& rng,
                                                 ResamplingScheme scheme = ResamplingScheme::Multinomial) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) throw CollapseError("resample: weights are all zero or non-finite");
  std::vector<double> u(n);
  if (scheme == ResamplingScheme::Multinomial) {
    for (auto& v : u) v = rng.uniform();
    std::sort(u.begin(), u.end());
  } else {
    const double u0 = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) u[i] = (static_cast<double>(i) + u0) / static_cast<double>(n);
  }
  std::vector<std::size_t> idx(n);
  double cum = weights[0] / total;
  std::size_t k = 0;
  const std::size_t last = weights.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    while (k < last && u[i] >= cum) cum += weights[++k] / total;
    idx[i] = k;
  }
  return idx;
}

inline Ensemble resample(const Ensemble& ensemble, Rng& rng,
                         ResamplingScheme scheme = ResamplingScheme::Multinomial) {
  ensemble.validate();
  const auto idx = resample_indices(ensemble.weights, ensemble.size(), rng, scheme);
  std::vector<SourceConfig> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(ensemble.particles[i]);
  return Ensemble::uniform(std::move(out));
}

/// Multiplies weights by exp(-delta_beta psi_n) in log space and renormalizes.
/// Returns log sum_n w_n exp(-delta_beta psi_n), the log-normalizer increment.
inline double reweight_in_place(std::vector<double>& weights, const std::vector<double>& potentials,
                                double delta_beta) {
  if (!(delta_beta > 0.0)) throw ConfigError("reweight: beta_to must exceed beta_from");
  std::vector<double> logw(weights.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < weights.size(); ++n) {
    logw[n] = weights[n] > 0.0 ? std::log(weights[n]) - delta_beta * potentials[n]
                               : -std::numeric_limits<double>::infinity();
    if (std::isnan(logw[n])) logw[n] = -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, logw[n]);
  }
  if (!std::isfinite(max_log))
    throw CollapseError("reweight: all weights vanished; use a smaller temperature increment");
  double total = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) total += (weights[n] = std::exp(logw[n] - max_log));
  for (auto& w : weights) w /= total;
  return max_log + std::log(total);
}

template <PotentialFunction Pot>
Ensemble reweight(const Ensemble& ensemble, const Pot& psi, double beta_from, double beta_to) {
  ensemble.validate();
  std::vector<double> potentials(ensemble.size());
  for (std::size_t n = 0; n < ensemble.size(); ++n) potentials[n] = psi(ensemble.particles[n]);
  Ensemble out = ensemble;
  reweight_in_place(out.weights, potentials, beta_to - beta_from);
  return out;
}

struct SmcOptions {
  std::size_t workers = 1;
  ResamplingScheme resampling = ResamplingScheme::Multinomial;
};

/// Per temper step diagnostics.
struct SmcStepDiagnostics {
  std::size_t step;
  double beta_kernel;  // temperature of the Markov kernel
  double beta_to;      // temperature after reweighting
  double acceptance;   // mean acceptance over all proposals of the sweep
  double ess;          // after reweighting
  double log_normalizer_increment;
};

struct SmcResult {
  Ensemble ensemble;
  std::vector<double> potentials;  // Psi of each final particle
  std::vector<SmcStepDiagnostics> steps;
};

/// Tempered SMC: prior initialization, then per temper step j resample,
/// apply the beta_j-tempered kernel n_mcmc times, and reweight by
/// exp(-(beta_{j+1} - beta_j) Psi). Every random draw comes from a stream
/// labelled by (seed, stage, step, particle), so results do not depend on the
/// worker count.
template <PotentialFunction Pot>
SmcResult run_smc(const PriorSpec& prior, const Pot& psi, const TemperSchedule& schedule,
                  const KernelParams& kernel, std::size_t n_particles, std::uint64_t seed,
                  const SmcOptions& options = {}) {
  kernel.validate();
  if (n_particles == 0) throw ConfigError("run_smc: need at least one particle");
  const auto& betas = schedule.betas();

  std::vector<SourceConfig> particles(n_particles);
  std::vector<double> potentials(n_particles);
  parallel_for(n_particles, options.workers, [&](std::size_t n) {
    Rng rng(seed, "init", {n});
    particles[n] = sample_prior(prior, rng);
    potentials[n] = psi(particles[n]);
  });
  std::vector<double> weights(n_particles, 1.0 / static_cast<double>(n_particles));

  std::vector<SmcStepDiagnostics> diagnostics;
  std::vector<int> proposed(n_particles), accepted(n_particles);
  for (std::size_t j = 0; j + 1 < betas.size(); ++j) {
    {
      Rng rng(seed, "resample", {j});
      const auto idx = resample_indices(weights, n_particles, rng, options.resampling);
      std::vector<SourceConfig> next(n_particles);
      std::vector<double> next_psi(n_particles);
      for (std::size_t n = 0; n < n_particles; ++n) {
        next[n] = particles[idx[n]];
        next_psi[n] = potentials[idx[n]];
      }
      particles.swap(next);
      potentials.swap(next_psi);
      std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n_particles));
    }

    const double beta = betas[j];
    parallel_for(n_particles, options.workers, [&](std::size_t n) {
      Rng rng(seed, "kernel", {j, n});
      SourceConfig scratch;
      int p = 0, a = 0;
      for (int it = 0; it < kernel.n_mcmc; ++it) {
        const MhOutcome o = mh_step(particles[n], potentials[n], beta, prior, kernel, psi, rng, scratch);
        p += o.proposed;
        a += o.accepted;
      }
      proposed[n] = p;
      accepted[n] = a;
    });

    double log_inc = 0.0;
    try {
      log_inc = reweight_in_place(weights, potentials, betas[j + 1] - betas[j]);
    } catch (const CollapseError& e) {
      throw CollapseError(std::string(e.what()) + " (temper step " + std::to_string(j) + ")");
    }
    const long long total_p = std::accumulate(proposed.begin(), proposed.end(), 0LL);
    const long long total_a = std::accumulate(accepted.begin(), accepted.end(), 0LL);
    double ess_inv = 0.0;
    for (double w : weights) ess_inv += w * w;
    diagnostics.push_back({j, beta, betas[j + 1],
                           total_p > 0 ? static_cast<double>(total_a) / static_cast<double>(total_p) : 1.0,
                           1.0 / ess_inv, log_inc});
  }
  return {Ensemble{std::move(particles), std::move(weights)}, std::move(potentials), std::move(diagnostics)};
}

}  // namespace srcid
