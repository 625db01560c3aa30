#pragma once

#include <cmath>
#include <numeric>
#include <random>
#include <variant>
#include <vector>

#include "srcid/error.hpp"
#include "srcid/random.hpp"
#include "srcid/sources.hpp"

namespace srcid {

struct PoissonCount {
  double lambda;
};

/// Explicit source-count pmf over {0, ..., pmf.size() - 1}.
struct ExplicitCount {
  std::vector<double> pmf;
};

using CountLaw = std::variant<PoissonCount, ExplicitCount>;

/// Support bound used when enumerating a Poisson count law.
inline constexpr int kCountEnumerationMax = 30;

/// Hierarchical sparse prior: k ~ count law, positions iid uniform on the
/// source domain, amplitudes iid N(amp_mean, amp_variance, 0), all independent.
struct PriorSpec {
  CountLaw count_law;
  Complex amp_mean;
  double amp_variance;
  SourceDomain domain;

  PriorSpec(CountLaw law, Complex mean, double variance, SourceDomain dom)
      : count_law(std::move(law)), amp_mean(mean), amp_variance(variance), domain(std::move(dom)) {
    if (!(amp_variance > 0.0)) throw ConfigError("prior: amp_variance must be positive");
    if (const auto* p = std::get_if<PoissonCount>(&count_law)) {
      if (!(p->lambda > 0.0)) throw ConfigError("prior: Poisson lambda must be positive");
    } else {
      const auto& pmf = std::get<ExplicitCount>(count_law).pmf;
      if (pmf.empty()) throw ConfigError("prior: explicit pmf is empty");
      double s = 0.0;
      for (double q : pmf) {
        if (!(q >= 0.0)) throw ConfigError("prior: pmf entries must be non-negative");
        s += q;
      }
      if (std::abs(s - 1.0) > 1e-12) throw ConfigError("prior: pmf must sum to 1");
    }
  }

  int max_count() const {
    if (std::holds_alternative<PoissonCount>(count_law)) return kCountEnumerationMax;
    return static_cast<int>(std::get<ExplicitCount>(count_law).pmf.size()) - 1;
  }
};

inline double prior_k_pmf(const PriorSpec& spec, int k) {
  if (k < 0) throw ConfigError("prior_k_pmf: k must be non-negative");
  if (const auto* p = std::get_if<PoissonCount>(&spec.count_law))
    return std::exp(k * std::log(p->lambda) - p->lambda - std::lgamma(k + 1.0));
  const auto& pmf = std::get<ExplicitCount>(spec.count_law).pmf;
  return static_cast<std::size_t>(k) < pmf.size() ? pmf[static_cast<std::size_t>(k)] : 0.0;
}

inline int sample_count(const PriorSpec& spec, Rng& rng) {
  if (const auto* p = std::get_if<PoissonCount>(&spec.count_law))
    return std::poisson_distribution<int>(p->lambda)(rng.engine());
  const auto& pmf = std::get<ExplicitCount>(spec.count_law).pmf;
  return std::discrete_distribution<int>(pmf.begin(), pmf.end())(rng.engine());
}

inline Source sample_source(const PriorSpec& spec, Rng& rng) {
  const Point2 x = spec.domain.sample(rng);
  const Complex alpha = spec.amp_mean + rng.complex_normal(spec.amp_variance);
  return {alpha, x};
}

inline SourceConfig sample_prior(const PriorSpec& spec, Rng& rng) {
  const int k = sample_count(spec, rng);
  SourceConfig u;
  u.sources.reserve(static_cast<std::size_t>(k));
  for (int l = 0; l < k; ++l) u.sources.push_back(sample_source(spec, rng));
  return u;
}

/// Prior mean of k.
inline double prior_mean_count(const PriorSpec& spec) {
  if (const auto* p = std::get_if<PoissonCount>(&spec.count_law)) return p->lambda;
  const auto& pmf = std::get<ExplicitCount>(spec.count_law).pmf;
  double m = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) m += static_cast<double>(k) * pmf[k];
  return m;
}

}  // namespace srcid
