#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace srcid {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the stream named by (master, label, indices...). Pure function of its
/// arguments, so a stream can be recreated on any worker in any order.
inline constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view label,
                                           std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t s = splitmix64(master ^ splitmix64(fnv1a(label)));
  for (auto i : indices) s = splitmix64(s ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return s;
}

/// Random stream handle. One per worker/particle; never shared.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::string_view label, std::initializer_list<std::uint64_t> indices = {})
      : engine_(stream_seed(master, label, indices)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(engine_); }
  double normal() { return normal_(engine_); }

  /// Circular complex Gaussian with E|z|^2 = variance and E z^2 = 0.
  std::complex<double> complex_normal(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace srcid
