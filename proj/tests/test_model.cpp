#include "srcid/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace srcid {
namespace {

SourceDomain experiment_domain() { return SourceDomain({{0.1, 0.9, 0.6, 0.9}}, 0.05); }

struct Problem {
  AssembledSystem sys = assemble(std::make_shared<const StructuredTriMesh>(16), HelmholtzParams{});
  ObservationCache cache{sys, {{0.1, 0.5}, {0.5, 0.5}, {0.9, 0.5}}, experiment_domain()};
  NoiseModel noise = NoiseModel({0.1, 0.2, 0.4});
  SourceConfig truth{{{{10, 10}, {0.25, 0.75}}, {{10, 10}, {0.75, 0.75}}}};
};

TEST(NoiseModel, RejectsBadVariances) {
  EXPECT_THROW(NoiseModel({}), ConfigError);
  EXPECT_THROW(NoiseModel({0.1, 0.0}), ConfigError);
  EXPECT_THROW(NoiseModel({0.1, -1.0}), ConfigError);
}

TEST(NoiseModel, RejectsNonCircularNoise) { EXPECT_THROW(NoiseModel({0.1}, 0.5), ConfigError); }

TEST(SigmaNorm, HandComputedValue) {
  const NoiseModel noise({0.5, 2.0});
  ComplexVector z(2);
  z << Complex(1, 1), Complex(2, 0);
  // 2 (|1+i|^2 / 0.5 + |2|^2 / 2) = 2 (4 + 2)
  EXPECT_DOUBLE_EQ(sigma_norm_sq(noise, z), 12.0);
}

TEST(SigmaNorm, DimensionMismatchThrows) {
  const NoiseModel noise({0.5, 2.0});
  EXPECT_THROW(sigma_norm_sq(noise, ComplexVector::Zero(3)), ConfigError);
}

TEST(SampleNoise, MomentsOfCircularGaussian) {
  const NoiseModel noise({0.1, 2.0});
  const int n = 100000;
  for (std::size_t j = 0; j < 2; ++j) {
    const double var = noise.variances()[j];
    double sre = 0, sim = 0, abs2 = 0, rel_re = 0, rel_im = 0;
    Rng local(7, "noise-moments", {j});
    for (int i = 0; i < n; ++i) {
      const Complex e = sample_noise(noise, local)[static_cast<Eigen::Index>(j)];
      sre += e.real();
      sim += e.imag();
      abs2 += std::norm(e);
      rel_re += (e * e).real();
      rel_im += (e * e).imag();
    }
    const double se_mean = std::sqrt(0.5 * var / n);
    EXPECT_NEAR(sre / n, 0.0, 5 * se_mean);
    EXPECT_NEAR(sim / n, 0.0, 5 * se_mean);
    // |e|^2 is exponential with mean var and sd var.
    EXPECT_NEAR(abs2 / n, var, 5 * var / std::sqrt(n));
    // e^2 has mean 0 (relation matrix zero); Re and Im parts have sd var / sqrt(2).
    EXPECT_NEAR(rel_re / n, 0.0, 5 * var / std::sqrt(2.0 * n));
    EXPECT_NEAR(rel_im / n, 0.0, 5 * var / std::sqrt(2.0 * n));
  }
}

TEST(Potential, MatchesHandFormula) {
  const Problem s;
  ComplexVector y(3);
  y << Complex(1, -2), Complex(0.5, 0.5), Complex(-3, 1);
  const Potential psi(s.cache, s.noise, y);
  const SourceConfig u{{{{2, -1}, {0.3, 0.7}}}};
  const ComplexVector g = s.cache.observe(u);
  double expected = 0.0;
  for (int j = 0; j < 3; ++j) expected += std::norm(y[j] - g[j]) / s.noise.variances()[static_cast<std::size_t>(j)];
  EXPECT_NEAR(psi(u), expected, 1e-12 * expected);
  EXPECT_NEAR(potential(s.cache, s.noise, u, y), expected, 1e-12 * expected);
}

TEST(Potential, ZeroAtTruthForNoiseFreeData) {
  const Problem s;
  const Potential psi(s.cache, s.noise, synth_data(s.cache, s.noise, s.truth));
  EXPECT_NEAR(psi(s.truth), 0.0, 1e-20);
  EXPECT_GT(psi(SourceConfig{}), 0.0);
}

TEST(Potential, EmptyConfigurationGivesDataNorm) {
  const Problem s;
  ComplexVector y(3);
  y << Complex(1, 0), Complex(0, 1), Complex(1, 1);
  const Potential psi(s.cache, s.noise, y);
  EXPECT_NEAR(psi(SourceConfig{}), 1 / 0.1 + 1 / 0.2 + 2 / 0.4, 1e-12);
}

TEST(Potential, RejectsMismatchedDimensions) {
  const Problem s;
  EXPECT_THROW(Potential(s.cache, NoiseModel({0.1, 0.1}), ComplexVector::Zero(3)), ConfigError);
  EXPECT_THROW(Potential(s.cache, s.noise, ComplexVector::Zero(2)), ConfigError);
}

TEST(SynthData, NoiseFreeEqualsObservation) {
  const Problem s;
  const ComplexVector y = synth_data(s.cache, s.noise, s.truth);
  EXPECT_EQ((y - s.cache.observe(s.truth)).norm(), 0.0);
}

TEST(SynthData, NoisyDataIsReproducibleFromTheStream) {
  const Problem s;
  Rng a(11, "noise"), b(11, "noise"), c(12, "noise");
  const ComplexVector ya = synth_data(s.cache, s.noise, s.truth, &a);
  const ComplexVector yb = synth_data(s.cache, s.noise, s.truth, &b);
  const ComplexVector yc = synth_data(s.cache, s.noise, s.truth, &c);
  EXPECT_EQ((ya - yb).norm(), 0.0);
  EXPECT_GT((ya - yc).norm(), 0.0);
}

}  // namespace
}  // namespace srcid
