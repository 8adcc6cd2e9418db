#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "hitspde/bessel.hpp"
#include "hitspde/bessel_function.hpp"
#include "hitspde/quadrature.hpp"
#include "hitspde/stats.hpp"

using namespace hitspde;

namespace {

constexpr std::size_t kN = 10000;

std::vector<double> process_marginal(const BesselParams& p, double x0, double t, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<double> times{0.0, t};
  std::vector<double> v(kN);
  for (auto& y : v) y = sample_bessel_process(p, x0, times, rng).values.back();
  return v;
}

}  // namespace

TEST(CDelta, KnownValues) {
  EXPECT_EQ(c_delta(3.0), 0.0);
  EXPECT_DOUBLE_EQ(c_delta(5.0), 1.0);
  EXPECT_DOUBLE_EQ(c_delta(7.0), 3.0);
  EXPECT_DOUBLE_EQ(BesselParams(4.0).repulsion(), 3.0 / 8.0);
}

TEST(BesselParams, RejectsBadParameters) {
  EXPECT_THROW(BesselParams(0.5), std::invalid_argument);
  EXPECT_THROW(BesselParams(3.0, -0.1), std::invalid_argument);
  EXPECT_THROW(BesselParams(3.0, 0.0, Interval{1.0, 1.0}), std::invalid_argument);
}

TEST(ModifiedBesselI, SmallCases) {
  EXPECT_DOUBLE_EQ(modified_bessel_i(0.0, 0.0), 1.0);
  EXPECT_NEAR(modified_bessel_i(0.5, 1.0), std::sqrt(2.0 / std::numbers::pi) * std::sinh(1.0), 1e-14);
  EXPECT_NEAR(modified_bessel_i(0.5, 1.0), 0.937674, 1e-6);
  // lambda_{1/2}(0) = 1 / (sqrt(2) Gamma(3/2))
  EXPECT_NEAR(bessel_lambda(0.5, 0.0), 1.0 / (std::sqrt(2.0) * std::tgamma(1.5)), 1e-15);
  EXPECT_NEAR(modified_bessel_i(0.5, 1e-8) / std::sqrt(1e-8), bessel_lambda(0.5, 0.0), 1e-12);
}

TEST(ModifiedBesselI, MatchesBoostAcrossTheSeriesCutoff) {
  for (double nu : {-0.5, 0.0, 0.5, 1.0, 1.5, 2.5, 3.0}) {
    for (double x : {0.1, 1.0, 5.0, 14.9, 15.1, 30.0, 200.0}) {
      const double ref = boost::math::cyl_bessel_i(nu, x);
      EXPECT_NEAR(modified_bessel_i(nu, x) / ref, 1.0, 1e-12) << "nu=" << nu << " x=" << x;
      EXPECT_NEAR(modified_bessel_i_scaled(nu, x) / (ref * std::exp(-x)), 1.0, 1e-12);
    }
  }
  // stays finite where I_nu overflows
  EXPECT_TRUE(std::isfinite(log_bessel_lambda_scaled(1.5, 5000.0)));
  EXPECT_THROW(modified_bessel_i(0.0, 1000.0), std::overflow_error);
  EXPECT_THROW(modified_bessel_i(-1.0, 1.0), std::domain_error);
}

TEST(TransitionDensity, ClosedFormAtZero) {
  const BesselParams p(3.0);
  EXPECT_NEAR(bessel_transition_density(p, 1.0, 0.0, 1.0), std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5), 1e-13);
  EXPECT_NEAR(bessel_transition_density(p, 1.0, 0.0, 1.0), 0.48394, 1e-5);
}

TEST(TransitionDensity, Normalized) {
  for (double delta : {3.0, 3.5, 4.0, 5.0, 7.0}) {
    for (double t : {0.1, 1.0}) {
      for (double x : {0.0, 0.5, 2.0}) {
        const BesselParams p(delta);
        const double mass = integrate_to_infinity([&](double y) { return bessel_transition_density(p, t, x, y); }, 0.0);
        EXPECT_NEAR(mass, 1.0, 1e-9) << delta << " " << t << " " << x;
      }
    }
  }
}

TEST(TransitionDensity, BrownianScaling) {
  const BesselParams p(4.0);
  const double s = 2.0;
  EXPECT_NEAR(s * bessel_transition_density(p, s * s * 0.5, s * 0.3, s * 0.7), bessel_transition_density(p, 0.5, 0.3, 0.7),
              1e-10);
}

TEST(TransitionDensity, RejectsBadArguments) {
  const BesselParams p(3.0);
  EXPECT_THROW(bessel_transition_density(p, 0.0, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(bessel_transition_density(p, 1.0, -1.0, 1.0), std::domain_error);
}

// The weight is the ratio p_{c - theta}(y, a) / p_c(a, a); at a = 0 it
// reduces to (c / (c - theta))^(delta / 2) exp(-y^2 / (2 (c - theta))).
TEST(TiltedDensity, ZeroEndpointLimit) {
  const BesselParams p(3.0, 0.0, {0.0, 2.0});
  EXPECT_NEAR(tilted_density(p, 0.0), std::pow(2.0, 1.5), 1e-12);
  const BesselParams q(3.0, 0.0, {0.0, 1.0});
  EXPECT_NEAR(tilted_density(q, 1.0), std::pow(2.0, 1.5) * std::exp(-1.0), 1e-12);
}

TEST(TiltedDensity, PositiveEndpointAndContinuity) {
  const BesselParams p(3.0, 1.0, {0.0, 2.0});
  EXPECT_NEAR(tilted_density(p, 1.0),
              bessel_transition_density(p, 1.0, 1.0, 1.0) / bessel_transition_density(p, 2.0, 1.0, 1.0), 1e-12);
  for (double delta : {3.0, 5.0}) {
    const BesselParams a0(delta, 0.0, {0.0, 2.0});
    const BesselParams small(delta, 1e-4, {0.0, 2.0});
    for (double y : {0.0, 0.5, 1.0, 2.0}) EXPECT_NEAR(tilted_density(small, y), tilted_density(a0, y), 1e-3);
  }
}

TEST(TiltedDensity, WeightsTheProcessToTheBridge) {
  for (double a : {0.0, 0.5}) {
    const BesselParams p(4.0, a, {0.0, 1.0});
    const double mass = integrate_to_infinity(
        [&](double y) { return bessel_transition_density(p, 0.5, a, y) * tilted_density(p, y); }, 0.0);
    EXPECT_NEAR(mass, 1.0, 1e-9);
  }
  EXPECT_THROW(tilted_density(BesselParams(3.0, 0.0, {0.5, 1.0}), 1.0), std::invalid_argument);
}

TEST(BridgeMarginal, NormalizedAndReversible) {
  const BesselParams p(3.5, 0.2, {0.0, 1.0});
  const double mass = integrate_to_infinity([&](double y) { return bridge_marginal_density(p, 0.3, y); }, 0.0);
  EXPECT_NEAR(mass, 1.0, 1e-9);
  for (double y : {0.1, 0.5, 1.0}) {
    EXPECT_NEAR(bridge_marginal_density(p, 0.3, y), bridge_marginal_density(p, 0.7, y), 1e-12);
  }
}

TEST(ProcessSampler, TrivialGrid) {
  Rng rng(1);
  const std::vector<double> times{0.0};
  const BesselPath path = sample_bessel_process(BesselParams(3.0), 0.7, times, rng);
  ASSERT_EQ(path.values.size(), 1u);
  EXPECT_EQ(path.values[0], 0.7);
}

TEST(ProcessSampler, MatchesQuadratureCdf) {
  const BesselParams p(3.0);
  const auto v = process_marginal(p, 0.0, 1.0, 42);
  const TabulatedCdf cdf = transition_cdf(p, 1.0, 0.0);
  EXPECT_GT(ks_test(v, [&](double y) { return cdf(y); }).p_value, 0.01);
}

TEST(ProcessSampler, ModulusOfThreeDimensionalBrownianMotion) {
  // five independent pairs; two rejections at 1% has chance ~1e-3
  const std::vector<double> times{0.0, 1.0};
  int rejected = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto v = process_marginal(BesselParams(3.0), 0.0, 1.0, split_seed(43, s));
    Rng rng(split_seed(44, s));
    std::vector<double> w(kN);
    for (auto& y : w) y = sample_brownian_modulus(3, 0.0, times, rng).values.back();
    rejected += ks_test_two_sample(v, w).p_value < 0.01 ? 1 : 0;
  }
  EXPECT_LE(rejected, 1);
}

TEST(ProcessSampler, NonIntegerDimension) {
  const BesselParams p(3.5);
  const auto v = process_marginal(p, 0.8, 0.5, 45);
  const TabulatedCdf cdf = transition_cdf(p, 0.5, 0.8);
  EXPECT_GT(ks_test(v, [&](double y) { return cdf(y); }).p_value, 0.01);
}

TEST(BridgeSampler, PinnedEndpoints) {
  Rng rng(2);
  const std::vector<double> grid{0.0, 1.0};
  const BesselPath path = sample_bessel_bridge(BesselParams(3.0, 0.4), grid, rng);
  EXPECT_EQ(path.values.front(), 0.4);
  EXPECT_EQ(path.values.back(), 0.4);
  const std::vector<double> fine{0.0, 0.25, 0.5, 0.75, 1.0};
  const BesselPath q = sample_bessel_bridge(BesselParams(5.0, 0.4), fine, rng);
  EXPECT_EQ(q.values.front(), 0.4);
  EXPECT_EQ(q.values.back(), 0.4);
  for (double v : q.values) EXPECT_GE(v, 0.0);
}

TEST(BridgeSampler, MatchesModulusOfBrownianBridge) {
  const BesselParams p(3.0);
  const std::vector<double> grid{0.0, 0.5, 1.0};
  Rng rng(46), orng(47);
  std::vector<double> v(kN), w(kN);
  for (auto& y : v) y = sample_bessel_bridge(p, grid, rng).values[1];
  for (auto& y : w) y = sample_brownian_bridge_modulus(3, grid, orng).values[1];
  EXPECT_GT(ks_test_two_sample(v, w).p_value, 0.01);
  const TabulatedCdf cdf = bridge_marginal_cdf(p, 0.5);
  EXPECT_GT(ks_test(v, [&](double y) { return cdf(y); }).p_value, 0.01);
}

TEST(BridgeSampler, TimeReversal) {
  const BesselParams p(4.0, 0.3);
  const std::vector<double> grid{0.0, 0.3, 0.7, 1.0};
  Rng rng(48), rng2(49);
  std::vector<double> early(kN), late(kN);
  for (auto& y : early) y = sample_bessel_bridge(p, grid, rng).values[1];
  for (auto& y : late) y = sample_bessel_bridge(p, grid, rng2).values[2];
  EXPECT_GT(ks_test_two_sample(early, late).p_value, 0.01);
}

TEST(Coupling, OrderedInDelta) {
  std::vector<double> times(101);
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = 0.01 * static_cast<double>(i);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const std::vector<double> deltas{3.0, 5.0, 8.0};
    const auto paths = couple_bessel_in_delta(deltas, 1.0, times, rng);
    ASSERT_EQ(paths.size(), 3u);
    for (std::size_t k = 0; k < times.size(); ++k) {
      EXPECT_GE(paths[1].values[k] - paths[0].values[k], -1e-8);
      EXPECT_GE(paths[2].values[k] - paths[1].values[k], -1e-8);
      EXPECT_GE(paths[2].values[k] - paths[0].values[k], -1e-8);
    }
  }
  Rng rng(9);
  const std::vector<double> single{4.0};
  EXPECT_EQ(couple_bessel_in_delta(single, 1.0, times, rng).size(), 1u);
}
