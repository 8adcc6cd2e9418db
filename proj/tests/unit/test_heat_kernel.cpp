#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hitspde/heat_kernel.hpp"
#include "hitspde/quadrature.hpp"
#include "hitspde/random.hpp"

using namespace hitspde;

TEST(GaussianKernel, ModeNormalizationSymmetry) {
  EXPECT_NEAR(gaussian_kernel(1.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  for (double t : {0.1, 1.0}) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_NEAR(integrate([&](double x) { return gaussian_kernel(t, x); }, -inf, inf), 1.0, 1e-10);
    EXPECT_EQ(gaussian_kernel(t, 0.37), gaussian_kernel(t, -0.37));
  }
  EXPECT_THROW(gaussian_kernel(0.0, 1.0), std::domain_error);
}

TEST(DirichletKernel, BoundaryAndSymmetry) {
  const DirichletKernel g({0.0, 1.0});
  EXPECT_NEAR(g(0.3, 0.0, 0.4), 0.0, 1e-15);
  EXPECT_NEAR(g(0.3, 1.0, 0.4), 0.0, 1e-15);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const double x = open_uniform(rng), y = open_uniform(rng), t = 0.01 + open_uniform(rng);
    EXPECT_NEAR(g(t, x, y), g(t, y, x), 1e-12);
  }
}

TEST(DirichletKernel, ShortTimeMatchesFreeKernel) {
  const DirichletKernel adaptive({0.0, 1.0});
  const DirichletKernel many({0.0, 1.0}, 200);
  EXPECT_NEAR(adaptive(0.01, 0.5, 0.5), gaussian_kernel(0.01, 0.0), 1e-6);
  EXPECT_NEAR(adaptive(0.01, 0.5, 0.5), 3.9894, 1e-4);
  EXPECT_NEAR(adaptive(0.01, 0.5, 0.5), many(0.01, 0.5, 0.5), 1e-13);
  const KernelValue v = adaptive.evaluate(0.5, 0.2, 0.6);
  EXPECT_LT(v.truncation_bound, 1e-13);
}

TEST(DirichletKernel, SineExpansionOracle) {
  // g_t(x, y) = 2 sum sin(n pi x) sin(n pi y) exp(-n^2 pi^2 t / 2) on [0, 1]
  const DirichletKernel g({0.0, 1.0});
  for (double t : {0.05, 0.3, 1.0}) {
    double s = 0.0;
    for (int n = 1; n <= 200; ++n) {
      const double k = n * std::numbers::pi;
      s += 2.0 * std::sin(k * 0.3) * std::sin(k * 0.8) * std::exp(-0.5 * k * k * t);
    }
    EXPECT_NEAR(g(t, 0.3, 0.8), s, 1e-12);
  }
}

TEST(DeterministicConvolution, ZeroIdentityEigenmode) {
  const DirichletKernel g({0.0, 1.0});
  const int n = 256;
  std::vector<double> zero(n, 0.0);
  for (double v : deterministic_convolution(g, 0.1, zero)) EXPECT_EQ(v, 0.0);

  std::vector<double> mode(n);
  for (int i = 0; i < n; ++i) mode[i] = std::sin(std::numbers::pi * i / (n - 1.0));
  EXPECT_EQ(deterministic_convolution(g, 0.0, mode), mode);

  const auto out = deterministic_convolution(g, 0.1, mode);
  const double decay = std::exp(-std::numbers::pi * std::numbers::pi * 0.1 / 2.0);
  for (int i = 1; i < n - 1; ++i) EXPECT_NEAR(out[i] / (decay * mode[i]), 1.0, 1e-3) << i;
}
