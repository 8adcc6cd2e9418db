#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hitspde/pinned_string.hpp"
#include "hitspde/stats.hpp"

using namespace hitspde;

namespace {

StringSpec small_spec(int d = 1) { return StringSpec::unit(d, 0.5, 0.25, 1.0 / 16.0); }

}  // namespace

TEST(StringSpec, Validation) {
  const StringSpec s = small_spec();
  EXPECT_EQ(s.window_index(), 8);
  EXPECT_GE(s.margin, 10.0 * std::sqrt(s.horizon()) - 1e-12);
  StringSpec bad = s;
  bad.dt = 0.5 * s.dx * s.dx;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.margin = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.half_width = 0.51;
  EXPECT_ANY_THROW(bad.validate());
}

TEST(InitialString, PinnedBrownianWalk) {
  const StringSpec s = small_spec(2);
  const int J = s.lattice_index();
  const int d = s.d;
  Rng rng(3);
  const int n = 10000;
  const int jp = J + 8, jm = J - 16;  // x = 0.5 and x = -1
  std::vector<double> at_p, at_m, inc_a, inc_b;
  for (int r = 0; r < n; ++r) {
    const auto u = sample_initial_string(s, rng);
    ASSERT_EQ(u.size(), static_cast<std::size_t>(2 * J + 1) * d);
    ASSERT_EQ(u[static_cast<std::size_t>(J) * d], 0.0);
    ASSERT_EQ(u[static_cast<std::size_t>(J) * d + 1], 0.0);
    at_p.push_back(u[static_cast<std::size_t>(jp) * d]);
    at_m.push_back(u[static_cast<std::size_t>(jm) * d + 1]);
    inc_a.push_back(u[static_cast<std::size_t>(J + 4) * d] - u[static_cast<std::size_t>(J) * d]);
    inc_b.push_back(u[static_cast<std::size_t>(J + 12) * d] - u[static_cast<std::size_t>(J + 4) * d]);
  }
  auto square = [](std::vector<double> v) {
    for (auto& x : v) x *= x;
    return v;
  };
  const MeanEstimate vp = mean_estimate(square(at_p));
  const MeanEstimate vm = mean_estimate(square(at_m));
  EXPECT_LT(std::abs(vp.mean - 0.5), 5.0 * vp.stderr_);
  EXPECT_LT(std::abs(vm.mean - 1.0), 5.0 * vm.stderr_);
  std::vector<double> prod(n);
  for (int r = 0; r < n; ++r) prod[r] = inc_a[r] * inc_b[r];
  const MeanEstimate c = mean_estimate(prod);
  EXPECT_LT(std::abs(c.mean), 5.0 * c.stderr_);
}

TEST(StringSimulator, ZeroInZeroOut) {
  const StringSpec s = small_spec(2);
  const StringSimulator sim(s);
  const std::vector<double> zero(static_cast<std::size_t>(2 * s.lattice_index() + 1) * s.d, 0.0);
  Rng rng(1);
  int nonzero = 0, rows = 0;
  sim.run(zero, rng, false, [&](int, std::span<const double> row) {
    ++rows;
    for (double v : row) nonzero += v != 0.0 ? 1 : 0;
  });
  EXPECT_EQ(rows, s.nt + 1);
  EXPECT_EQ(nonzero, 0);
}

TEST(StringSimulator, DeterministicAndPinnedAtStart) {
  const StringSpec s = small_spec();
  const StringField a = simulate_string(s, 17);
  const StringField b = simulate_string(s, 17);
  EXPECT_EQ(a.path.values, b.path.values);
  EXPECT_EQ(a.path.at(0, s.window_index()), 0.0);
  EXPECT_NE(a.path.values, simulate_string(s, 18).path.values);
}

TEST(StringSimulator, StationaryIncrementVariance) {
  // E (U_t(x) - U_t(0))^2 = |x| at every t
  const StringSpec s = small_spec();
  const StringSimulator sim(s);
  const int jw = s.window_index();
  std::vector<double> v;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const StringField f = sim.simulate(split_seed(5, seed));
    const double d = f.path.at(s.nt, jw + 8) - f.path.at(s.nt, jw);
    v.push_back(d * d);
  }
  const MeanEstimate e = mean_estimate(v);
  EXPECT_LT(std::abs(e.mean - 0.5), 4.0 * e.stderr_);
}

TEST(StringTransforms, ScalingIdentityAndComposition) {
  const StringSpec s = StringSpec::unit(1, 0.5, 0.25, 1.0 / 32.0);
  const StringField u = simulate_string(s, 4);
  const StringField same = scaling_transform(u, 1.0);
  EXPECT_EQ(same.path.values, u.path.values);

  const StringField v = scaling_transform(u, std::sqrt(2.0));
  const StringField w = scaling_transform(v, 1.0 / std::sqrt(2.0));
  const int jw = s.window_index();
  const int hw = w.spec.window_index();
  ASSERT_EQ(hw * 2, jw);
  for (int k = 0; k <= w.spec.nt; ++k) {
    for (int j = -hw; j <= hw; ++j) {
      ASSERT_NEAR(w.path.at(k, hw + j), u.path.at(4 * k, jw + 2 * j), 1e-14);
    }
  }
  EXPECT_THROW(scaling_transform(u, 1.3), std::domain_error);
}

TEST(StringTransforms, TranslateAtOriginAndDoubleReversal) {
  const StringSpec s = small_spec();
  const StringField u = simulate_string(s, 6);
  const StringField t = translate_and_reverse(u, 0.0, 0.0, StringTransform::translate);
  EXPECT_EQ(t.path.values, u.path.values);
  const StringField r = translate_and_reverse(translate_and_reverse(u, 0.0, 0.0, StringTransform::reverse), 0.0, 0.0,
                                              StringTransform::reverse);
  ASSERT_EQ(r.path.values.size(), u.path.values.size());
  for (std::size_t i = 0; i < u.path.values.size(); ++i) ASSERT_NEAR(r.path.values[i], u.path.values[i], 1e-14);
}

TEST(StringCovariance, ExactFormulas) {
  EXPECT_NEAR(string_variogram(0.0, 0.3), 0.3, 1e-14);
  EXPECT_NEAR(string_covariance(0.0, 0.4, 0.0, 0.7), 0.4, 1e-14);
  EXPECT_NEAR(string_covariance(0.0, 0.4, 0.0, -0.7), 0.0, 1e-14);
  // variogram from the covariance
  const double t = 0.5, x = 0.2, s = 0.3, y = -0.1;
  EXPECT_NEAR(string_variogram(t - s, x - y),
              string_covariance(t, x, t, x) + string_covariance(s, y, s, y) - 2.0 * string_covariance(t, x, s, y),
              1e-12);
  // upper band of the covariance bound
  for (double tau : {0.01, 0.1, 1.0}) {
    for (double h : {0.0, 0.1, 1.0}) EXPECT_LE(string_variogram(tau, h), 2.0 * (h + std::sqrt(tau)));
  }
}
