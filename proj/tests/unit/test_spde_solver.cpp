#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hitspde/bessel.hpp"
#include "hitspde/grid.hpp"
#include "hitspde/quadrature.hpp"
#include "hitspde/spde_solver.hpp"
#include "hitspde/stats.hpp"

using namespace hitspde;

namespace {

GridSpec unit_grid(int nx, double horizon = 1.0) { return GridSpec::diffusive({0.0, 1.0}, nx, horizon); }

double min_over(const FieldPath& p) { return *std::min_element(p.values.begin(), p.values.end()); }

}  // namespace

TEST(Grid, DiffusiveStepDividesHorizon) {
  const GridSpec g = unit_grid(64);
  EXPECT_EQ(g.nodes(), 66);
  EXPECT_DOUBLE_EQ(g.dx(), 1.0 / 65.0);
  EXPECT_LE(g.dt(), g.dx() * g.dx() * (1.0 + 1e-12));
  EXPECT_NEAR(g.dt() * g.nt(), 1.0, 1e-12);
  EXPECT_EQ(g.x(g.nx() + 1), 1.0);
  EXPECT_THROW(GridSpec({0.0, 1.0}, 1, 1.0, 10), std::invalid_argument);
}

TEST(Noise, ReproducibleWithCellVariance) {
  const GridSpec g = unit_grid(32);
  const auto a = NoiseRealization::generate(11, g);
  const auto b = NoiseRealization::generate(11, g);
  ASSERT_TRUE(std::equal(a.increments().begin(), a.increments().end(), b.increments().begin()));
  NoiseStream stream(11, g);
  std::vector<double> row(g.nx());
  stream.next(row);
  for (int i = 0; i < g.nx(); ++i) EXPECT_EQ(row[i], a.row(0)[i]);

  const auto inc = a.increments();
  double ss = 0.0, s4 = 0.0;
  for (double v : inc) {
    ss += v * v;
    s4 += v * v * v * v;
  }
  const double n = static_cast<double>(inc.size());
  const double var = ss / n;
  const double se = std::sqrt((s4 / n - var * var) / n);
  EXPECT_LT(std::abs(var - g.dt() * g.dx()), 5.0 * se);
}

TEST(PenaltyDrift, KnownValues) {
  EXPECT_NEAR(penalty_drift(-1.0, 1.0, 1.0, 3.0), std::numbers::pi / 4.0, 1e-15);
  EXPECT_NEAR(penalty_drift(0.0, 1.0, 1.0, 5.0), 1.0, 1e-15);
  EXPECT_NEAR(penalty_drift(2.0, 0.5, 0.25, 5.0), 1.0 / 8.25, 1e-15);
  EXPECT_NEAR(penalty_drift(2.0, 0.5, 0.25, 5.0), 0.12121, 1e-5);
}

TEST(SolverConfig, Validation) {
  EXPECT_THROW(SolverConfig::penalized(5.0, 0.0, 1.0).validate(), std::invalid_argument);
  EXPECT_THROW(SolverConfig::penalized(5.0, 1.0, -1.0).validate(), std::invalid_argument);
  // (delta > 3, a = 0) is outside the regime on a shifted window
  const GridSpec shifted = GridSpec::diffusive({0.0, 2.0}, 32, 1.0);
  EXPECT_THROW(SolverConfig::penalized(5.0, 1.0, 1.0, 0.0).validate(shifted), std::invalid_argument);
  EXPECT_NO_THROW(SolverConfig::penalized(5.0, 1.0, 1.0, 0.5).validate(shifted));
  SolverConfig c = SolverConfig::reflected();
  c.scheme = LaplacianScheme::explicit_euler;
  EXPECT_THROW(c.validate(unit_grid(32)), std::invalid_argument);
  EXPECT_NO_THROW(c.validate(GridSpec({0.0, 1.0}, 31, 1.0, 2048)));
}

TEST(Step, ConstantEquilibrium) {
  const GridSpec g = unit_grid(16);
  const std::vector<double> state(g.nodes(), 0.5);
  const std::vector<double> noise(g.nx(), 0.0);
  for (double eps : {1e-3, 1.0, 100.0}) {
    const auto out = step_penalized(state, noise, SolverConfig::penalized(3.0, eps, 1.0, 0.5), g);
    for (double v : out) EXPECT_NEAR(v, 0.5, 1e-15);
  }
}

TEST(Step, SineModeDecaysByTheDiscreteEigenvalue) {
  const GridSpec g = unit_grid(31);
  std::vector<double> state(g.nodes());
  for (int i = 0; i < g.nodes(); ++i) state[i] = std::sin(std::numbers::pi * g.x(i));
  state.back() = 0.0;
  const std::vector<double> noise(g.nx(), 0.0);
  const auto out = step_penalized(state, noise, SolverConfig::penalized(3.0, 1.0, 1.0), g);
  const double r = g.dt() / (2.0 * g.dx() * g.dx());
  const double s = std::sin(0.5 * std::numbers::pi * g.dx());
  const double factor = 1.0 / (1.0 + 4.0 * r * s * s);
  for (int i = 1; i <= g.nx(); ++i) EXPECT_NEAR(out[i], factor * state[i], 1e-12);
}

TEST(Step, ImpulseResponseIsSymmetric) {
  const GridSpec g = unit_grid(31);
  const std::vector<double> state(g.nodes(), 0.0);
  std::vector<double> noise(g.nx(), 0.0);
  const int m = 15;  // node 16, the centre
  noise[m] = 1.0;
  const auto out = step_penalized(state, noise, SolverConfig::linear(), g);
  for (int j = 1; j <= 15; ++j) EXPECT_NEAR(out[16 - j], out[16 + j], 1e-14);
  EXPECT_GT(out[16], out[15]);
}

TEST(Penalized, WeakPenaltyMatchesLinearSolve) {
  const GridSpec g = unit_grid(32);
  const auto noise = NoiseRealization::generate(21, g);
  const auto init = mean_bridge_profile(g);
  const FieldPath pen = solve_penalized(init, SolverConfig::penalized(3.0, 1e9, 1.0), g, noise);
  const FieldPath lin = solve_linear(init, g, noise);
  for (std::size_t i = 0; i < pen.values.size(); ++i) ASSERT_NEAR(pen.values[i], lin.values[i], 1e-6);
}

TEST(Penalized, MonotoneInEpsilonAndLambda) {
  const GridSpec g = unit_grid(32);
  const auto init = mean_bridge_profile(g);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto noise = NoiseRealization::generate(seed, g);
    auto strong = SolverConfig::penalized(4.0, 0.1, 0.1);
    auto weak = SolverConfig::penalized(4.0, 1.0, 1.0);
    strong.drift = weak.drift = DriftTreatment::implicit_split;
    EXPECT_GE(min_ordered_difference(solve(init, strong, g, noise), solve(init, weak, g, noise)), -1e-9);
  }
}

TEST(Penalized, NoiselessPositiveBoundaryStaysAbove) {
  const GridSpec g = unit_grid(32, 0.5);
  const auto noise = NoiseRealization::zeros(g);
  const std::vector<double> init(g.nodes(), 0.5);
  const FieldPath p = solve_penalized(init, SolverConfig::penalized(5.0, 1e-2, 1e-2, 0.5), g, noise);
  EXPECT_GE(min_over(p), 0.5 - 1e-12);
  EXPECT_GT(p.at(g.nt(), 16), 0.5);
}

TEST(Reflected, InactiveProjectionWithoutNoise) {
  const GridSpec g = unit_grid(32, 0.2);
  const auto noise = NoiseRealization::zeros(g);
  const auto init = mean_bridge_profile(g);
  const FieldPath r = solve_reflected(init, g, noise);
  const FieldPath l = solve_linear(init, g, noise);
  ASSERT_TRUE(r.eta);
  EXPECT_EQ(r.eta_total_mass(), 0.0);
  EXPECT_EQ(r.values, l.values);

  const std::vector<double> zero(g.nodes(), 0.0);
  const FieldPath z = solve_reflected(zero, g, noise);
  for (double v : z.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(z.eta_total_mass(), 0.0);
}

TEST(Reflected, ComplementarityAndPositiveMass) {
  const GridSpec g = unit_grid(64);
  const auto init = mean_bridge_profile(g);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FieldPath p = solve_reflected(init, g, NoiseRealization::generate(seed == 0 ? 7 : seed + 100, g));
    ASSERT_TRUE(p.eta);
    EXPECT_GT(p.eta_total_mass(), 0.0);
    for (int k = 0; k < g.nt(); ++k) {
      const auto eta = p.eta_row(k);
      for (int i = 0; i < g.nx(); ++i) {
        const double u = p.at(k + 1, i + 1);
        ASSERT_GE(u, 0.0);
        ASSERT_GE(eta[i], 0.0);
        ASSERT_EQ(u * eta[i], 0.0);
      }
    }
    for (int k = 0; k <= g.nt(); ++k) {
      ASSERT_EQ(p.at(k, 0), 0.0);
      ASSERT_EQ(p.at(k, g.nx() + 1), 0.0);
    }
  }
}

TEST(CoupledFamily, ReflectedBelowPenalized) {
  const GridSpec g = unit_grid(64);
  const auto init = mean_bridge_profile(g);
  auto pen = SolverConfig::penalized(5.0, 1e-3, 1e-3);
  pen.drift = DriftTreatment::implicit_split;
  const std::vector<SolverConfig> members{SolverConfig::reflected(), pen};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto paths = solve_coupled_family(members, init, g, NoiseRealization::generate(seed, g));
    EXPECT_GE(min_ordered_difference(paths[1], paths[0]), -1e-8);
  }
  const std::vector<SolverConfig> one{SolverConfig::reflected()};
  EXPECT_EQ(solve_coupled_family(one, init, g, NoiseRealization::generate(1, g)).size(), 1u);
}

TEST(CoupledFamily, LadderIsMonotone) {
  const GridSpec g = unit_grid(32);
  const auto init = mean_bridge_profile(g);
  std::vector<SolverConfig> ladder;
  for (double e : {1.0, 0.1, 0.01}) {
    auto c = SolverConfig::penalized(4.0, e, e);
    c.drift = DriftTreatment::implicit_split;
    ladder.push_back(c);
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto paths = solve_coupled_family(ladder, init, g, NoiseRealization::generate(seed, g));
    EXPECT_GE(min_ordered_difference(paths[1], paths[0]), -1e-9);
    EXPECT_GE(min_ordered_difference(paths[2], paths[1]), -1e-9);
  }
}

TEST(CoupledFamily, StreamingMatchesMaterialized) {
  const GridSpec g = unit_grid(32, 0.25);
  const auto init = mean_bridge_profile(g);
  const std::vector<SolverConfig> members{SolverConfig::reflected(), SolverConfig::projected(5.0)};
  const auto paths = solve_coupled_family(members, init, g, NoiseRealization::generate(3, g));
  NoiseStream stream(3, g);
  int mismatches = 0;
  run_coupled_family(members, init, g, stream, [&](int k, int m, std::span<const double> row, std::span<const double>) {
    for (int i = 0; i < g.nodes(); ++i) mismatches += row[i] != paths[m].at(k, i) ? 1 : 0;
  });
  EXPECT_EQ(mismatches, 0);
}

TEST(MonotoneLimit, ApproachesReflection) {
  const GridSpec g = unit_grid(16, 0.25);
  const auto noise = NoiseRealization::generate(4, g);
  const auto init = mean_bridge_profile(g);
  const auto lim = solve_monotone_limit(3.0, init, g, noise, 0.0, 1e-3, 1e-9, 6);
  ASSERT_EQ(lim.sup_changes.size(), 5u);
  for (std::size_t i = 1; i < lim.sup_changes.size(); ++i) EXPECT_LT(lim.sup_changes[i], lim.sup_changes[i - 1]);
  const FieldPath refl = solve_reflected(init, g, noise);
  double dist = 0.0;
  for (std::size_t i = 0; i < refl.values.size(); ++i) dist = std::max(dist, std::abs(refl.values[i] - lim.path.values[i]));
  EXPECT_LT(dist, 2e-3);
}

TEST(VectorDirichlet, ZeroInZeroOut) {
  const GridSpec g = unit_grid(16, 0.1);
  const std::vector<double> init(static_cast<std::size_t>(g.nodes()) * 2, 0.0);
  const FieldPath p = solve_vector_dirichlet(2, init, g, NoiseRealization::zeros(g, 2));
  for (double v : p.values) EXPECT_EQ(v, 0.0);
}

TEST(VectorDirichlet, VarianceMatchesGreenFunctionIsometry) {
  const GridSpec g = unit_grid(128, 0.05);
  const int node = 64;
  const double x = g.x(node), t = g.horizon();
  // continuum: int_0^t int g_s(x, y)^2 dy ds through the sine expansion of g
  double exact = 0.0;
  for (int n = 1; n <= 20000; ++n) {
    const double k2 = std::pow(n * std::numbers::pi, 2);
    exact += 2.0 * std::pow(std::sin(n * std::numbers::pi * x), 2) * (1.0 - std::exp(-k2 * t)) / k2;
  }
  // scheme: u_N = sum_j A^-j xi_j with Cov xi = (dt / dx) I, A diagonal in the discrete sine basis
  const int m = g.nx() + 1;
  const double r = g.dt() / (2.0 * g.dx() * g.dx());
  double discrete = 0.0;
  for (int n = 1; n < m; ++n) {
    const double a = 1.0 / (1.0 + 4.0 * r * std::pow(std::sin(n * std::numbers::pi / (2.0 * m)), 2));
    const double v2 = 2.0 / m * std::pow(std::sin(n * std::numbers::pi * node / m), 2);
    discrete += v2 * a * a * (1.0 - std::pow(a, 2 * g.nt())) / (1.0 - a * a);
  }
  discrete *= g.dt() / g.dx();
  const std::vector<double> init(g.nodes(), 0.0);
  std::vector<double> v;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const FieldPath p = solve_vector_dirichlet(1, init, g, NoiseRealization::generate(seed, g));
    v.push_back(p.at(g.nt(), node) * p.at(g.nt(), node));
  }
  const MeanEstimate e = mean_estimate(v);
  EXPECT_LT(std::abs(e.mean - discrete), 4.0 * e.stderr_);
  // O(dx) gap between scheme and continuum
  EXPECT_NEAR(discrete / exact, 1.0, 0.1);
  EXPECT_LT(discrete, exact);
}

TEST(VectorDirichlet, ModulusOfStationaryStartIsABesselBridge) {
  const GridSpec g = unit_grid(64, 0.25);
  const int d = 3;
  const int node = 32;  // x = 32/65
  std::vector<double> samples;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(split_seed(99, seed));
    // three independent Brownian bridges on the nodes
    std::vector<double> init(static_cast<std::size_t>(g.nodes()) * d, 0.0);
    for (int c = 0; c < d; ++c) {
      std::vector<double> w(g.nodes(), 0.0);
      for (int i = 1; i < g.nodes(); ++i) w[i] = w[i - 1] + std::sqrt(g.dx()) * standard_normal(rng);
      for (int i = 0; i < g.nodes(); ++i) init[static_cast<std::size_t>(i) * d + c] = w[i] - g.x(i) * w.back();
    }
    const FieldPath p = solve_vector_dirichlet(d, init, g, NoiseRealization::generate(split_seed(100, seed), g, d));
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += p.at(g.nt(), node, c) * p.at(g.nt(), node, c);
    samples.push_back(std::sqrt(s));
  }
  const TabulatedCdf cdf = bridge_marginal_cdf(BesselParams(3.0), g.x(node));
  EXPECT_GT(ks_test(samples, [&](double y) { return cdf(y); }).p_value, 0.001);
}

TEST(Profiles, MeanBridge) {
  const GridSpec g = unit_grid(31);
  const auto m = mean_bridge_profile(g);
  EXPECT_EQ(m.front(), 0.0);
  EXPECT_EQ(m.back(), 0.0);
  EXPECT_NEAR(m[16], 2.0 * std::sqrt(2.0 / std::numbers::pi) * 0.5, 1e-12);
  EXPECT_THROW(validate_initial(std::vector<double>(g.nodes(), -1.0), g, 0.0), std::invalid_argument);
}
