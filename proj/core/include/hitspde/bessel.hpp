#pragma once

// Bessel processes and Bessel bridges of real dimension delta >= 1:
// transition densities, bridge weights, and exact samplers.
//
// Conventions. nu = delta/2 - 1 is the Bessel index. The transition density
// p_t(x, y) of the Bessel process is written as
//
//     p_t(x, y) = y^(delta-1) * k_t(x, y),
//     k_t(x, y) = t^-(nu+1) * exp(-(x^2 + y^2) / 2t) * lambda_nu(xy / t),
//
// with lambda_nu(z) = I_nu(z) / z^nu. The kernel k is symmetric in (x, y) and
// finite at 0, so the x = 0 case and the endpoint a = 0 of a bridge need no
// special branch.

#include <cstdint>
#include <span>
#include <vector>

#include "hitspde/interval.hpp"
#include "hitspde/quadrature.hpp"
#include "hitspde/random.hpp"

namespace hitspde {

/// Repulsion constant c_delta = (delta - 3)(delta - 1) / 8.
constexpr double c_delta(double delta) noexcept { return (delta - 3.0) * (delta - 1.0) / 8.0; }

class BesselParams {
 public:
  explicit BesselParams(double delta, double a = 0.0, Interval interval = {0.0, 1.0});

  double delta() const noexcept { return delta_; }
  double nu() const noexcept { return 0.5 * delta_ - 1.0; }
  double a() const noexcept { return a_; }
  const Interval& interval() const noexcept { return interval_; }
  double b() const noexcept { return interval_.lo; }
  double c() const noexcept { return interval_.hi; }
  double repulsion() const noexcept { return c_delta(delta_); }

 private:
  double delta_;
  double a_;
  Interval interval_;
};

struct BesselPath {
  std::vector<double> grid;
  std::vector<double> values;
};

/// log k_t(x, y); see the header comment.
double log_bessel_kernel(double nu, double t, double x, double y);

/// p_t(x, y). Throws std::domain_error for t <= 0 or negative states.
double bessel_transition_density(const BesselParams& params, double t, double x, double y);

/// Density ratio of the bridge from a to a over [b, c] against the Bessel
/// process started at a, at time theta:  p_{c-theta}(y, a) / p_{c-b}(a, a).
/// The a = 0 case is the continuous limit
///     ((c-b) / (c-theta))^(delta/2) * exp(-y^2 / (2 (c-theta))).
double bridge_weight(const BesselParams& params, double theta, double y);

/// Bridge weight at the midpoint of [0, c] (requires b = 0).
double tilted_density(const BesselParams& params, double y);

/// Marginal density of the Bessel bridge at theta in (b, c).
double bridge_marginal_density(const BesselParams& params, double theta, double y);

/// CDF helpers for goodness-of-fit checks (quadrature tabulated).
TabulatedCdf transition_cdf(const BesselParams& params, double t, double x0);
TabulatedCdf bridge_marginal_cdf(const BesselParams& params, double theta);

/// Exact sampling on `times` (times[0] == 0, strictly increasing) through the
/// noncentral chi-square transition of the squared process.
BesselPath sample_bessel_process(const BesselParams& params, double x0,
                                 std::span<const double> times, Rng& rng);

/// Sequential h-transform sampler for the bridge from a to a over [b, c].
/// `grid` must start at b and end at c. Each interior value is drawn by
/// inverse CDF from the exact conditional density on a state grid adapted
/// to the local mean and spread.
BesselPath sample_bessel_bridge(const BesselParams& params, std::span<const double> grid, Rng& rng);

/// Bessel processes of several dimensions driven by one Brownian path.
/// Uses the drift-implicit Euler step, which is monotone in the state and in
/// delta, so the ordering Y^(delta) >= Y^(delta') holds exactly on the grid.
/// Intervals of `times` are subdivided so that no substep exceeds max_substep.
std::vector<BesselPath> couple_bessel_in_delta(std::span<const double> deltas, double x0,
                                               std::span<const double> times, Rng& rng,
                                               double max_substep = 1e-3);

/// |x0 e_1 + B_t| for a dim-dimensional Brownian motion B.
BesselPath sample_brownian_modulus(int dim, double x0, std::span<const double> times, Rng& rng);

/// |B| for a dim-dimensional Brownian bridge from 0 to 0 over [grid.front(), grid.back()].
BesselPath sample_brownian_bridge_modulus(int dim, std::span<const double> grid, Rng& rng);

}  // namespace hitspde
