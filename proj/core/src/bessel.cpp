#include "hitspde/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hitspde/bessel_function.hpp"

namespace hitspde {
namespace {

void require_state(double v, const char* what) {
  if (!(v >= 0.0)) throw std::domain_error(what);
}

// y^(delta-1) with the delta = 1 convention 0^0 = 1.
double log_speed(double nu, double y) {
  const double power = 2.0 * nu + 1.0;
  if (power == 0.0) return 0.0;
  if (y == 0.0) return -std::numeric_limits<double>::infinity();
  return power * std::log(y);
}

void check_times(std::span<const double> times) {
  if (times.empty() || times.front() != 0.0) {
    throw std::invalid_argument("time grid must start at 0");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("time grid must be increasing");
  }
}

// Noncentral chi-square with `dof` >= 1 degrees of freedom and noncentrality
// `lambda`, via (Z + sqrt(lambda))^2 + chi2(dof - 1).
double sample_noncentral_chi2(double dof, double lambda, Rng& rng) {
  const double z = standard_normal(rng) + std::sqrt(lambda);
  double value = z * z;
  if (dof > 1.0) {
    boost::random::gamma_distribution<double> gamma(0.5 * (dof - 1.0), 2.0);
    value += gamma(rng);
  }
  return value;
}

// Draws from q(y) ~ y^(2nu+1) k_{s1}(x, y) k_{s2}(y, a) on an adapted grid,
// inverting the CDF of the piecewise-linear interpolant of q.
class ConditionalSampler {
 public:
  explicit ConditionalSampler(int cells) : nodes_(cells + 1), weights_(cells + 1), cdf_(cells + 1) {}

  double draw(double nu, double x, double s1, double a, double s2, Rng& rng) {
    const double delta = 2.0 * nu + 2.0;
    const double centre = (x * s2 + a * s1) / (s1 + s2);
    const double spread = std::sqrt(s1 * s2 / (s1 + s2));
    const double lo = std::max(0.0, centre - 12.0 * spread);
    const double hi = centre + (12.0 + 2.0 * std::sqrt(delta)) * spread;
    const std::size_t n = nodes_.size();
    const double h = (hi - lo) / static_cast<double>(n - 1);

    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double y = lo + h * static_cast<double>(i);
      nodes_[i] = y;
      weights_[i] = log_speed(nu, y) + log_bessel_kernel(nu, s1, x, y) + log_bessel_kernel(nu, s2, y, a);
      peak = std::max(peak, weights_[i]);
    }
    cdf_[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights_[i] = std::exp(weights_[i] - peak);
      if (i > 0) cdf_[i] = cdf_[i - 1] + 0.5 * h * (weights_[i - 1] + weights_[i]);
    }
    const double target = open_uniform(rng) * cdf_[n - 1];
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const std::size_t cell = std::min<std::size_t>(
        n - 2, static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cdf_.begin()) - 1)));

    // Within the cell the density is w0 + (w1 - w0) s, s in [0, 1]; solve
    // h (w0 s + (w1 - w0) s^2 / 2) = remaining mass for s.
    const double w0 = weights_[cell];
    const double w1 = weights_[cell + 1];
    const double remaining = (target - cdf_[cell]) / h;
    const double slope = w1 - w0;
    double s;
    if (std::abs(slope) < 1e-12 * std::max(w0, w1)) {
      s = w0 > 0.0 ? remaining / w0 : 0.5;
    } else {
      const double disc = std::max(0.0, w0 * w0 + 2.0 * slope * remaining);
      s = (std::sqrt(disc) - w0) / slope;
    }
    s = std::clamp(s, 0.0, 1.0);
    return nodes_[cell] + s * h;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> cdf_;
};

}  // namespace

BesselParams::BesselParams(double delta, double a, Interval interval)
    : delta_(delta), a_(a), interval_(interval) {
  if (!(delta >= 1.0)) throw std::invalid_argument("Bessel dimension must be >= 1");
  if (!(a >= 0.0)) throw std::invalid_argument("Bessel endpoint level must be >= 0");
  interval.validate();
}

double log_bessel_kernel(double nu, double t, double x, double y) {
  const double z = x * y / t;
  const double d = x - y;
  return -(nu + 1.0) * std::log(t) - d * d / (2.0 * t) + log_bessel_lambda_scaled(nu, z);
}

double bessel_transition_density(const BesselParams& params, double t, double x, double y) {
  if (!(t > 0.0)) throw std::domain_error("transition density requires t > 0");
  require_state(x, "transition density requires x >= 0");
  require_state(y, "transition density requires y >= 0");
  const double nu = params.nu();
  return std::exp(log_speed(nu, y) + log_bessel_kernel(nu, t, x, y));
}

double bridge_weight(const BesselParams& params, double theta, double y) {
  require_state(y, "bridge weight requires y >= 0");
  if (!(theta >= params.b() && theta < params.c())) {
    throw std::domain_error("bridge weight requires theta in [b, c)");
  }
  const double nu = params.nu();
  const double a = params.a();
  return std::exp(log_bessel_kernel(nu, params.c() - theta, y, a) -
                  log_bessel_kernel(nu, params.c() - params.b(), a, a));
}

double tilted_density(const BesselParams& params, double y) {
  if (params.b() != 0.0) throw std::invalid_argument("tilted density is defined for b = 0");
  if (!(params.c() > 0.0)) throw std::domain_error("tilted density requires c > 0");
  return bridge_weight(params, 0.5 * params.c(), y);
}

double bridge_marginal_density(const BesselParams& params, double theta, double y) {
  if (!(theta > params.b() && theta < params.c())) {
    throw std::domain_error("bridge marginal requires theta in (b, c)");
  }
  require_state(y, "bridge marginal requires y >= 0");
  const double nu = params.nu();
  const double a = params.a();
  return std::exp(log_speed(nu, y) + log_bessel_kernel(nu, theta - params.b(), a, y) +
                  log_bessel_kernel(nu, params.c() - theta, y, a) -
                  log_bessel_kernel(nu, params.c() - params.b(), a, a));
}

TabulatedCdf transition_cdf(const BesselParams& params, double t, double x0) {
  const double spread = std::sqrt(t);
  const double hi = x0 + (14.0 + 2.0 * std::sqrt(params.delta())) * spread;
  return TabulatedCdf::from_density(
      [&](double y) { return bessel_transition_density(params, t, x0, y); }, 0.0, hi);
}

TabulatedCdf bridge_marginal_cdf(const BesselParams& params, double theta) {
  const double s1 = theta - params.b();
  const double s2 = params.c() - theta;
  const double spread = std::sqrt(s1 * s2 / (s1 + s2));
  const double hi = params.a() + (14.0 + 2.0 * std::sqrt(params.delta())) * spread;
  return TabulatedCdf::from_density(
      [&](double y) { return bridge_marginal_density(params, theta, y); }, 0.0, hi);
}

BesselPath sample_bessel_process(const BesselParams& params, double x0,
                                 std::span<const double> times, Rng& rng) {
  require_state(x0, "Bessel process start must be >= 0");
  check_times(times);
  BesselPath path{{times.begin(), times.end()}, std::vector<double>(times.size())};
  path.values[0] = x0;
  double squared = x0 * x0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[i - 1];
    squared = dt * sample_noncentral_chi2(params.delta(), squared / dt, rng);
    path.values[i] = std::sqrt(squared);
  }
  return path;
}

BesselPath sample_bessel_bridge(const BesselParams& params, std::span<const double> grid, Rng& rng) {
  if (grid.size() < 2) throw std::invalid_argument("bridge grid needs both endpoints");
  const double tol = 1e-12 * params.interval().length();
  if (std::abs(grid.front() - params.b()) > tol || std::abs(grid.back() - params.c()) > tol) {
    throw std::invalid_argument("bridge grid must start at b and end at c");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("bridge grid must be increasing");
  }
  BesselPath path{{grid.begin(), grid.end()}, std::vector<double>(grid.size())};
  const double a = params.a();
  path.values.front() = a;
  path.values.back() = a;
  ConditionalSampler sampler(384);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double s1 = grid[i] - grid[i - 1];
    const double s2 = params.c() - grid[i];
    path.values[i] = sampler.draw(params.nu(), path.values[i - 1], s1, a, s2, rng);
  }
  return path;
}

std::vector<BesselPath> couple_bessel_in_delta(std::span<const double> deltas, double x0,
                                               std::span<const double> times, Rng& rng,
                                               double max_substep) {
  require_state(x0, "Bessel process start must be >= 0");
  check_times(times);
  if (!(max_substep > 0.0)) throw std::invalid_argument("substep must be positive");
  for (double d : deltas) {
    if (!(d >= 3.0)) throw std::invalid_argument("coupled Bessel processes require delta >= 3");
  }
  std::vector<BesselPath> paths(deltas.size());
  std::vector<double> state(deltas.size(), x0);
  for (auto& p : paths) {
    p.grid.assign(times.begin(), times.end());
    p.values.assign(times.size(), x0);
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double span = times[i] - times[i - 1];
    const auto substeps = static_cast<int>(std::ceil(span / max_substep));
    const double h = span / substeps;
    const double sd = std::sqrt(h);
    for (int s = 0; s < substeps; ++s) {
      const double increment = sd * standard_normal(rng);
      for (std::size_t j = 0; j < deltas.size(); ++j) {
        // y' - (delta - 1) h / (2 y') = y + dB, positive root.
        const double r = state[j] + increment;
        state[j] = 0.5 * (r + std::sqrt(r * r + 2.0 * (deltas[j] - 1.0) * h));
      }
    }
    for (std::size_t j = 0; j < deltas.size(); ++j) paths[j].values[i] = state[j];
  }
  return paths;
}

BesselPath sample_brownian_modulus(int dim, double x0, std::span<const double> times, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("Brownian dimension must be >= 1");
  check_times(times);
  std::vector<double> position(static_cast<std::size_t>(dim), 0.0);
  position[0] = x0;
  BesselPath path{{times.begin(), times.end()}, std::vector<double>(times.size())};
  path.values[0] = std::abs(x0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double sd = std::sqrt(times[i] - times[i - 1]);
    double norm2 = 0.0;
    for (auto& p : position) {
      p += sd * standard_normal(rng);
      norm2 += p * p;
    }
    path.values[i] = std::sqrt(norm2);
  }
  return path;
}

BesselPath sample_brownian_bridge_modulus(int dim, std::span<const double> grid, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("Brownian dimension must be >= 1");
  if (grid.size() < 2) throw std::invalid_argument("bridge grid needs both endpoints");
  const double end = grid.back();
  std::vector<double> position(static_cast<std::size_t>(dim), 0.0);
  BesselPath path{{grid.begin(), grid.end()}, std::vector<double>(grid.size(), 0.0)};
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double left = end - grid[i - 1];
    const double right = end - grid[i];
    const double shrink = right / left;
    const double sd = std::sqrt((grid[i] - grid[i - 1]) * right / left);
    double norm2 = 0.0;
    for (auto& p : position) {
      p = p * shrink + sd * standard_normal(rng);
      norm2 += p * p;
    }
    path.values[i] = std::sqrt(norm2);
  }
  return path;
}

}  // namespace hitspde
