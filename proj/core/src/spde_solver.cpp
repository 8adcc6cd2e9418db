#include "hitspde/spde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/roots.hpp>

#include "hitspde/bessel.hpp"

namespace hitspde {

SolverConfig SolverConfig::penalized(double delta, double epsilon, double lambda, double boundary) {
  SolverConfig c;
  c.delta = delta;
  c.epsilon = epsilon;
  c.lambda = lambda;
  c.boundary = boundary;
  return c;
}

SolverConfig SolverConfig::reflected(double boundary) {
  SolverConfig c;
  c.boundary = boundary;
  return c;
}

SolverConfig SolverConfig::projected(double delta, std::optional<double> lambda, double boundary) {
  SolverConfig c;
  c.delta = delta;
  c.lambda = lambda;
  c.boundary = boundary;
  c.drift = DriftTreatment::implicit_split;
  return c;
}

SolverConfig SolverConfig::linear(double boundary) {
  SolverConfig c;
  c.boundary = boundary;
  c.constrained = false;
  return c;
}

void SolverConfig::validate() const {
  if (!(delta >= 3.0) || !std::isfinite(delta)) throw std::invalid_argument("solver requires delta >= 3");
  if (!(boundary >= 0.0) || !std::isfinite(boundary)) {
    throw std::invalid_argument("boundary value must be finite and >= 0");
  }
  if (epsilon && !(*epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (lambda && !(*lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (epsilon && !lambda) throw std::invalid_argument("penalized scheme requires lambda > 0");
  if (!constrained && (epsilon || delta != 3.0)) {
    throw std::invalid_argument("the unconstrained (linear) solver requires delta = 3 and no epsilon");
  }
  if (delta > 3.0 && !lambda && drift != DriftTreatment::implicit_split) {
    throw std::invalid_argument("singular drift (no lambda) requires the implicit drift treatment");
  }
}

void SolverConfig::validate(const GridSpec& grid) const {
  validate();
  if (scheme == LaplacianScheme::explicit_euler && !grid.explicit_stable()) {
    throw std::invalid_argument("explicit Laplacian requires dt <= dx^2 / 2");
  }
  const Interval& iv = grid.space();
  const bool variant = boundary > 0.0 || iv.lo != 0.0 || iv.hi != 1.0;
  if (constrained && variant && delta > 3.0 && !(boundary > 0.0)) {
    throw std::invalid_argument("regime violated: delta > 3 on a sub-window requires boundary a > 0");
  }
}

double penalty_drift(double r, double epsilon, double lambda, double delta) {
  if (!(epsilon > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("epsilon, lambda must be > 0");
  const double neg = std::min(r, 0.0);
  const double pos = std::max(r, 0.0);
  return std::atan(neg * neg) / epsilon + c_delta(delta) / (lambda + pos * pos * pos);
}

FieldPath::FieldPath(const GridSpec& g, int d) : grid(g), dim(d) {
  if (d < 1) throw std::invalid_argument("field dimension must be >= 1");
  values.assign(static_cast<std::size_t>(g.nt() + 1) * g.nodes() * d, 0.0);
}

std::span<const double> FieldPath::row(int k) const {
  const auto width = static_cast<std::size_t>(grid.nodes()) * dim;
  return {values.data() + width * k, width};
}

std::span<double> FieldPath::row(int k) {
  const auto width = static_cast<std::size_t>(grid.nodes()) * dim;
  return {values.data() + width * k, width};
}

std::span<const double> FieldPath::eta_row(int k) const {
  if (!eta) throw std::logic_error("path carries no reflection measure");
  const auto nx = static_cast<std::size_t>(grid.nx());
  return {eta->data() + nx * k, nx};
}

double FieldPath::eta_total_mass() const {
  if (!eta) return 0.0;
  double sum = 0.0;
  for (double e : *eta) sum += e;
  return sum * grid.dt() * grid.dx();
}

SpdeStepper::SpdeStepper(const GridSpec& grid, const SolverConfig& config)
    : grid_(grid), config_(config), ratio_(grid.dt() / (2.0 * grid.dx() * grid.dx())) {
  config.validate(grid);
  const int nx = grid.nx();
  scratch_.resize(nx);
  rhs_.resize(nx);
  if (config.scheme == LaplacianScheme::semi_implicit) {
    // (1 + 2r) on the diagonal, -r off it.
    upper_.resize(nx);
    inv_diag_.resize(nx);
    const double diag = 1.0 + 2.0 * ratio_;
    double prev = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double pivot = diag - (i == 0 ? 0.0 : -ratio_ * prev);
      inv_diag_[i] = 1.0 / pivot;
      prev = -ratio_ / pivot;
      upper_[i] = prev;
    }
  }
}

void SpdeStepper::linear_update() const {
  const auto& rhs = rhs_;
  const int nx = grid_.nx();
  const double a = config_.boundary;
  if (config_.scheme == LaplacianScheme::explicit_euler) {
    for (int i = 0; i < nx; ++i) scratch_[i] = rhs[i];
    return;
  }
  // Forward sweep with boundary contributions r * a at both ends.
  double prev = 0.0;
  for (int i = 0; i < nx; ++i) {
    double v = rhs[i];
    if (i == 0) v += ratio_ * a;
    if (i == nx - 1) v += ratio_ * a;
    v += ratio_ * prev;
    prev = v * inv_diag_[i];
    scratch_[i] = prev;
  }
  for (int i = nx - 2; i >= 0; --i) scratch_[i] -= upper_[i] * scratch_[i + 1];
}

double SpdeStepper::implicit_drift(double r) const {
  const double dt = grid_.dt();
  const double c = c_delta(config_.delta);
  if (!config_.epsilon && !config_.lambda) {
    // y^3 (y - r) = dt c on y > max(r, 0); p is convex increasing there, so
    // Newton from the right end decreases monotonically to the root.
    if (c == 0.0) return r;
    const double k = dt * c;
    const double base = std::max(r, 0.0);
    double y = base + std::sqrt(std::sqrt(k));
    for (int it = 0; it < 200; ++it) {
      const double y2 = y * y;
      const double p = y2 * y * (y - r) - k;
      const double dp = y2 * (4.0 * y - 3.0 * r);
      if (!(dp > 0.0)) break;
      const double next = y - p / dp;
      if (!(next < y) || next <= base) break;
      y = next;
    }
    return y;
  }
  const double lam = *config_.lambda;
  auto drift = [&](double y) {
    const double pos = std::max(y, 0.0);
    double f = c / (lam + pos * pos * pos);
    if (config_.epsilon) {
      const double neg = std::min(y, 0.0);
      f += std::atan(neg * neg) / *config_.epsilon;
    }
    return f;
  };
  const double f0 = drift(r);
  if (f0 == 0.0) return r;
  const double hi = r + dt * f0;
  auto g = [&](double y) { return y - dt * drift(y) - r; };
  const double g_hi = g(hi);
  if (g_hi <= 0.0) return hi;
  std::uintmax_t iters = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      g, r, hi, -dt * f0, g_hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (bracket.first + bracket.second);
}

void SpdeStepper::step(std::span<double> state, std::span<const double> noise_row,
                       std::span<double> eta_out) const {
  const int nx = grid_.nx();
  const double dt = grid_.dt();
  const double inv_dx = 1.0 / grid_.dx();
  const double a = config_.boundary;
  const bool explicit_drift = config_.has_drift() && config_.drift == DriftTreatment::explicit_step;

  auto& rhs = rhs_;
  for (int i = 0; i < nx; ++i) {
    const double u = state[i + 1];
    double v = u + noise_row[i] * inv_dx;
    if (explicit_drift) {
      const double lam = config_.lambda.value_or(0.0);
      const double pos = std::max(u, 0.0);
      double f = c_delta(config_.delta) / (lam + pos * pos * pos);
      if (config_.epsilon) {
        const double neg = std::min(u, 0.0);
        f += std::atan(neg * neg) / *config_.epsilon;
      }
      v += dt * f;
    }
    if (config_.scheme == LaplacianScheme::explicit_euler) {
      v += ratio_ * (state[i] - 2.0 * u + state[i + 2]);
    }
    rhs[i] = v;
  }
  linear_update();

  const bool implicit = config_.has_drift() && config_.drift == DriftTreatment::implicit_split;
  const bool project = config_.projects();
  for (int i = 0; i < nx; ++i) {
    double y = scratch_[i];
    if (implicit) y = implicit_drift(y);
    if (project) {
      if (!eta_out.empty()) eta_out[i] = y < 0.0 ? -y / dt : 0.0;
      y = y > 0.0 ? y : 0.0;
    } else if (!eta_out.empty()) {
      eta_out[i] = 0.0;
    }
    state[i + 1] = y;
  }
  state[0] = a;
  state[nx + 1] = a;
}

std::vector<double> step_penalized(std::span<const double> state, std::span<const double> noise_row,
                                   const SolverConfig& config, const GridSpec& grid) {
  if (state.size() != static_cast<std::size_t>(grid.nodes())) {
    throw std::invalid_argument("state row must have nx + 2 entries");
  }
  if (noise_row.size() != static_cast<std::size_t>(grid.nx())) {
    throw std::invalid_argument("noise row must have nx entries");
  }
  SpdeStepper stepper(grid, config);
  std::vector<double> out(state.begin(), state.end());
  out.front() = config.boundary;
  out.back() = config.boundary;
  stepper.step(out, noise_row);
  return out;
}

void validate_initial(std::span<const double> initial, const GridSpec& grid, double boundary) {
  if (initial.size() != static_cast<std::size_t>(grid.nodes())) {
    throw std::invalid_argument("initial row must have nx + 2 entries");
  }
  for (double v : initial) {
    if (!std::isfinite(v)) throw std::invalid_argument("initial data must be finite");
    if (v < 0.0) throw std::invalid_argument("initial data must be nonnegative");
  }
  if (std::abs(initial.front() - boundary) > 1e-12 || std::abs(initial.back() - boundary) > 1e-12) {
    throw std::invalid_argument("initial data must match the boundary value at both ends");
  }
}

namespace {

void check_noise(const GridSpec& grid, const NoiseRealization& noise, int dim) {
  const GridSpec& g = noise.grid();
  if (g.nx() != grid.nx() || g.nt() != grid.nt() || g.horizon() != grid.horizon() ||
      g.space().lo != grid.space().lo || g.space().hi != grid.space().hi) {
    throw std::invalid_argument("noise realization was generated on a different grid");
  }
  if (noise.dim() != dim) throw std::invalid_argument("noise dimension does not match the equation");
}

}  // namespace

FieldPath solve(std::span<const double> initial, const SolverConfig& config, const GridSpec& grid,
                const NoiseRealization& noise) {
  config.validate(grid);
  check_noise(grid, noise, 1);
  if (config.constrained) {
    validate_initial(initial, grid, config.boundary);
  } else if (initial.size() != static_cast<std::size_t>(grid.nodes())) {
    throw std::invalid_argument("initial row must have nx + 2 entries");
  }
  SpdeStepper stepper(grid, config);
  FieldPath path(grid);
  std::copy(initial.begin(), initial.end(), path.row(0).begin());
  path.row(0).front() = config.boundary;
  path.row(0).back() = config.boundary;
  const auto nx = static_cast<std::size_t>(grid.nx());
  if (config.projects()) path.eta.emplace(static_cast<std::size_t>(grid.nt()) * nx, 0.0);
  std::vector<double> state(path.row(0).begin(), path.row(0).end());
  for (int k = 0; k < grid.nt(); ++k) {
    std::span<double> eta_row;
    if (path.eta) eta_row = {path.eta->data() + nx * k, nx};
    stepper.step(state, noise.row(k), eta_row);
    std::copy(state.begin(), state.end(), path.row(k + 1).begin());
  }
  return path;
}

FieldPath solve_penalized(std::span<const double> initial, const SolverConfig& config,
                          const GridSpec& grid, const NoiseRealization& noise) {
  if (!config.epsilon) throw std::invalid_argument("penalized solve requires epsilon and lambda");
  return solve(initial, config, grid, noise);
}

FieldPath solve_reflected(std::span<const double> initial, const GridSpec& grid,
                          const NoiseRealization& noise, double boundary) {
  return solve(initial, SolverConfig::reflected(boundary), grid, noise);
}

FieldPath solve_linear(std::span<const double> initial, const GridSpec& grid,
                       const NoiseRealization& noise, double boundary) {
  return solve(initial, SolverConfig::linear(boundary), grid, noise);
}

std::vector<FieldPath> solve_coupled_family(std::span<const SolverConfig> members,
                                            std::span<const double> initial, const GridSpec& grid,
                                            const NoiseRealization& noise) {
  std::vector<FieldPath> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(solve(initial, m, grid, noise));
  return out;
}

void run_coupled_family(std::span<const SolverConfig> members, std::span<const double> initial,
                        const GridSpec& grid, NoiseStream& noise, const FamilyObserver& observer) {
  std::vector<SpdeStepper> steppers;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> etas;
  for (const auto& m : members) {
    validate_initial(initial, grid, m.boundary);
    steppers.emplace_back(grid, m);
    states.emplace_back(initial.begin(), initial.end());
    etas.emplace_back(m.projects() ? grid.nx() : 0, 0.0);
  }
  for (std::size_t m = 0; m < members.size(); ++m) observer(0, static_cast<int>(m), states[m], {});
  std::vector<double> row(grid.nx());
  for (int k = 0; k < grid.nt(); ++k) {
    noise.next(row);
    for (std::size_t m = 0; m < members.size(); ++m) {
      steppers[m].step(states[m], row, etas[m]);
      observer(k + 1, static_cast<int>(m), states[m], etas[m]);
    }
  }
}

double min_ordered_difference(const FieldPath& upper, const FieldPath& lower) {
  if (upper.values.size() != lower.values.size()) throw std::invalid_argument("paths differ in shape");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < upper.values.size(); ++i) {
    best = std::min(best, upper.values[i] - lower.values[i]);
  }
  return best;
}

MonotoneLimitResult solve_monotone_limit(double delta, std::span<const double> initial,
                                         const GridSpec& grid, const NoiseRealization& noise,
                                         double boundary, double start, double tol, int max_rungs) {
  if (!(start > 0.0) || max_rungs < 1) throw std::invalid_argument("invalid ladder");
  auto member = [&](double level) {
    SolverConfig c = SolverConfig::penalized(delta, level, level, boundary);
    c.drift = DriftTreatment::implicit_split;
    return c;
  };
  double level = start;
  FieldPath current = solve(initial, member(level), grid, noise);
  MonotoneLimitResult result{current, {level}, {}, false};
  for (int rung = 1; rung < max_rungs; ++rung) {
    level /= 10.0;
    FieldPath next = solve(initial, member(level), grid, noise);
    double change = 0.0;
    for (std::size_t i = 0; i < next.values.size(); ++i) {
      change = std::max(change, std::abs(next.values[i] - result.path.values[i]));
    }
    result.ladder.push_back(level);
    result.sup_changes.push_back(change);
    result.path = std::move(next);
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FieldPath solve_vector_dirichlet(int d, std::span<const double> initial, const GridSpec& grid,
                                 const NoiseRealization& noise) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  check_noise(grid, noise, d);
  const int nodes = grid.nodes();
  if (initial.size() != static_cast<std::size_t>(nodes) * d) {
    throw std::invalid_argument("vector initial data must be [nx + 2][d]");
  }
  SpdeStepper stepper(grid, SolverConfig::linear(0.0));
  FieldPath path(grid, d);
  std::copy(initial.begin(), initial.end(), path.row(0).begin());
  for (int c = 0; c < d; ++c) {
    path.row(0)[c] = 0.0;
    path.row(0)[static_cast<std::size_t>(nodes - 1) * d + c] = 0.0;
  }
  std::vector<double> state(nodes);
  for (int c = 0; c < d; ++c) {
    for (int i = 0; i < nodes; ++i) state[i] = path.at(0, i, c);
    for (int k = 0; k < grid.nt(); ++k) {
      stepper.step(state, noise.row(k, c));
      auto row = path.row(k + 1);
      for (int i = 0; i < nodes; ++i) row[static_cast<std::size_t>(i) * d + c] = state[i];
    }
  }
  return path;
}

double monotone_lambda_floor(double delta, double dt) {
  // max_r |f2'(r)| = (4 c / 3) 2^(-2/3) lambda^(-4/3), attained at r^3 = lambda / 2.
  const double c = c_delta(delta);
  if (c == 0.0) return 0.0;
  return std::pow(dt * (4.0 * c / 3.0) * std::pow(2.0, -2.0 / 3.0), 0.75);
}

std::vector<double> constant_profile(const GridSpec& grid, double value) {
  return std::vector<double>(grid.nodes(), value);
}

std::vector<double> mean_bridge_profile(const GridSpec& grid) {
  const double b = grid.space().lo;
  const double c = grid.space().hi;
  std::vector<double> out(grid.nodes(), 0.0);
  for (int i = 1; i + 1 < grid.nodes(); ++i) {
    const double x = grid.x(i);
    out[i] = 2.0 * std::sqrt(2.0 / std::numbers::pi) * std::sqrt((x - b) * (c - x) / (c - b));
  }
  return out;
}

}  // namespace hitspde
