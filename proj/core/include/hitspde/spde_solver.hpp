#pragma once

// Finite-difference solvers for the stochastic heat equation on [b, c] with
// Dirichlet boundary value a, driven by space-time white noise:
//
//   du = (1/2) u_xx dt + f(u) dt + dW          (penalized)
//   du = (1/2) u_xx dt + dW + d(eta),  u >= 0  (reflected)
//
// All solvers are deterministic functions of (initial, config, grid, noise).

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hitspde/grid.hpp"

namespace hitspde {

enum class LaplacianScheme { semi_implicit, explicit_euler };

/// Where the drift is evaluated within a step.
///  explicit_step: at the previous state, added to the right-hand side.
///  implicit_split: after the linear solve, node by node, y - dt f(y) = u~.
///                  Monotone in the state and in the drift for every dt.
enum class DriftTreatment { explicit_step, implicit_split };

struct SolverConfig {
  double delta = 3.0;
  /// Present: the f1 penalty pushes the solution up from below 0.
  /// Absent: the solution is projected onto u >= 0 after each step and the
  /// projection is recorded as eta (the epsilon -> 0 limit).
  std::optional<double> epsilon;
  /// Smoothing of the repulsion c_delta / (lambda + u^3). Absent means the
  /// singular drift c_delta / u^3, only allowed with implicit_split.
  std::optional<double> lambda;
  double boundary = 0.0;
  LaplacianScheme scheme = LaplacianScheme::semi_implicit;
  DriftTreatment drift = DriftTreatment::explicit_step;
  /// false: no drift and no projection (plain linear equation, delta = 3 only).
  bool constrained = true;

  static SolverConfig penalized(double delta, double epsilon, double lambda, double boundary = 0.0);
  static SolverConfig reflected(double boundary = 0.0);
  /// Projected with implicit drift; lambda absent gives the singular drift.
  static SolverConfig projected(double delta, std::optional<double> lambda = std::nullopt,
                                double boundary = 0.0);
  static SolverConfig linear(double boundary = 0.0);

  bool projects() const noexcept { return constrained && !epsilon; }
  bool has_drift() const noexcept { return constrained && (epsilon || delta > 3.0); }

  /// Parameter checks; throws std::invalid_argument.
  void validate() const;
  /// Parameter checks plus the grid-dependent ones: explicit Laplacian needs
  /// dt <= dx^2 / 2; on a window other than [0, 1] or with a > 0 the regime
  /// (delta = 3, a >= 0) or (delta > 3, a > 0) is required.
  void validate(const GridSpec& grid) const;
};

/// f1(r) + f2(r) with f1 = arctan(min(r, 0)^2) / eps, f2 = c_delta / (lambda + max(r, 0)^3).
double penalty_drift(double r, double epsilon, double lambda, double delta);

/// Solution of a space-time grid. values are [nt + 1][nx + 2][dim], boundary
/// nodes included. eta, when present, is [nt][nx]: eta[k][i] is the density
/// of the reflection measure over the cell (t_k, t_{k+1}] x node i+1, so the
/// cell carries mass eta * dt * dx.
struct FieldPath {
  GridSpec grid;
  int dim = 1;
  std::vector<double> values;
  std::optional<std::vector<double>> eta;

  FieldPath(const GridSpec& g, int d = 1);

  std::span<const double> row(int k) const;
  std::span<double> row(int k);
  double at(int k, int i, int component = 0) const {
    return values[(static_cast<std::size_t>(k) * grid.nodes() + i) * dim + component];
  }
  std::span<const double> eta_row(int k) const;
  double eta_total_mass() const;
};

/// One time step of the scalar solver with a precomputed tridiagonal
/// factorization. State rows hold all nx + 2 nodes.
class SpdeStepper {
 public:
  SpdeStepper(const GridSpec& grid, const SolverConfig& config);

  /// Advances `state` in place. `eta_out`, if non-empty, receives the nx
  /// reflection densities of the step (zeros when nothing is projected).
  void step(std::span<double> state, std::span<const double> noise_row,
            std::span<double> eta_out = {}) const;

  const GridSpec& grid() const noexcept { return grid_; }
  const SolverConfig& config() const noexcept { return config_; }

 private:
  double implicit_drift(double r) const;
  void linear_update() const;

  GridSpec grid_;
  SolverConfig config_;
  double ratio_;
  std::vector<double> upper_;     // modified super-diagonal of the Thomas sweep
  std::vector<double> inv_diag_;  // reciprocal pivots
  mutable std::vector<double> rhs_;
  mutable std::vector<double> scratch_;
};

/// Single step on its own: interior is updated, boundary set to config.boundary.
std::vector<double> step_penalized(std::span<const double> state, std::span<const double> noise_row,
                                   const SolverConfig& config, const GridSpec& grid);

/// Checks an initial row (nx + 2 values): nonnegative, finite, endpoints equal
/// to the boundary value within 1e-12. Throws std::invalid_argument.
void validate_initial(std::span<const double> initial, const GridSpec& grid, double boundary);

/// General driver; eta is recorded when config.projects().
FieldPath solve(std::span<const double> initial, const SolverConfig& config, const GridSpec& grid,
                const NoiseRealization& noise);

FieldPath solve_penalized(std::span<const double> initial, const SolverConfig& config,
                          const GridSpec& grid, const NoiseRealization& noise);
FieldPath solve_reflected(std::span<const double> initial, const GridSpec& grid,
                          const NoiseRealization& noise, double boundary = 0.0);
/// Linear equation (no drift, no reflection); initial may take any sign.
FieldPath solve_linear(std::span<const double> initial, const GridSpec& grid,
                       const NoiseRealization& noise, double boundary = 0.0);

/// Members share grid, noise and initial data; returned in input order.
std::vector<FieldPath> solve_coupled_family(std::span<const SolverConfig> members,
                                            std::span<const double> initial, const GridSpec& grid,
                                            const NoiseRealization& noise);

/// Streaming family solve: observer(k, member, row, eta_row) is called for
/// k = 0..nt (eta_row empty at k = 0 or when the member does not project).
/// Noise rows come from the stream, one row per step, shared by all members.
using FamilyObserver =
    std::function<void(int k, int member, std::span<const double> row, std::span<const double> eta)>;
void run_coupled_family(std::span<const SolverConfig> members, std::span<const double> initial,
                        const GridSpec& grid, NoiseStream& noise, const FamilyObserver& observer);

/// min over the grid of (upper - lower); +inf for empty interiors.
double min_ordered_difference(const FieldPath& upper, const FieldPath& lower);

struct MonotoneLimitResult {
  FieldPath path;
  std::vector<double> ladder;        // epsilon = lambda values used
  std::vector<double> sup_changes;   // sup-norm change between consecutive rungs
  bool converged = false;
};

/// Penalized (implicit-split) solves along epsilon = lambda = start, start/10, ..., stopping
/// when the sup-norm change drops below tol or after max_rungs rungs.
MonotoneLimitResult solve_monotone_limit(double delta, std::span<const double> initial,
                                         const GridSpec& grid, const NoiseRealization& noise,
                                         double boundary = 0.0, double start = 1.0,
                                         double tol = 1e-4, int max_rungs = 5);

/// d independent linear Dirichlet-0 solves. initial is [nx + 2][d]; noise.dim() == d.
FieldPath solve_vector_dirichlet(int d, std::span<const double> initial, const GridSpec& grid,
                                 const NoiseRealization& noise);

/// lambda below which dt * |f2'| can exceed 1 (explicit drift loses monotonicity).
double monotone_lambda_floor(double delta, double dt);

/// Constant row equal to the boundary value (nx + 2 nodes).
std::vector<double> constant_profile(const GridSpec& grid, double value);
/// Mean of |3-dim Brownian bridge| on [b, c]: 2 sqrt(2/pi) sqrt((x-b)(c-x)/(c-b)).
std::vector<double> mean_bridge_profile(const GridSpec& grid);

}  // namespace hitspde
