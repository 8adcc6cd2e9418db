#pragma once

// R^d-valued stationary pinned string: the whole-line linear equation
//   dU = (1/2) U_xx dt + dW_d,  U_0 a two-sided Brownian motion with U_0(0) = 0,
// simulated on the lattice x_j = j dx, |j| <= J, covering the analysis window
// [-R, R] plus a buffer of width `margin` on each side.
//
// The state follows B_{k+1} = K * B_k + N_k with K the lattice Gaussian of
// variance dt. N_k carries only the band-limited part (|k| < pi/dx) of the
// per-step innovation. Sampling the innovation covariance at the nodes would
// fold its sub-lattice content onto low lattice frequencies, where K never
// damps it (+dx/12 per step, about 8% excess variance). In the continuum that
// content relaxes within one step (factor <= exp(-pi^2 dt / (2 dx^2))), so it
// is emitted instead as a fresh field A_k with the stationary sub-lattice
// spectrum: the row seen at step k >= 1 is B_k + A_k. Likewise B_0 = U_0 - Q
// with Q the sub-lattice part of the initial walk, drawn from its Gaussian law
// given the walk (its conditional mean when noise is off).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hitspde/field_io.hpp"
#include "hitspde/random.hpp"
#include "hitspde/spde_solver.hpp"

namespace hitspde {

struct StringSpec {
  int d = 1;
  double half_width = 1.0;  // R; must be a multiple of dx
  double margin = 10.0;     // >= 10 sqrt(T)
  double dx = 1.0 / 32.0;
  double dt = 1.0 / 1024.0;  // >= dx^2
  int nt = 1024;

  double horizon() const noexcept { return dt * nt; }
  /// Lattice half-index of the analysis window and of the simulated lattice.
  int window_index() const;
  int lattice_index() const;

  /// Throws std::invalid_argument.
  void validate() const;
  /// Analysis-window grid: interval [-R, R], nx = 2 R / dx - 1.
  GridSpec window_grid() const;
  WindowMeta window_meta() const { return {half_width, margin}; }

  static StringSpec unit(int d, double half_width, double horizon, double dx, double margin = -1.0);
};

/// Analysis-window field: FieldPath over window_grid() with dim = d.
struct StringField {
  StringSpec spec;
  FieldPath path;
  std::uint64_t seed = 0;
};

/// Two-sided Gaussian walk with step variance dx, 0 at x = 0; layout
/// [2J + 1][d] over the simulated lattice.
std::vector<double> sample_initial_string(const StringSpec& spec, Rng& rng);

/// Exact innovation covariance of one step at spatial lag h.
double string_innovation_covariance(double dt, double h);

class StringSimulator {
 public:
  explicit StringSimulator(const StringSpec& spec);

  /// Observer sees each analysis-window row ([nodes][d]) at k = 0..nt.
  using RowObserver = std::function<void(int k, std::span<const double> row)>;

  /// Streams a realization; the seed determines initial data and noise.
  void run(std::uint64_t seed, const RowObserver& observer) const;
  StringField simulate(std::uint64_t seed) const;

  /// Variant with caller-supplied initial data ([2J + 1][d]) and noise on/off.
  void run(std::span<const double> initial, Rng& noise_rng, bool with_noise,
           const RowObserver& observer) const;

  const StringSpec& spec() const noexcept { return spec_; }
  std::span<const double> heat_taps() const noexcept { return heat_; }
  std::span<const double> noise_taps() const noexcept { return rho_; }
  std::span<const double> subgrid_taps() const noexcept { return alias_; }

 private:
  StringSpec spec_;
  std::vector<double> heat_;  // K_j, j in [-heat_half, heat_half]
  std::vector<double> rho_;   // rho_j, j in [-rho_half, rho_half]
  std::vector<double> alias_;
  std::vector<double> split_;     // E[Q_j | D] = sum_n split_n D_{j-n}, D_l = U_0(l+1) - U_0(l)
  std::vector<double> residual_;  // taps of Q - E[Q | D]
  int heat_half_ = 0;
  int rho_half_ = 0;
  int alias_half_ = 0;
  int split_half_ = 0;
  int residual_half_ = 0;
};

StringField simulate_string(const StringSpec& spec, std::uint64_t seed);

/// (t, x) -> U_{L^4 t}(L^2 x) / L. Requires L^2 or 1/L^2 to be an integer
/// (within 1e-9). Throws std::domain_error otherwise or when the rescaled
/// field would leave the simulated window.
StringField scaling_transform(const StringField& field, double L);

enum class StringTransform { translate, reflect_translate, reverse };

/// translate:          U_{t0 + t}(x0 + x) - U_{t0}(x0)
/// reflect_translate:  U_{t0 + t}(x0 - x) - U_{t0}(x0)
/// reverse:            U_{T - t}(x) - U_T(0), T = t0 (t0 <= 0 means the full horizon)
/// Shifts must be lattice multiples. The output window is the largest
/// symmetric window that stays inside the source.
StringField translate_and_reverse(const StringField& field, double t0, double x0, StringTransform mode);

/// E[(U_t(x) - U_s(y))^2] for the continuum string, tau = |t - s|, h = |x - y|.
double string_variogram(double tau, double h);
/// Cov(U_t(x), U_s(y)) for one component.
double string_covariance(double t, double x, double s, double y);

}  // namespace hitspde
