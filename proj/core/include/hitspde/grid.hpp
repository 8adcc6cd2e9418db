#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hitspde/interval.hpp"
#include "hitspde/random.hpp"

namespace hitspde {

/// Space-time lattice on [b, c] x [0, T]: nx interior nodes plus the two
/// boundary nodes, nt time steps.
class GridSpec {
 public:
  GridSpec(Interval space, int nx, double horizon, int nt);

  /// nt chosen so that dt is the largest value <= ratio * dx^2 dividing T.
  static GridSpec diffusive(Interval space, int nx, double horizon, double ratio = 1.0);

  const Interval& space() const noexcept { return space_; }
  int nx() const noexcept { return nx_; }
  int nt() const noexcept { return nt_; }
  int nodes() const noexcept { return nx_ + 2; }
  double horizon() const noexcept { return horizon_; }
  double dx() const noexcept { return space_.length() / (nx_ + 1); }
  double dt() const noexcept { return horizon_ / nt_; }

  /// Node coordinate, i in [0, nx + 1].
  double x(int i) const noexcept { return i == nx_ + 1 ? space_.hi : space_.lo + dx() * i; }
  double t(int k) const noexcept { return k == nt_ ? horizon_ : dt() * k; }

  /// dt <= dx^2 / 2, required when the Laplacian is treated explicitly.
  bool explicit_stable() const noexcept { return dt() <= 0.5 * dx() * dx(); }

 private:
  Interval space_;
  int nx_;
  double horizon_;
  int nt_;
};

/// Row-wise generator of white-noise cell increments W(cell), each N(0, dt dx),
/// in the order (step, component, interior node).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, const GridSpec& grid, int dim = 1);

  /// Fills `row` (length nx) with the next component row.
  void next(std::span<double> row);

 private:
  Rng rng_;
  double scale_;
};

/// Materialized noise on a grid, shared by every solver of a coupled run.
class NoiseRealization {
 public:
  /// Seeded realization; identical (seed, grid, dim) give identical bits, and
  /// the sequence equals what NoiseStream(seed, grid, dim) produces.
  static NoiseRealization generate(std::uint64_t seed, const GridSpec& grid, int dim = 1);
  static NoiseRealization zeros(const GridSpec& grid, int dim = 1);
  /// Caller-provided increments, laid out [step][component][node].
  static NoiseRealization from_increments(const GridSpec& grid, int dim, std::vector<double> increments);

  std::span<const double> row(int step, int component = 0) const;
  std::span<double> mutable_row(int step, int component = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  int dim() const noexcept { return dim_; }
  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> increments() const noexcept { return increments_; }

 private:
  NoiseRealization(const GridSpec& grid, int dim, std::uint64_t seed)
      : grid_(grid), dim_(dim), seed_(seed) {}

  GridSpec grid_;
  int dim_;
  std::uint64_t seed_;
  std::vector<double> increments_;
};

}  // namespace hitspde
