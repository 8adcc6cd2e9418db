#include "hitspde/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace hitspde {

GridSpec::GridSpec(Interval space, int nx, double horizon, int nt)
    : space_(space), nx_(nx), horizon_(horizon), nt_(nt) {
  space.validate();
  if (nx < 2) throw std::invalid_argument("grid needs nx >= 2 interior nodes");
  if (nt < 1) throw std::invalid_argument("grid needs nt >= 1 steps");
  if (!(horizon > 0.0)) throw std::invalid_argument("grid horizon must be positive");
}

GridSpec GridSpec::diffusive(Interval space, int nx, double horizon, double ratio) {
  space.validate();
  if (!(ratio > 0.0)) throw std::invalid_argument("diffusive ratio must be positive");
  const double dx = space.length() / (nx + 1);
  const double target = ratio * dx * dx;
  const auto nt = static_cast<int>(std::ceil(horizon / target - 1e-9));
  return GridSpec(space, nx, horizon, nt < 1 ? 1 : nt);
}

NoiseStream::NoiseStream(std::uint64_t seed, const GridSpec& grid, int dim)
    : rng_(seed), scale_(std::sqrt(grid.dt() * grid.dx())) {
  if (dim < 1) throw std::invalid_argument("noise dimension must be >= 1");
}

void NoiseStream::next(std::span<double> row) {
  for (auto& v : row) v = scale_ * standard_normal(rng_);
}

NoiseRealization NoiseRealization::generate(std::uint64_t seed, const GridSpec& grid, int dim) {
  NoiseRealization noise(grid, dim, seed);
  noise.increments_.resize(static_cast<std::size_t>(grid.nt()) * dim * grid.nx());
  NoiseStream stream(seed, grid, dim);
  stream.next(noise.increments_);
  return noise;
}

NoiseRealization NoiseRealization::zeros(const GridSpec& grid, int dim) {
  if (dim < 1) throw std::invalid_argument("noise dimension must be >= 1");
  NoiseRealization noise(grid, dim, 0);
  noise.increments_.assign(static_cast<std::size_t>(grid.nt()) * dim * grid.nx(), 0.0);
  return noise;
}

NoiseRealization NoiseRealization::from_increments(const GridSpec& grid, int dim,
                                                   std::vector<double> increments) {
  if (dim < 1) throw std::invalid_argument("noise dimension must be >= 1");
  if (increments.size() != static_cast<std::size_t>(grid.nt()) * dim * grid.nx()) {
    throw std::invalid_argument("noise increments do not match the grid");
  }
  NoiseRealization noise(grid, dim, 0);
  noise.increments_ = std::move(increments);
  return noise;
}

std::span<const double> NoiseRealization::row(int step, int component) const {
  const auto nx = static_cast<std::size_t>(grid_.nx());
  const auto offset = (static_cast<std::size_t>(step) * dim_ + component) * nx;
  return {increments_.data() + offset, nx};
}

std::span<double> NoiseRealization::mutable_row(int step, int component) {
  const auto nx = static_cast<std::size_t>(grid_.nx());
  const auto offset = (static_cast<std::size_t>(step) * dim_ + component) * nx;
  return {increments_.data() + offset, nx};
}

}  // namespace hitspde
