#include "hitspde/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hitspde {
namespace {

constexpr double kImageCutoff = 1e-14;

}  // namespace

double gaussian_kernel(double t, double x) {
  if (!(t > 0.0)) throw std::domain_error("Gaussian kernel requires t > 0");
  return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

DirichletKernel::DirichletKernel(Interval interval, int series_terms)
    : interval_(interval), series_terms_(series_terms) {
  interval.validate();
  if (series_terms < 0) throw std::invalid_argument("series_terms must be >= 1 (or 0 for auto)");
}

int DirichletKernel::series_terms_at(double t) const {
  if (series_terms_ > 0) return series_terms_;
  const double length = interval_.length();
  int n = 1;
  // The first omitted pair contributes at most G_t(2 N L).
  while (gaussian_kernel(t, 2.0 * n * length) >= kImageCutoff && n < 100000) ++n;
  return n;
}

double DirichletKernel::truncation_bound(double t, int terms) const {
  // Each dropped pair +-n (n > N) contributes four images, each bounded by
  // G_t(2 (n - 1) L).
  const double length = interval_.length();
  double bound = 0.0;
  for (int m = terms; m < terms + 10000; ++m) {
    const double g = gaussian_kernel(t, 2.0 * m * length);
    bound += 4.0 * g;
    if (g < 1e-300 || g < 1e-18 * bound) break;
  }
  return bound;
}

KernelValue DirichletKernel::evaluate(double t, double x, double y) const {
  if (!(t > 0.0)) throw std::domain_error("Dirichlet kernel requires t > 0");
  if (!interval_.contains(x) || !interval_.contains(y)) {
    throw std::domain_error("Dirichlet kernel arguments must lie in [b, c]");
  }
  const int terms = series_terms_at(t);
  KernelValue out{0.0, truncation_bound(t, terms)};
  const double b = interval_.lo;
  if (x == b || x == interval_.hi || y == b || y == interval_.hi) return out;
  const double period = 2.0 * interval_.length();
  const double direct = x - y;
  const double mirrored = x + y - 2.0 * b;
  // The loop is symmetric in n so that g(x, y) and g(y, x) sum the same terms.
  double sum = gaussian_kernel(t, direct) - gaussian_kernel(t, mirrored);
  for (int n = 1; n <= terms; ++n) {
    const double shift = period * n;
    sum += gaussian_kernel(t, direct + shift) + gaussian_kernel(t, direct - shift);
    sum -= gaussian_kernel(t, mirrored + shift) + gaussian_kernel(t, mirrored - shift);
  }
  out.value = std::max(0.0, sum);
  return out;
}

std::vector<double> deterministic_convolution(const DirichletKernel& kernel, double t,
                                              std::span<const double> initial) {
  if (initial.size() < 2) throw std::invalid_argument("convolution needs at least two nodes");
  if (t < 0.0) throw std::domain_error("convolution requires t >= 0");
  std::vector<double> out(initial.begin(), initial.end());
  if (t == 0.0) return out;
  const Interval& iv = kernel.interval();
  const std::size_t n = initial.size();
  const double h = iv.length() / static_cast<double>(n - 1);
  auto node = [&](std::size_t i) { return i + 1 == n ? iv.hi : iv.lo + h * static_cast<double>(i); };
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
      acc += w * kernel(t, node(i), node(j)) * initial[j];
    }
    out[i] = acc * h;
  }
  return out;
}

}  // namespace hitspde
