#pragma once

#include <span>
#include <vector>

#include "hitspde/interval.hpp"

namespace hitspde {

/// Density of N(0, t) at x. Throws std::domain_error for t <= 0.
double gaussian_kernel(double t, double x);

struct KernelValue {
  double value = 0.0;
  /// Upper bound on the image terms dropped by the truncation.
  double truncation_bound = 0.0;
};

/// Green function of (d/dt - 1/2 d^2/dx^2) on [b, c] with Dirichlet boundary
/// conditions, by the method of images:
///   g_t(x, y) = sum_{|n| <= N} G_t(x - y + 2nL) - G_t(x + y - 2b + 2nL),  L = c - b.
class DirichletKernel {
 public:
  /// series_terms = 0 selects, per evaluation, the smallest N whose first
  /// omitted image term is below 1e-14.
  explicit DirichletKernel(Interval interval, int series_terms = 0);

  KernelValue evaluate(double t, double x, double y) const;
  double operator()(double t, double x, double y) const { return evaluate(t, x, y).value; }

  /// Number of image pairs used at time t.
  int series_terms_at(double t) const;
  /// Bound on the sum of all omitted images when N pairs are kept.
  double truncation_bound(double t, int terms) const;

  const Interval& interval() const noexcept { return interval_; }
  int series_terms() const noexcept { return series_terms_; }

 private:
  Interval interval_;
  int series_terms_;
};

/// (x -> int_b^c g_t(x, y) v(y) dy) on the same uniform grid as `initial`
/// (nodes b = y_0 < ... < y_{n-1} = c), by the trapezoidal rule. t = 0 returns
/// the input unchanged.
std::vector<double> deterministic_convolution(const DirichletKernel& kernel, double t,
                                              std::span<const double> initial);

}  // namespace hitspde
