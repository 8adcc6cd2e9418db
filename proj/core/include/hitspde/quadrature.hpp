#pragma once

#include <functional>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hitspde {

/// Adaptive Gauss-Kronrod (61 point) integration over [lo, hi]; hi may be +inf.
template <typename F>
double integrate(F&& f, double lo, double hi, double rel_tol = 1e-12, unsigned max_depth = 20) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      std::forward<F>(f), lo, hi, max_depth, rel_tol);
}

template <typename F>
double integrate_to_infinity(F&& f, double lo, double rel_tol = 1e-12) {
  return integrate(std::forward<F>(f), lo, std::numeric_limits<double>::infinity(), rel_tol);
}

/// Piecewise-linear CDF built from a density on [lo, hi]. Cell masses are
/// exact (Gauss-Kronrod per cell); the total is renormalized to 1 and the raw
/// mass kept for diagnostics.
class TabulatedCdf {
 public:
  static TabulatedCdf from_density(const std::function<double(double)>& density, double lo,
                                   double hi, int cells = 2000);

  double operator()(double x) const;
  double raw_mass() const noexcept { return raw_mass_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  double step_ = 1.0;
  double raw_mass_ = 1.0;
  std::vector<double> cumulative_;
};

}  // namespace hitspde
