#pragma once

#include <stdexcept>

namespace hitspde {

/// Closed interval [lo, hi] with lo < hi.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  constexpr double length() const noexcept { return hi - lo; }
  constexpr double midpoint() const noexcept { return 0.5 * (lo + hi); }
  constexpr bool contains(double x) const noexcept { return x >= lo && x <= hi; }

  void validate() const {
    if (!(lo < hi)) throw std::invalid_argument("interval requires lo < hi");
  }
};

}  // namespace hitspde
