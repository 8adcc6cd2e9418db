#include "hitspde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hitspde {

TabulatedCdf TabulatedCdf::from_density(const std::function<double(double)>& density, double lo,
                                        double hi, int cells) {
  if (!(hi > lo) || cells < 1) throw std::invalid_argument("tabulated CDF needs lo < hi and cells >= 1");
  TabulatedCdf cdf;
  cdf.lo_ = lo;
  cdf.hi_ = hi;
  cdf.step_ = (hi - lo) / cells;
  cdf.cumulative_.assign(static_cast<std::size_t>(cells) + 1, 0.0);
  using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  for (int i = 0; i < cells; ++i) {
    const double a = lo + cdf.step_ * i;
    const double b = (i + 1 == cells) ? hi : lo + cdf.step_ * (i + 1);
    const double mass = Rule::integrate(density, a, b, 0);
    cdf.cumulative_[i + 1] = cdf.cumulative_[i] + std::max(0.0, mass);
  }
  cdf.raw_mass_ = cdf.cumulative_.back();
  if (!(cdf.raw_mass_ > 0.0)) throw std::invalid_argument("tabulated CDF: density has no mass");
  for (auto& c : cdf.cumulative_) c /= cdf.raw_mass_;
  return cdf;
}

double TabulatedCdf::operator()(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  const double pos = (x - lo_) / step_;
  const auto cell = std::min(static_cast<std::size_t>(pos), cumulative_.size() - 2);
  const double frac = pos - static_cast<double>(cell);
  return cumulative_[cell] + frac * (cumulative_[cell + 1] - cumulative_[cell]);
}

}  // namespace hitspde
