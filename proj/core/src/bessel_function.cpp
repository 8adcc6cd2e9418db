#include "hitspde/bessel_function.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hitspde {
namespace {

void check_domain(double nu, double x) {
  if (!(nu >= -0.5)) throw std::domain_error("modified Bessel I: order must be >= -1/2");
  if (!(x >= 0.0)) throw std::domain_error("modified Bessel I: argument must be >= 0");
}

// sum_k (x^2/4)^k / (k! Gamma(k + nu + 1)); all terms positive, no cancellation.
double lambda_series_sum(double nu, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0 / std::tgamma(nu + 1.0);
  double sum = term;
  for (int k = 0; k < 500; ++k) {
    term *= q / ((k + 1.0) * (k + nu + 1.0));
    sum += term;
    if (term < std::numeric_limits<double>::epsilon() * 0.25 * sum) break;
  }
  return sum;
}

// Hankel expansion of exp(-x) I_nu(x) * sqrt(2 pi x); the series is summed
// until its terms stop decreasing.
double hankel_scaled_core(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < std::numeric_limits<double>::epsilon() * 0.25 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double modified_bessel_i_scaled(double nu, double x) {
  check_domain(nu, x);
  if (x <= kSeriesCutoff) {
    if (x == 0.0) return nu == 0.0 ? 1.0 : (nu > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return std::exp(-x + nu * std::log(0.5 * x)) * lambda_series_sum(nu, x);
  }
  return hankel_scaled_core(nu, x) / std::sqrt(2.0 * std::numbers::pi * x);
}

double modified_bessel_i(double nu, double x) {
  check_domain(nu, x);
  if (x <= kSeriesCutoff) {
    if (x == 0.0) return nu == 0.0 ? 1.0 : (nu > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return std::pow(0.5 * x, nu) * lambda_series_sum(nu, x);
  }
  const double log_value =
      x + std::log(hankel_scaled_core(nu, x)) - 0.5 * std::log(2.0 * std::numbers::pi * x);
  if (log_value > std::log(std::numeric_limits<double>::max())) {
    throw std::overflow_error("modified Bessel I: result exceeds double range");
  }
  return std::exp(log_value);
}

double bessel_lambda(double nu, double x) {
  check_domain(nu, x);
  if (x <= kSeriesCutoff) return std::pow(0.5, nu) * lambda_series_sum(nu, x);
  return std::exp(log_bessel_lambda_scaled(nu, x) + x);
}

double log_bessel_lambda_scaled(double nu, double x) {
  check_domain(nu, x);
  if (x <= kSeriesCutoff) {
    return -nu * std::numbers::ln2 + std::log(lambda_series_sum(nu, x)) - x;
  }
  return std::log(hankel_scaled_core(nu, x)) - 0.5 * std::log(2.0 * std::numbers::pi * x) -
         nu * std::log(x);
}

}  // namespace hitspde
