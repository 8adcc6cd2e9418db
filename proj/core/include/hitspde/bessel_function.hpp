#pragma once

// Modified Bessel function of the first kind for real order nu >= -1/2 and
// real argument x >= 0.
//
// Evaluation uses the ascending power series for x <= kSeriesCutoff and the
// large-argument (Hankel) expansion above it. Everything that feeds the
// Bessel transition densities goes through the exponentially scaled forms so
// that densities stay finite long after I_nu(x) itself overflows.

namespace hitspde {

inline constexpr double kSeriesCutoff = 15.0;

/// I_nu(x). Throws std::overflow_error when the result is not representable
/// (x beyond roughly 709) and std::domain_error for nu < -1/2 or x < 0.
double modified_bessel_i(double nu, double x);

/// exp(-x) * I_nu(x); finite for every x >= 0.
double modified_bessel_i_scaled(double nu, double x);

/// lambda_nu(x) := I_nu(x) / x^nu, with lambda_nu(0) = 1 / (2^nu Gamma(nu + 1)).
/// Locally bounded and strictly positive on [0, inf).
double bessel_lambda(double nu, double x);

/// log(exp(-x) * lambda_nu(x)). Stable for all x >= 0; this is the quantity
/// the Bessel transition kernel needs.
double log_bessel_lambda_scaled(double nu, double x);

}  // namespace hitspde
