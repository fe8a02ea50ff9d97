#pragma once

#include "ntglab/core.hpp"

namespace ntglab::specfun {

/// ln Gamma(a) for finite a > 0.
double log_gamma(double a);

/// Overflow/underflow state of a value reconstructed from its logarithm.
enum class Saturation : int { underflow = -1, none = 0, overflow = 1 };

struct GammaValue {
  double value;       // +inf on overflow, 0 or subnormal on underflow
  double log_value;   // always finite for valid arguments
  Saturation saturation;
};

/// Upper incomplete gamma function Gamma(a, x) = int_x^inf t^(a-1) e^(-t) dt.
///
/// Any real shape is accepted; non-positive shapes are what the truncated
/// priors need. The argument must satisfy x > 0 because the integral diverges
/// at the origin once a <= 0.
///
/// Evaluation regimes:
///   - x >= max(1, a + 1): Legendre continued fraction (modified Lentz).
///   - x < 1, a < 1/2: power series about the origin, with the pole of
///     Gamma(a) folded into the nearest series term so that shapes at or
///     near non-positive integers keep full relative accuracy.
///   - otherwise (a > 0): lower series, Gamma(a) * (1 - P(a, x)).
GammaValue upper_incomplete_gamma_checked(double a, double x);

/// Gamma(a, x); saturates to +inf / 0 like the checked variant.
double upper_incomplete_gamma(double a, double x);

/// ln Gamma(a, x); finite wherever the checked variant is defined.
double log_upper_incomplete_gamma(double a, double x);

/// ln Gamma(a, x) that also accepts x == 0 for a > 0 (complete gamma).
double log_upper_incomplete_gamma_or_complete(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a), a > 0, x >= 0.
double regularized_upper_gamma(double a, double x);

/// CDF of the F distribution with (d1, d2) degrees of freedom.
double f_cdf(int d1, int d2, double t);

/// Inverse of f_cdf by bracketing and bisection; |f_cdf(result) - q| <= 1e-10.
/// Throws NumericError carrying the final bracket if max_iter is exhausted.
double f_quantile(int d1, int d2, double q, const Tolerance& tol = {});

}  // namespace ntglab::specfun
