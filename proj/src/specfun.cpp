#include "ntglab/specfun.hpp"

#include <array>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/beta.hpp>

namespace ntglab::specfun {

namespace {

constexpr double kEps = 1e-17;
constexpr double kTiny = 1e-300;
constexpr int kMaxTerms = 100000;

// zeta(k) for k = 2..30.
constexpr std::array<double, 29> kZeta = {
    1.64493406684822643647, 1.2020569031595942854,  1.08232323371113819152,
    1.03692775514336992633, 1.01734306198444913971, 1.00834927738192282684,
    1.00407735619794433938, 1.00200839282608221442, 1.00099457512781808534,
    1.00049418860411946456, 1.0002460865533080483,  1.00012271334757848915,
    1.00006124813505870483, 1.00003058823630702049, 1.00001528225940865187,
    1.00000763719763789976, 1.00000381729326499984, 1.00000190821271655394,
    1.0000009539620338728,  1.00000047693298678781, 1.00000023845050272773,
    1.00000011921992596531, 1.00000005960818905126, 1.00000002980350351465,
    1.00000001490155482837, 1.00000000745071178984, 1.00000000372533402479,
    1.00000000186265972351, 1.00000000093132743242};

double lgamma_positive(double a) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(a, &sign);
#else
  return std::lgamma(a);
#endif
}

// ln Gamma(1 + e) for |e| <= 1/2, accurate relative to e near zero.
double lgamma1p(double e) {
  if (std::abs(e) > 0.2) return lgamma_positive(1.0 + e);
  double sum = 0.0;
  double power = -e;  // (-e)^k, starting at k = 1
  for (int k = 2; k <= 30; ++k) {
    power *= -e;
    const double term = kZeta[k - 2] * power / k;
    sum += term;
    if (std::abs(term) < kEps * std::abs(sum)) break;
  }
  return -std::numbers::egamma * e + sum;
}

// Legendre continued fraction; returns ln Gamma(a, x).
double log_gamma_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) return a * std::log(x) - x + std::log(h);
  }
  throw NumericError("upper_incomplete_gamma: continued fraction did not converge",
                     a * std::log(x) - x + std::log(h), std::abs(h));
}

// Lower series for a > 0; returns ln Gamma(a, x) = ln Gamma(a) + ln(1 - P).
double log_gamma_lower_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 1; n <= kMaxTerms; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) {
      const double lg = lgamma_positive(a);
      const double log_p = std::log(sum) - x + a * std::log(x) - lg;
      return lg + std::log1p(-std::exp(log_p));
    }
  }
  throw NumericError("upper_incomplete_gamma: lower series did not converge", sum, del);
}

// Power series about the origin for x < 1 and a < 1/2:
//   Gamma(a, x) = Gamma(a) - sum_k (-1)^k x^(a+k) / (k! (a+k)).
// Gamma(a) has a pole at a = -N; it is combined with the k = N term, which
// has the matching pole, into one finite quantity evaluated as a difference
// quotient in e = a + N.
double log_gamma_small_x(double a, double x) {
  const long n_pole = std::max(0L, std::lround(-a));
  const double e = a + static_cast<double>(n_pole);
  const double lx = std::log(x);

  double log_h = lgamma1p(e);
  double harmonic = 0.0;
  for (long j = 1; j <= n_pole; ++j) {
    log_h -= std::log1p(-e / static_cast<double>(j));
    harmonic += 1.0 / static_cast<double>(j);
  }
  const double h_quot = (e == 0.0) ? harmonic - std::numbers::egamma : std::expm1(log_h) / e;
  const double x_quot = (e == 0.0) ? lx : std::expm1(e * lx) / e;
  const double sign = (n_pole % 2 == 0) ? 1.0 : -1.0;
  // Gamma(a) - (-1)^N x^e / (N! e)
  const double pole_part =
      sign * std::exp(-lgamma_positive(static_cast<double>(n_pole) + 1.0)) * (h_quot - x_quot);

  double rest = 0.0;
  double term = 1.0;  // (-x)^k / k!
  for (long k = 0; k <= kMaxTerms; ++k) {
    if (k != n_pole) {
      const double contrib = term / (a + static_cast<double>(k));
      rest += contrib;
      if (k > n_pole && std::abs(contrib) < kEps * std::abs(rest)) break;
    }
    term *= -x / static_cast<double>(k + 1);
  }
  const double log_scale = a * lx;
  return log_scale + std::log(pole_part * std::exp(-log_scale) - rest);
}

void check_args(double a, double x) {
  if (!std::isfinite(a)) throw DomainError("upper_incomplete_gamma: shape must be finite");
  if (!(x > 0.0) || std::isnan(x))
    throw DomainError("upper_incomplete_gamma: x must be positive, got " + std::to_string(x));
}

double log_upper_gamma_impl(double a, double x) {
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  if (x >= 1.0 && (a < 1.0 || x >= a + 1.0)) return log_gamma_cf(a, x);
  if (x < 1.0 && a < 0.5) return log_gamma_small_x(a, x);
  return log_gamma_lower_series(a, x);
}

}  // namespace

double log_gamma(double a) {
  if (!std::isfinite(a) || !(a > 0.0))
    throw DomainError("log_gamma: argument must be positive and finite");
  return lgamma_positive(a);
}

GammaValue upper_incomplete_gamma_checked(double a, double x) {
  check_args(a, x);
  const double lv = log_upper_gamma_impl(a, x);
  GammaValue out{std::exp(lv), lv, Saturation::none};
  if (lv > std::log(DBL_MAX)) {
    out.value = std::numeric_limits<double>::infinity();
    out.saturation = Saturation::overflow;
  } else if (out.value < DBL_MIN) {
    out.saturation = Saturation::underflow;
  }
  return out;
}

double upper_incomplete_gamma(double a, double x) { return upper_incomplete_gamma_checked(a, x).value; }

double log_upper_incomplete_gamma(double a, double x) {
  check_args(a, x);
  return log_upper_gamma_impl(a, x);
}

double log_upper_incomplete_gamma_or_complete(double a, double x) {
  if (x == 0.0) return log_gamma(a);
  return log_upper_incomplete_gamma(a, x);
}

double regularized_upper_gamma(double a, double x) {
  if (!(a > 0.0)) throw DomainError("regularized_upper_gamma: shape must be positive");
  if (x < 0.0 || std::isnan(x)) throw DomainError("regularized_upper_gamma: x must be >= 0");
  if (x == 0.0) return 1.0;
  return std::exp(log_upper_gamma_impl(a, x) - lgamma_positive(a));
}

double f_cdf(int d1, int d2, double t) {
  if (d1 < 1 || d2 < 1) throw DomainError("f_cdf: degrees of freedom must be >= 1");
  if (std::isnan(t) || t < 0.0) throw DomainError("f_cdf: t must be >= 0");
  if (t == 0.0) return 0.0;
  if (std::isinf(t)) return 1.0;
  const double a = 0.5 * d1;
  const double b = 0.5 * d2;
  const double num = d1 * t;
  const double den = num + d2;
  // Pick the better-conditioned tail of the beta variable.
  if (num / den < 0.5) return boost::math::ibeta(a, b, num / den);
  return boost::math::ibetac(b, a, d2 / den);
}

double f_quantile(int d1, int d2, double q, const Tolerance& tol) {
  tol.validate();
  if (d1 < 1 || d2 < 1) throw DomainError("f_quantile: degrees of freedom must be >= 1");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("f_quantile: q must lie in (0, 1)");

  double lo = 0.5;
  double hi = 1.0;
  if (f_cdf(d1, d2, hi) < q) {
    do {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw NumericError("f_quantile: upper bracket overflow", lo, 0.0, std::pair{lo, hi});
    } while (f_cdf(d1, d2, hi) < q);
  } else {
    while (f_cdf(d1, d2, lo) >= q) {
      hi = lo;
      lo *= 0.5;
      if (lo == 0.0) throw NumericError("f_quantile: lower bracket underflow", hi, 0.0, std::pair{lo, hi});
    }
  }

  // Bisect in log scale; the bracket spans at most a factor of two here.
  for (int it = 0; it < tol.max_iter; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    if (f_cdf(d1, d2, mid) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * DBL_EPSILON * hi) break;
  }
  const double root = 0.5 * (lo + hi);
  const double resid = std::abs(f_cdf(d1, d2, root) - q);
  if (resid > 1e-10)
    throw NumericError("f_quantile: did not reach 1e-10 in probability", root, resid, std::pair{lo, hi});
  return root;
}

}  // namespace ntglab::specfun
