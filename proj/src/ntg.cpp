#include "ntglab/ntg.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ntglab/specfun.hpp"

namespace ntglab::ntg {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(double v) { return std::isfinite(v); }
}  // namespace

NtGParams NtGParams::make(int p, Vec mu0, double kappa0, double alpha0, double beta0, double eps0) {
  NtGParams out{p, std::move(mu0), kappa0, alpha0, beta0, eps0};
  out.validate();
  return out;
}

Regime NtGParams::regime() const {
  if (eps0 == 0.0 && alpha0 > 0.0 && beta0 > 0.0) return Regime::untruncated;
  if (eps0 > 0.0 && beta0 > 0.0) return Regime::truncated;
  if (eps0 > 0.0 && alpha0 < 0.0 && beta0 == 0.0) return Regime::truncated_power;
  throw DomainError("NtGParams: no propriety regime holds (need eps0=0, alpha0>0, beta0>0; or eps0>0, beta0>0; "
                    "or eps0>0, alpha0<0, beta0=0)");
}

void NtGParams::validate() const {
  if (p < 1) throw DomainError("NtGParams: p must be >= 1");
  if (static_cast<int>(mu0.size()) != p) throw DomainError("NtGParams: mu0 must have length p");
  for (double v : mu0)
    if (!finite(v)) throw DomainError("NtGParams: mu0 must be finite");
  if (!(kappa0 > 0.0) || !finite(kappa0)) throw DomainError("NtGParams: kappa0 must be positive");
  if (!finite(alpha0)) throw DomainError("NtGParams: alpha0 must be finite");
  if (!(beta0 >= 0.0) || !finite(beta0)) throw DomainError("NtGParams: beta0 must be >= 0");
  if (!(eps0 >= 0.0) || !finite(eps0)) throw DomainError("NtGParams: eps0 must be >= 0");
  (void)regime();
}

double log_normalizing_constant(const NtGParams& q) {
  q.validate();
  const double base = -0.5 * q.p * kLog2Pi;
  if (q.beta0 > 0.0)
    return base + q.alpha0 * std::log(q.beta0) -
           specfun::log_upper_incomplete_gamma_or_complete(q.alpha0, q.beta0 * q.eps0);
  return base + std::log(-q.alpha0) - q.alpha0 * std::log(q.eps0);
}

double normalizing_constant(const NtGParams& params) { return std::exp(log_normalizing_constant(params)); }

double log_prior_density(const NtGParams& q, const LocationScale& point) {
  point.validate(q.p);
  if (!(point.lambda > q.eps0)) return -kInf;
  const double d2 = squared_distance(point.mu, q.mu0);
  return log_normalizing_constant(q) + 0.5 * q.p * std::log(q.kappa0) +
         (q.alpha0 + 0.5 * q.p - 1.0) * std::log(point.lambda) - point.lambda * (q.beta0 + 0.5 * q.kappa0 * d2);
}

double prior_density(const NtGParams& params, const LocationScale& point) {
  return std::exp(log_prior_density(params, point));
}

NtGParams posterior_update(const NtGParams& q, const Observation& obs, int m) {
  q.validate();
  obs.validate(q.p);
  if (m < 1) throw DomainError("posterior_update: m must be >= 1");
  NtGParams out = q;
  const double k = q.kappa0;
  for (int j = 0; j < q.p; ++j) out.mu0[j] = (obs.x[j] + k * q.mu0[j]) / (1.0 + k);
  out.kappa0 = 1.0 + k;
  out.alpha0 = q.alpha0 + 0.5 * (q.p + m);
  out.beta0 = q.beta0 + 0.5 * obs.s + 0.5 * (k / (1.0 + k)) * squared_distance(obs.x, q.mu0);
  if (!(out.alpha0 > q.alpha0 && out.beta0 > q.beta0))
    throw std::logic_error("posterior_update: conjugate update did not increase alpha and beta");
  out.validate();
  return out;
}

double marginal_mu_density(const NtGParams& q, std::span<const double> mu) {
  q.validate();
  if (static_cast<int>(mu.size()) != q.p) throw DomainError("marginal_mu_density: mu must have length p");
  const double a = q.alpha0 + 0.5 * q.p;
  const double b = q.beta0 + 0.5 * q.kappa0 * squared_distance(mu, q.mu0);
  const double lc = log_normalizing_constant(q) + 0.5 * q.p * std::log(q.kappa0);
  if (b == 0.0) {
    if (a >= 0.0) return kInf;
    return std::exp(lc + a * std::log(q.eps0) - std::log(-a));
  }
  return std::exp(lc + specfun::log_upper_incomplete_gamma_or_complete(a, q.eps0 * b) - a * std::log(b));
}

double marginal_lambda_density(const NtGParams& q, double lambda) {
  q.validate();
  if (!(lambda > 0.0)) throw DomainError("marginal_lambda_density: lambda must be positive");
  if (!(lambda > q.eps0)) return 0.0;
  return std::exp(log_normalizing_constant(q) + 0.5 * q.p * kLog2Pi + (q.alpha0 - 1.0) * std::log(lambda) -
                  lambda * q.beta0);
}

double log_marginal_obs_density(const NtGParams& q, int m, const Observation& obs) {
  const NtGParams post = posterior_update(q, obs, m);
  const double a1 = post.alpha0, b1 = post.beta0;
  return log_normalizing_constant(q) - 0.5 * m * std::numbers::ln2 - specfun::log_gamma(0.5 * m) +
         0.5 * q.p * std::log(q.kappa0 / (1.0 + q.kappa0)) + (0.5 * m - 1.0) * std::log(obs.s) +
         specfun::log_upper_incomplete_gamma_or_complete(a1, q.eps0 * b1) - a1 * std::log(b1);
}

double marginal_obs_density(const NtGParams& params, int m, const Observation& obs) {
  return std::exp(log_marginal_obs_density(params, m, obs));
}

namespace {

// Solves ln Gamma(a, g) = target for g > g_lo (the function is decreasing in
// g) with Newton steps safeguarded by a bisection bracket.
double invert_log_upper_gamma(double a, double g_lo, double target) {
  const Tolerance tol{};
  auto h = [a](double g) { return specfun::log_upper_incomplete_gamma_or_complete(a, g); };
  double lo = g_lo, hi = std::max(1.0, 2.0 * g_lo + a);
  while (h(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericError("sample_lambda: bracket search overflowed", lo, kInf, {{lo, hi}});
  }
  double g = 0.5 * (lo + hi);
  for (int it = 0; it < tol.max_iter; ++it) {
    const double hv = h(g);
    const double r = hv - target;
    if (r > 0.0) lo = g; else hi = g;
    if (std::abs(r) <= 1e-13 * std::max(1.0, std::abs(target)) || (hi - lo) <= 1e-15 * hi) return g;
    // d/dg ln Gamma(a, g) = -g^(a-1) e^(-g) / Gamma(a, g)
    const double dlog = -std::exp((a - 1.0) * std::log(g) - g - hv);
    double next = g - r / dlog;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    g = next;
  }
  throw NumericError("sample_lambda: inverse CDF did not converge", g, hi - lo, {{lo, hi}});
}

}  // namespace

double sample_lambda(const NtGParams& q, rng::Stream& stream) {
  const double u = stream.uniform_open();
  if (q.regime() == Regime::truncated_power) return q.eps0 * std::pow(u, 1.0 / q.alpha0);
  // lambda = g / beta0 with g a Gamma(alpha0) variable truncated to g > beta0 eps0.
  const double g_lo = q.beta0 * q.eps0;
  const double target = std::log(u) + specfun::log_upper_incomplete_gamma_or_complete(q.alpha0, g_lo);
  return invert_log_upper_gamma(q.alpha0, g_lo, target) / q.beta0;
}

LocationScale sample_prior(const NtGParams& q, rng::Stream& stream) {
  q.validate();
  LocationScale out;
  out.lambda = sample_lambda(q, stream);
  const double sd = 1.0 / std::sqrt(q.kappa0 * out.lambda);
  out.mu.resize(q.p);
  for (int j = 0; j < q.p; ++j) out.mu[j] = q.mu0[j] + sd * stream.normal();
  return out;
}

}  // namespace ntglab::ntg
