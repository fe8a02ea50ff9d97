#include "ntglab/lemmas.hpp"

#include <cmath>
#include <numbers>

#include "ntglab/blyth.hpp"
#include "ntglab/ntg.hpp"
#include "ntglab/specfun.hpp"

namespace ntglab::numint {

namespace {

constexpr double kPi = std::numbers::pi;

// Accumulates a product of independent 1-D integrals; errors add relatively.
struct Product {
  double value = 1.0;
  double rel_err = 0.0;
  std::int64_t evals = 0;

  void times(const EstimateWithError& e) {
    value *= e.value;
    rel_err += e.value != 0.0 ? e.error / std::abs(e.value) : 0.0;
    evals += e.n_evals;
  }
  EstimateWithError result() const { return {value, std::abs(value) * rel_err, evals, Method::quadrature}; }
};

// Integral over (0, inf) of 2 r^e Gamma(gamma, r^2) dr.
EstimateWithError radial_factor(double e, double gamma, const Tolerance& tol) {
  auto g = [e, gamma](double r) {
    if (r <= 0.0 || !std::isfinite(r)) return 0.0;
    const double x = r * r;
    if (!std::isfinite(x)) return 0.0;
    return std::exp(std::numbers::ln2 + e * std::log(r) + specfun::log_upper_incomplete_gamma(gamma, x));
  };
  // Behaviour at the origin: Gamma(gamma, r^2) -> Gamma(gamma) for gamma > 0,
  // ~ r^(2 gamma) / (-gamma) for gamma < 0, ~ -2 ln r at gamma = 0.
  const double lead = gamma < 0.0 ? e + 2.0 * gamma : e;
  const double r0 = 1.0;
  auto near = integrate_power_left(g, 0.0, r0, lead, tol);
  auto far = integrate_1d(g, r0, kInf, tol);
  return {near.value + far.value, near.error + far.error, near.n_evals + far.n_evals, Method::quadrature};
}

// Integral over [0, w] of sin^a(x) cos^b(x), a > -1, with w <= pi/2.
EstimateWithError sin_cos_factor(double a, double b, double w, const Tolerance& tol) {
  auto g = [a, b](double x) { return std::pow(std::sin(x), a) * std::pow(std::cos(x), b); };
  return integrate_power_left(g, 0.0, w, a, tol);
}

// Integral of the theta_2..theta_p part of the Jacobian over its box; this is
// the surface area of S^(p-2) (1 for p = 1).
EstimateWithError remaining_angles(int p, const Tolerance& tol) {
  Product prod;
  prod.evals = 1;
  for (int j = 2; j <= p; ++j) {
    const double upper = j < p ? kPi : 2.0 * kPi;
    const int power = p - j;
    prod.times(integrate_1d([power](double th) { return std::pow(std::sin(th), power); }, 0.0, upper, tol));
  }
  return prod.result();
}

}  // namespace

NumericVsClosed lemma_bigint_check(int p, double alpha, double beta, double gamma, const Tolerance& tol) {
  if (p < 1) throw DomainError("lemma_bigint_check: p must be >= 1");
  const double half_p = 0.5 * p;
  const double k = alpha + beta - gamma + 1.0 + half_p;
  if (!(k > 0.0)) throw DomainError("lemma_bigint_check: need alpha + beta - gamma + 1 + p/2 > 0");
  if (!(alpha + beta + 1.0 + half_p > 0.0)) throw DomainError("lemma_bigint_check: need alpha + beta + 1 + p/2 > 0");
  if (!(alpha > -1.0) || !(beta + half_p > 0.0))
    throw DomainError("lemma_bigint_check: need alpha > -1 and beta + p/2 > 0");

  // In (r, theta) coordinates the integrand factorises into
  //   2 r^(2a + 2b - 2g + p + 1) Gamma(g, r^2)
  //   * cos^(2a+1)(theta_1) |sin|^(2b+p-1)(theta_1) * prod_{j>1} sin^(p-j)(theta_j).
  Product prod;
  prod.times(radial_factor(2.0 * alpha + 2.0 * beta - 2.0 * gamma + p + 1.0, gamma, tol));
  const double sa = 2.0 * beta + p - 1.0, ca = 2.0 * alpha + 1.0;
  auto left = sin_cos_factor(sa, ca, kPi / 4.0, tol);
  auto right = sin_cos_factor(ca, sa, kPi / 4.0, tol);
  const double sym = p == 1 ? 2.0 : 1.0;
  prod.times({sym * (left.value + right.value), sym * (left.error + right.error), left.n_evals + right.n_evals,
              Method::quadrature});
  prod.times(remaining_angles(p, tol));

  const double closed = std::exp(half_p * std::log(kPi) - std::log(k) + specfun::log_gamma(alpha + 1.0) +
                                 specfun::log_gamma(beta + half_p) - specfun::log_gamma(half_p));
  return {prod.result(), closed};
}

std::vector<LemmaDRow> lemma_d_check(int p, double gamma, const std::vector<double>& delta_grid,
                                     const Tolerance& tol) {
  if (p < 1) throw DomainError("lemma_d_check: p must be >= 1");
  const double half_p = 0.5 * p;
  if (!(gamma > half_p - 1.0) || !(gamma > -1.0)) throw DomainError("lemma_d_check: need gamma > (p-2)/2");
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    if (!(delta_grid[i] > 0.0)) throw DomainError("lemma_d_check: delta must be positive");
    if (i > 0 && !(delta_grid[i] < delta_grid[i - 1])) throw DomainError("lemma_d_check: delta grid must decrease");
  }
  // With t^(gamma - p/2) the radial part is 2 r Gamma(gamma, r^2) and the cone
  // |z|^2 delta > t becomes theta_1 > atan(delta^(-1/2)); in psi = pi/2 - theta_1
  // the angular part is sin^(2 gamma - p + 1) cos^(p - 1) over [0, atan(sqrt(delta))].
  Product fixed;
  fixed.times(radial_factor(1.0, gamma, tol));
  fixed.times(remaining_angles(p, tol));
  const auto base = fixed.result();
  const double limit = std::exp(std::numbers::ln2 + half_p * std::log(kPi) - std::log(2.0 * gamma + 2.0 - p) +
                                specfun::log_gamma(gamma + 1.0) - specfun::log_gamma(half_p));
  const double sym = p == 1 ? 2.0 : 1.0;
  std::vector<LemmaDRow> rows;
  for (double delta : delta_grid) {
    auto ang = sin_cos_factor(2.0 * gamma - p + 1.0, p - 1.0, std::atan(std::sqrt(delta)), tol);
    const double scale = sym * std::pow(delta, half_p - 1.0 - gamma);
    Product prod;
    prod.times(base);
    prod.times({scale * ang.value, scale * ang.error, ang.n_evals, Method::quadrature});
    rows.push_back({delta, prod.result(), limit});
  }
  return rows;
}

double smoments_closed(int p, int m, double eps) {
  if (p < 1 || m < 1) throw DomainError("smoments_closed: p and m must be >= 1");
  if (!(eps > 0.0)) throw DomainError("smoments_closed: eps must be positive");
  return 0.5 * std::exp(-0.5 * p * std::log(0.5 * eps) + specfun::log_gamma(0.5 * (m + p)) -
                        specfun::log_gamma(0.5 * m));
}

NumericVsClosed lemma_smoments_check(int p, int m, double kappa, double eps, const McSpec& spec) {
  if (!(kappa > 0.0)) throw DomainError("lemma_smoments_check: kappa must be positive");
  const auto ctx = blyth::BlythContext::make(p, m, 1.0, kappa, eps);
  const auto prior = blyth::prior_params(ctx);
  auto sampler = [&](rng::Stream& stream) {
    const auto point = ntg::sample_prior(prior, stream);
    return blyth::sample_obs_given(point, p, m, stream).s;
  };
  const double half_p = 0.5 * p;
  auto integrand = [half_p](double s) { return std::pow(s, half_p); };
  return {mc_estimate(sampler, integrand, spec), smoments_closed(p, m, eps)};
}

}  // namespace ntglab::numint
