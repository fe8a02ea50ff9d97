#include "ntglab/blyth.hpp"

#include <cmath>
#include <numbers>

#include "ntglab/specfun.hpp"

namespace ntglab::blyth {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
}

// ln of beta^(m/2) / Gamma(m/2, eps beta), the normaliser of the lambda posterior.
double log_lambda_norm(const BlythContext& ctx, double beta) {
  return 0.5 * ctx.m * std::log(beta) - specfun::log_upper_incomplete_gamma(0.5 * ctx.m, ctx.eps * beta);
}
}  // namespace

BlythContext BlythContext::make(int p, int m, double c, double kappa, double eps) {
  BlythContext ctx{p, m, c, kappa, eps};
  ctx.validate();
  return ctx;
}

void BlythContext::validate() const {
  if (p < 1) throw DomainError("BlythContext: p must be >= 1");
  if (m < 1) throw DomainError("BlythContext: m must be >= 1");
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("BlythContext: c must be positive");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("BlythContext: kappa must be >= 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("BlythContext: eps must be positive");
}

Vec mu_kappa(std::span<const double> x, double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("mu_kappa: kappa must be >= 0");
  Vec out(x.begin(), x.end());
  for (auto& v : out) v /= (1.0 + kappa);
  return out;
}

double beta_kappa(const Observation& obs, double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("beta_kappa: kappa must be >= 0");
  if (!(obs.s > 0.0)) throw DomainError("beta_kappa: s must be positive");
  return 0.5 * (obs.s + (kappa / (1.0 + kappa)) * squared_norm(obs.x));
}

double log_big_K(const BlythContext& ctx) {
  ctx.validate();
  if (ctx.kappa == 0.0) throw DomainError("big_K: diverges at kappa = 0");
  return std::log(2.0 / ctx.p) + specfun::log_gamma(0.5 * ctx.m) +
         0.5 * ctx.p * (std::log(2.0 * std::numbers::pi / ctx.eps) + std::log1p(ctx.kappa) - std::log(ctx.kappa));
}

double big_K(const BlythContext& ctx) { return std::exp(log_big_K(ctx)); }

double r_kappa(double t, double lambda, const BlythContext& ctx) {
  check_lambda(lambda);
  if (!(t >= 0.0)) throw DomainError("r_kappa: t must be >= 0");
  const double prec = (1.0 + ctx.kappa) * lambda;
  return std::exp(0.5 * ctx.p * (std::log(prec) - kLog2Pi) - 0.5 * prec * t);
}

double cond_mu_density(const BlythContext& ctx, const Observation& obs, double lambda, std::span<const double> mu) {
  obs.validate(ctx.p);
  const Vec center = mu_kappa(obs.x, ctx.kappa);
  return r_kappa(squared_distance(mu, center), lambda, ctx);
}

double lambda_posterior_density(const BlythContext& ctx, const Observation& obs, double lambda) {
  ctx.validate();
  obs.validate(ctx.p);
  check_lambda(lambda);
  if (!(lambda > ctx.eps)) return 0.0;
  const double b = beta_kappa(obs, ctx.kappa);
  return std::exp(log_lambda_norm(ctx, b) + (0.5 * ctx.m - 1.0) * std::log(lambda) - lambda * b);
}

double mu_posterior_density_at(const BlythContext& ctx, const Observation& obs, double t) {
  ctx.validate();
  obs.validate(ctx.p);
  if (!(t >= 0.0)) throw DomainError("mu_posterior_density: squared distance must be >= 0");
  const double b = beta_kappa(obs, ctx.kappa);
  const double k1 = 1.0 + ctx.kappa;
  const double bb = b + 0.5 * k1 * t;
  const double a = 0.5 * (ctx.m + ctx.p);
  return std::exp(0.5 * ctx.p * (std::log(k1) - kLog2Pi) + log_lambda_norm(ctx, b) +
                  specfun::log_upper_incomplete_gamma(a, ctx.eps * bb) - a * std::log(bb));
}

double mu_posterior_density(const BlythContext& ctx, const Observation& obs, std::span<const double> mu) {
  if (static_cast<int>(mu.size()) != ctx.p) throw DomainError("mu_posterior_density: mu must have length p");
  return mu_posterior_density_at(ctx, obs, squared_distance(mu, mu_kappa(obs.x, ctx.kappa)));
}

double q_joint(const BlythContext& ctx, std::span<const double> mu, double lambda) {
  ctx.validate();
  check_lambda(lambda);
  if (static_cast<int>(mu.size()) != ctx.p) throw DomainError("q_joint: mu must have length p");
  if (!(lambda > ctx.eps)) return 0.0;
  return std::exp(specfun::log_gamma(0.5 * ctx.m) + 0.5 * ctx.p * std::log1p(ctx.kappa) - std::log(lambda) -
                  0.5 * lambda * ctx.kappa * squared_norm(mu));
}

double q_obs(const BlythContext& ctx, const Observation& obs) {
  ctx.validate();
  obs.validate(ctx.p);
  const double b = beta_kappa(obs, ctx.kappa);
  return std::exp((0.5 * ctx.m - 1.0) * std::log(obs.s) - 0.5 * ctx.m * std::log(2.0 * b) +
                  specfun::log_upper_incomplete_gamma(0.5 * ctx.m, ctx.eps * b));
}

double p_obs(const BlythContext& ctx, const Observation& obs) {
  const double lk = log_big_K(ctx);
  return std::exp(std::log(q_obs(ctx, obs)) - lk);
}

double likelihood(int p, int m, const Observation& obs, const LocationScale& point) {
  obs.validate(p);
  point.validate(p);
  if (m < 1) throw DomainError("likelihood: m must be >= 1");
  const double lam = point.lambda;
  const double d2 = squared_distance(obs.x, point.mu);
  const double log_x = 0.5 * p * (std::log(lam) - kLog2Pi) - 0.5 * lam * d2;
  const double log_s = 0.5 * m * std::log(lam) + (0.5 * m - 1.0) * std::log(obs.s) - 0.5 * lam * obs.s -
                       0.5 * m * std::numbers::ln2 - specfun::log_gamma(0.5 * m);
  return std::exp(log_x + log_s);
}

ntg::NtGParams prior_params(const BlythContext& ctx) {
  ctx.validate();
  if (ctx.kappa == 0.0) throw DomainError("prior_params: kappa = 0 has no proper prior");
  return ntg::NtGParams::make(ctx.p, Vec(ctx.p, 0.0), ctx.kappa, -0.5 * ctx.p, 0.0, ctx.eps);
}

Observation sample_obs_given(const LocationScale& point, int p, int m, rng::Stream& stream) {
  point.validate(p);
  if (m < 1) throw DomainError("sample_obs_given: m must be >= 1");
  Observation obs;
  const double sd = 1.0 / std::sqrt(point.lambda);
  obs.x.resize(p);
  for (int j = 0; j < p; ++j) obs.x[j] = point.mu[j] + sd * stream.normal();
  obs.s = stream.chi_square_sum(m) / point.lambda;
  return obs;
}

}  // namespace ntglab::blyth
