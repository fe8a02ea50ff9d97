#pragma once

#include "ntglab/core.hpp"
#include "ntglab/model.hpp"
#include "ntglab/ntg.hpp"
#include "ntglab/rng.hpp"

namespace ntglab::blyth {

/// The experiment with prior NtG(p, 0, kappa, -p/2, 0, eps) and the ball
/// procedures of radius^2 c s / m. kappa = 0 selects the improper limit.
struct BlythContext {
  int p = 1;
  int m = 1;
  double c = 1.0;
  double kappa = 0.0;
  double eps = 1.0;

  static BlythContext make(int p, int m, double c, double kappa, double eps);
  void validate() const;
};

/// x / (1 + kappa).
Vec mu_kappa(std::span<const double> x, double kappa);
/// (s + kappa / (1 + kappa) |x|^2) / 2.
double beta_kappa(const Observation& obs, double kappa);

/// (2/p) Gamma(m/2) ((2 pi / eps)(1 + kappa) / kappa)^(p/2); kappa = 0 is a
/// domain error.
double big_K(const BlythContext& ctx);
double log_big_K(const BlythContext& ctx);

/// N(mu_kappa, ((1+kappa) lambda)^-1 I_p) density at squared distance t.
double r_kappa(double t, double lambda, const BlythContext& ctx);

/// Conditional density of mu given (x, s, lambda); defined for every lambda > 0.
double cond_mu_density(const BlythContext& ctx, const Observation& obs, double lambda, std::span<const double> mu);
double lambda_posterior_density(const BlythContext& ctx, const Observation& obs, double lambda);
double mu_posterior_density(const BlythContext& ctx, const Observation& obs, std::span<const double> mu);
/// mu_posterior_density as a function of the squared distance to mu_kappa.
double mu_posterior_density_at(const BlythContext& ctx, const Observation& obs, double t);

/// Un-normed prior q = K * prior; at kappa = 0 the sigma-finite limit.
double q_joint(const BlythContext& ctx, std::span<const double> mu, double lambda);
/// Un-normed marginal of (x, s).
double q_obs(const BlythContext& ctx, const Observation& obs);
/// Normed marginal of (x, s) = q_obs / K; requires kappa > 0.
double p_obs(const BlythContext& ctx, const Observation& obs);

/// Density of (x, s) given (mu, lambda): N(mu, lambda^-1 I_p) for x times
/// lambda^(m/2) s^(m/2-1) e^(-lambda s / 2) / (2^(m/2) Gamma(m/2)) for s.
double likelihood(int p, int m, const Observation& obs, const LocationScale& point);

/// The proper prior for kappa > 0 as an NtG parameter set.
ntg::NtGParams prior_params(const BlythContext& ctx);

/// x ~ N(mu, lambda^-1 I_p), s = chi^2_m / lambda.
Observation sample_obs_given(const LocationScale& point, int p, int m, rng::Stream& stream);

}  // namespace ntglab::blyth
