#pragma once

#include "ntglab/core.hpp"
#include "ntglab/model.hpp"
#include "ntglab/rng.hpp"

namespace ntglab::ntg {

/// Which of the three propriety conditions a parameter set satisfies.
enum class Regime {
  untruncated,         // eps0 = 0, alpha0 > 0, beta0 > 0
  truncated,           // eps0 > 0, beta0 > 0
  truncated_power,     // eps0 > 0, alpha0 < 0, beta0 = 0
};

/// Hyper-parameters of the normal-truncated-gamma prior with density
///   C kappa0^(p/2) lambda^(alpha0 + p/2 - 1)
///     exp(-lambda (beta0 + kappa0 |mu - mu0|^2 / 2))  for lambda > eps0.
struct NtGParams {
  int p = 1;
  Vec mu0;
  double kappa0 = 1.0;
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double eps0 = 0.0;

  /// Validated construction; throws DomainError.
  static NtGParams make(int p, Vec mu0, double kappa0, double alpha0, double beta0, double eps0);

  void validate() const;
  Regime regime() const;
};

double log_normalizing_constant(const NtGParams& params);
/// C = (2 pi)^(-p/2) beta0^alpha0 / Gamma(alpha0, beta0 eps0) if beta0 > 0,
/// and (2 pi)^(-p/2) (-alpha0) eps0^(-alpha0) if beta0 = 0.
double normalizing_constant(const NtGParams& params);

double prior_density(const NtGParams& params, const LocationScale& point);
/// -inf where the density vanishes.
double log_prior_density(const NtGParams& params, const LocationScale& point);

/// Conjugate update with an observation whose s has m degrees of freedom.
NtGParams posterior_update(const NtGParams& params, const Observation& obs, int m);

/// Marginal density of mu. Returns +inf at mu = mu0 when beta0 = 0 and
/// alpha0 + p/2 >= 0, where the density has an integrable singularity.
double marginal_mu_density(const NtGParams& params, std::span<const double> mu);
double marginal_lambda_density(const NtGParams& params, double lambda);
double marginal_obs_density(const NtGParams& params, int m, const Observation& obs);
double log_marginal_obs_density(const NtGParams& params, int m, const Observation& obs);

/// Draws lambda from its marginal, then mu | lambda ~ N(mu0, (kappa0 lambda)^-1 I).
LocationScale sample_prior(const NtGParams& params, rng::Stream& stream);
double sample_lambda(const NtGParams& params, rng::Stream& stream);

}  // namespace ntglab::ntg
