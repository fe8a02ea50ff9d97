#pragma once

// Numeric cross-checks of the closed forms against independent quadrature
// and Monte Carlo, shared by the CLI and the acceptance runner.

#include <string>
#include <vector>

#include "ntglab/core.hpp"
#include "ntglab/model.hpp"
#include "ntglab/ntg.hpp"
#include "ntglab/numint.hpp"
#include "ntglab/rng.hpp"

namespace ntglab::checks {

struct CheckResult {
  std::string name;
  double expected = 0.0;
  double observed = 0.0;
  /// |observed - expected|, relative where `relative` is set.
  double error = 0.0;
  double tolerance = 0.0;
  bool relative = false;
  bool pass = false;
};

CheckResult compare(std::string name, double expected, double observed, double tolerance, bool relative);

/// NtG parameters in ranges where nested quadrature is well conditioned; the
/// regime (untruncated, truncated, truncated power) is drawn as well.
ntg::NtGParams random_params(int p, rng::Stream& gen);
Observation random_observation(const ntg::NtGParams& params, rng::Stream& gen);

/// Integral over (mu, lambda) of likelihood * prior.
double evidence_by_quadrature(const ntg::NtGParams& params, int m, const Observation& obs, const Tolerance& tol);
/// Integral over lambda of the prior density at mu.
double mu_marginal_by_quadrature(const ntg::NtGParams& params, std::span<const double> mu, const Tolerance& tol);
/// Integral over mu of the prior density at lambda.
double lambda_marginal_by_quadrature(const ntg::NtGParams& params, double lambda, const Tolerance& tol);

double total_mu_marginal(const ntg::NtGParams& params, const Tolerance& tol);
double total_lambda_marginal(const ntg::NtGParams& params, const Tolerance& tol);
/// Integral of the observation marginal over (x, s), p <= 2.
double total_obs_marginal(const ntg::NtGParams& params, int m, const Tolerance& tol);

struct SuiteOptions {
  std::uint64_t seed = 1;
  int pairs = 5;
  int probes = 20;
  Tolerance quad{1e-9, 1e-14, 4000};
  double rel_tol = 1e-5;
};

/// Updated density against likelihood * prior / evidence at probe points;
/// one result per (params, observation) pair holding the worst probe.
std::vector<CheckResult> conjugacy(const SuiteOptions& opt);
/// The three marginals against quadrature of the joint, and their totals.
std::vector<CheckResult> marginals(const SuiteOptions& opt);
/// q_joint = K prior and q_obs = K marginal at random points; worst per kappa.
std::vector<CheckResult> q_identity(std::uint64_t seed, int points, const std::vector<double>& kappas,
                                    double rel_tol = 1e-10);

}  // namespace ntglab::checks
