#pragma once

#include <cstdint>
#include <vector>

#include "ntglab/core.hpp"
#include "ntglab/numint.hpp"

namespace ntglab::numint {

struct NumericVsClosed {
  EstimateWithError numeric;
  double closed = 0.0;
};

/// Integral over (0, inf) x R^p of t^alpha |z|^(2 beta) Gamma(gamma, t + |z|^2)
/// / (t + |z|^2)^gamma, evaluated in the spherical coordinates of
/// spherical_map, next to its closed form
///   pi^(p/2) / (alpha + beta - gamma + 1 + p/2) * Gamma(alpha+1) Gamma(beta+p/2) / Gamma(p/2).
/// Requires alpha + beta - gamma + 1 + p/2 > 0, alpha + beta + 1 + p/2 > 0,
/// alpha > -1 and beta + p/2 > 0.
NumericVsClosed lemma_bigint_check(int p, double alpha, double beta, double gamma,
                                   const Tolerance& tol = kDefaultQuadTol);

/// The same integrand family restricted to the cone |z|^2 delta > t, with
/// alpha = gamma - p/2 and beta = 0, rescaled by delta^((p-2)/2 - gamma).
struct LemmaDRow {
  double delta = 0.0;
  EstimateWithError ratio;
  double limit = 0.0;
};

inline const std::vector<double> kDefaultDeltaGrid{1e-1, 1e-2, 1e-3};

/// One row per delta; limit is 2 pi^(p/2) / (2 gamma + 2 - p) * Gamma(gamma+1) / Gamma(p/2).
/// Requires gamma > (p-2)/2 and gamma > -1; delta must be positive and decreasing.
std::vector<LemmaDRow> lemma_d_check(int p, double gamma, const std::vector<double>& delta_grid = kDefaultDeltaGrid,
                                     const Tolerance& tol = kDefaultQuadTol);

/// Monte Carlo estimate of E[s^(p/2)] when (mu, lambda) is drawn from
/// NtG(p, 0, kappa, -p/2, 0, eps) and s / sigma^2 ~ chi^2_m, against
///   (1/2) (eps/2)^(-p/2) Gamma((m+p)/2) / Gamma(m/2).
NumericVsClosed lemma_smoments_check(int p, int m, double kappa, double eps, const McSpec& spec);

/// Closed form used by lemma_smoments_check.
double smoments_closed(int p, int m, double eps);

}  // namespace ntglab::numint
