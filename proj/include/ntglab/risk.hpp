#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ntglab/blyth.hpp"
#include "ntglab/core.hpp"
#include "ntglab/model.hpp"
#include "ntglab/numint.hpp"

namespace ntglab::risk {

using EvalFn = std::function<double(std::span<const double> x, double s, std::span<const double> mu, double lambda)>;
using MeasureFn = std::function<double(std::span<const double> x, double s, double lambda)>;

/// Where a procedure lives in mu-space for given (x, s): a centre and
/// ascending radii (from 0, possibly ending in +inf) across which eval may
/// jump. breaks[1] serves as the procedure's length scale.
struct Geometry {
  Vec center;
  std::vector<double> breaks;
};
using GeometryFn = std::function<Geometry(std::span<const double> x, double s)>;

/// A possibly randomised confidence procedure (x, s, mu, lambda) -> [0, 1].
struct Procedure {
  std::string label;
  EvalFn eval;
  /// Lebesgue measure of eval(x, s, ., lambda); empty if not known in closed form.
  MeasureFn closed_form_measure;
  GeometryFn geometry;
  /// eval ignores lambda.
  bool lambda_free = true;
};

/// Volume of the p-ball of squared radius r2.
double ball_volume(int p, double r2);

/// The ball |x / denom - mu|^2 < c s / m.
Procedure ball(const blyth::BlythContext& ctx, double denom, std::string label);
Procedure phi0(const blyth::BlythContext& ctx);
Procedure phi_kappa(const blyth::BlythContext& ctx);
/// eval = value on |x - mu|^2 < radius2 (everywhere for radius2 = inf), else 0.
Procedure constant_ball(int p, double value, double radius2, std::string label);

enum class Perturbation { radius_jitter, center_offset, boundary_band };
const char* to_string(Perturbation kind) noexcept;

/// A competitor to `proc`, built by transforming mu about the procedure's
/// centre:
///   radius_jitter  - set scaled by 1 +- [0.05, 0.30];
///   center_offset  - set shifted by [0.1, 0.5] times its length scale;
///   boundary_band  - 1 inside the set shrunk by b, 1/2 out to the set grown
///                    by b, b in [0.05, 0.30].
Procedure perturb(const Procedure& proc, Perturbation kind, std::uint64_t seed);
/// As above with the kind drawn from the seed.
Procedure perturb(const Procedure& proc, std::uint64_t seed);

/// Integral of eval(x, s, ., lambda) over mu; closed form when available.
EstimateWithError measure(const Procedure& proc, std::span<const double> x, double s, double lambda,
                          const Tolerance& tol = numint::kDefaultQuadTol);

/// Monte Carlo estimate of E[eval(x, s, mu, lambda)] under (mu, lambda).
EstimateWithError coverage(const Procedure& proc, const LocationScale& point, const blyth::BlythContext& ctx,
                           const numint::McSpec& spec);

/// r_kappa(c s / m | lambda) * measure - eval.
double loss(const Procedure& proc, const blyth::BlythContext& ctx, std::span<const double> x, double s,
            std::span<const double> mu, double lambda);

/// Posterior expected loss given (x, s).
///
/// For lambda-free procedures this is the single integral of
/// eval(mu) (w - pi(mu | x, s)), where w = E[r_kappa(c s / m | lambda) | x, s]
/// equals the mu posterior density at squared distance c s / m. Otherwise the
/// lambda integral is taken outside a mu integral for every lambda.
EstimateWithError posterior_risk(const Procedure& proc, const blyth::BlythContext& ctx, const Observation& obs,
                                 const Tolerance& tol = numint::kDefaultQuadTol);
/// The nested form, usable for any procedure.
EstimateWithError posterior_risk_nested(const Procedure& proc, const blyth::BlythContext& ctx, const Observation& obs,
                                        const Tolerance& tol = numint::kDefaultQuadTol);

/// Bayes risk under the proper prior (kappa > 0): Monte Carlo over
/// (mu, lambda) from the prior and (x, s) from the model, averaging the loss.
EstimateWithError bayes_risk(const Procedure& proc, const blyth::BlythContext& ctx, const numint::McSpec& spec);
/// Bayes risks of two procedures on common draws; difference = second - first.
numint::PairedEstimate bayes_risk_paired(const Procedure& first, const Procedure& second,
                                         const blyth::BlythContext& ctx, const numint::McSpec& spec);

/// F_{p,m}(c (1 + kappa) / p) - F_{p,m}(c / p).
double risk_difference_closed(int p, int m, double c, double kappa);
inline double risk_difference_closed(const blyth::BlythContext& ctx) {
  return risk_difference_closed(ctx.p, ctx.m, ctx.c, ctx.kappa);
}

/// Paired Monte Carlo estimate of coverage(phi_kappa) - coverage(phi0) under
/// the prior; first/second are the two prior coverages. Exactly zero at
/// kappa = 0.
numint::PairedEstimate risk_difference_mc(const blyth::BlythContext& ctx, const numint::McSpec& spec);

struct ScalingRow {
  double kappa = 0.0;
  double big_k = 0.0;
  double delta = 0.0;
  double k_times_delta = 0.0;
};
std::vector<ScalingRow> blyth_scaling(int p, int m, double c, double eps, const std::vector<double>& kappa_grid);

/// c such that phi0 has coverage `level`: p F^{-1}_{p,m}(level).
double radius_constant(int p, int m, double level);

struct CoveragePoint {
  LocationScale point;
  EstimateWithError phi0;
  EstimateWithError phi_kappa;
};

struct RiskReport {
  blyth::BlythContext context;
  std::string first_label;
  std::string second_label;
  std::vector<CoveragePoint> coverage;
  /// Bayes risk of phi_kappa; absent (n_evals = 0) when kappa = 0.
  EstimateWithError bayes_risk;
  EstimateWithError risk_difference_mc;
  double risk_difference_closed = 0.0;
  /// K * closed difference; 0 when kappa = 0.
  double k_scaled_difference = 0.0;
};

RiskReport make_report(const blyth::BlythContext& ctx, const std::vector<LocationScale>& grid,
                       const numint::McSpec& spec);

}  // namespace ntglab::risk
