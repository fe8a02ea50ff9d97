#include "ntglab/risk.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ntglab/ntg.hpp"
#include "ntglab/simd.hpp"
#include "ntglab/specfun.hpp"

namespace ntglab::risk {

namespace {

constexpr double kInf = numint::kInf;

struct Draw {
  LocationScale point;
  Observation obs;
};

Draw draw_joint(const ntg::NtGParams& prior, int m, rng::Stream& stream) {
  Draw d;
  d.point = ntg::sample_prior(prior, stream);
  d.obs = blyth::sample_obs_given(d.point, prior.p, m, stream);
  return d;
}

void require_dim(std::span<const double> v, int p, const char* what) {
  if (static_cast<int>(v.size()) != p) throw DomainError(std::string(what) + ": vector must have length p");
}

// mu mapped so that the set of `base`, scaled by f about its centre g, is
// tested: y = g + (mu - g) / f.
Vec scaled_about(std::span<const double> g, std::span<const double> mu, double f) {
  Vec y(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) y[j] = g[j] + (mu[j] - g[j]) / f;
  return y;
}

std::vector<double> scaled_breaks(const std::vector<double>& br, double f) {
  std::vector<double> out(br);
  for (auto& b : out) b *= f;
  return out;
}

numint::Moments bernoulli_moments(std::int64_t hits, std::size_t n) {
  numint::Moments mo;
  const double nn = static_cast<double>(n);
  const double k = static_cast<double>(hits);
  mo.n = n;
  mo.mean = k / nn;
  mo.m2 = k * (nn - k) / nn;
  return mo;
}

}  // namespace

double ball_volume(int p, double r2) {
  if (p < 1) throw DomainError("ball_volume: p must be >= 1");
  if (!(r2 >= 0.0)) throw DomainError("ball_volume: squared radius must be >= 0");
  if (r2 == 0.0) return 0.0;
  const double half_p = 0.5 * p;
  return std::exp(half_p * std::log(std::numbers::pi * r2) - specfun::log_gamma(half_p + 1.0));
}

Procedure ball(const blyth::BlythContext& ctx, double denom, std::string label) {
  ctx.validate();
  if (!(denom > 0.0)) throw DomainError("ball: denominator must be positive");
  const int p = ctx.p;
  const double scale = ctx.c / ctx.m;
  Procedure proc;
  proc.label = std::move(label);
  // Same arithmetic as the paired SIMD kernel, so both agree on every draw.
  proc.eval = [p, scale, denom](std::span<const double> x, double s, std::span<const double> mu, double) {
    require_dim(x, p, "ball");
    require_dim(mu, p, "ball");
    double d = 0.0;
    for (int j = 0; j < p; ++j) {
      const double a = x[j] / denom - mu[j];
      d = d + a * a;
    }
    return d < scale * s ? 1.0 : 0.0;
  };
  proc.closed_form_measure = [p, scale](std::span<const double>, double s, double) {
    return ball_volume(p, scale * s);
  };
  proc.geometry = [scale, denom](std::span<const double> x, double s) {
    Geometry g;
    g.center.assign(x.begin(), x.end());
    for (auto& v : g.center) v /= denom;
    g.breaks = {0.0, std::sqrt(scale * s), kInf};
    return g;
  };
  return proc;
}

Procedure phi0(const blyth::BlythContext& ctx) { return ball(ctx, 1.0, "phi0"); }

Procedure phi_kappa(const blyth::BlythContext& ctx) { return ball(ctx, 1.0 + ctx.kappa, "phi_kappa"); }

Procedure constant_ball(int p, double value, double radius2, std::string label) {
  if (p < 1) throw DomainError("constant_ball: p must be >= 1");
  if (!(value >= 0.0 && value <= 1.0)) throw DomainError("constant_ball: value must lie in [0, 1]");
  if (!(radius2 > 0.0)) throw DomainError("constant_ball: squared radius must be positive");
  Procedure proc;
  proc.label = std::move(label);
  proc.eval = [p, value, radius2](std::span<const double> x, double, std::span<const double> mu, double) {
    require_dim(mu, p, "constant_ball");
    if (std::isinf(radius2)) return value;
    return squared_distance(x, mu) < radius2 ? value : 0.0;
  };
  proc.geometry = [radius2](std::span<const double> x, double) {
    Geometry g;
    g.center.assign(x.begin(), x.end());
    g.breaks = {0.0, std::isinf(radius2) ? 1.0 : std::sqrt(radius2), kInf};
    return g;
  };
  return proc;
}

const char* to_string(Perturbation kind) noexcept {
  switch (kind) {
    case Perturbation::radius_jitter:
      return "radius_jitter";
    case Perturbation::center_offset:
      return "center_offset";
    case Perturbation::boundary_band:
      return "boundary_band";
  }
  return "?";
}

Procedure perturb(const Procedure& proc, Perturbation kind, std::uint64_t seed) {
  if (!proc.eval || !proc.geometry) throw DomainError("perturb: procedure needs eval and geometry");
  rng::Stream gen(seed, 0x5eed);
  Procedure out = proc;
  const auto base = proc.eval;
  const auto geo = proc.geometry;
  const auto cm = proc.closed_form_measure;
  switch (kind) {
    case Perturbation::radius_jitter: {
      const double sign = gen.uniform_open() < 0.5 ? -1.0 : 1.0;
      const double f = 1.0 + sign * (0.05 + 0.25 * gen.uniform_open());
      out.label = proc.label + "/radius_jitter(" + std::to_string(f) + ")";
      out.eval = [base, geo, f](std::span<const double> x, double s, std::span<const double> mu, double lam) {
        const auto g = geo(x, s);
        return base(x, s, scaled_about(g.center, mu, f), lam);
      };
      out.geometry = [geo, f](std::span<const double> x, double s) {
        auto g = geo(x, s);
        g.breaks = scaled_breaks(g.breaks, f);
        return g;
      };
      if (cm)
        out.closed_form_measure = [cm, f](std::span<const double> x, double s, double lam) {
          return cm(x, s, lam) * std::pow(f, static_cast<double>(x.size()));
        };
      break;
    }
    case Perturbation::center_offset: {
      const double u = 0.1 + 0.4 * gen.uniform_open();
      // Direction drawn once; the first p components are used.
      std::array<double, 8> dir{};
      for (auto& d : dir) d = gen.normal();
      out.label = proc.label + "/center_offset(" + std::to_string(u) + ")";
      auto shift = [dir, u](std::size_t p, double length) {
        Vec v(p);
        double norm2 = 0.0;
        for (std::size_t j = 0; j < p; ++j) norm2 += dir[j] * dir[j];
        const double k = u * length / std::sqrt(norm2);
        for (std::size_t j = 0; j < p; ++j) v[j] = k * dir[j];
        return v;
      };
      out.eval = [base, geo, shift](std::span<const double> x, double s, std::span<const double> mu, double lam) {
        const auto g = geo(x, s);
        const Vec v = shift(mu.size(), g.breaks[1]);
        Vec y(mu.begin(), mu.end());
        for (std::size_t j = 0; j < y.size(); ++j) y[j] -= v[j];
        return base(x, s, y, lam);
      };
      out.geometry = [geo, shift](std::span<const double> x, double s) {
        auto g = geo(x, s);
        const Vec v = shift(g.center.size(), g.breaks[1]);
        for (std::size_t j = 0; j < v.size(); ++j) g.center[j] += v[j];
        return g;
      };
      break;
    }
    case Perturbation::boundary_band: {
      const double b = 0.05 + 0.25 * gen.uniform_open();
      out.label = proc.label + "/boundary_band(" + std::to_string(b) + ")";
      out.eval = [base, geo, b](std::span<const double> x, double s, std::span<const double> mu, double lam) {
        const auto g = geo(x, s);
        return 0.5 * (base(x, s, scaled_about(g.center, mu, 1.0 - b), lam) +
                      base(x, s, scaled_about(g.center, mu, 1.0 + b), lam));
      };
      out.geometry = [geo, b](std::span<const double> x, double s) {
        auto g = geo(x, s);
        auto lo = scaled_breaks(g.breaks, 1.0 - b);
        const auto hi = scaled_breaks(g.breaks, 1.0 + b);
        lo.insert(lo.end(), hi.begin(), hi.end());
        std::sort(lo.begin(), lo.end());
        lo.erase(std::unique(lo.begin(), lo.end()), lo.end());
        g.breaks = std::move(lo);
        return g;
      };
      if (cm)
        out.closed_form_measure = [cm, b](std::span<const double> x, double s, double lam) {
          const double p = static_cast<double>(x.size());
          return 0.5 * (std::pow(1.0 - b, p) + std::pow(1.0 + b, p)) * cm(x, s, lam);
        };
      break;
    }
  }
  return out;
}

Procedure perturb(const Procedure& proc, std::uint64_t seed) {
  rng::Stream gen(seed, 0xfa111);
  const auto pick = static_cast<int>(3.0 * gen.uniform_open());
  return perturb(proc, static_cast<Perturbation>(std::min(pick, 2)), seed);
}

EstimateWithError measure(const Procedure& proc, std::span<const double> x, double s, double lambda,
                          const Tolerance& tol) {
  if (!(s > 0.0)) throw DomainError("measure: s must be positive");
  if (proc.closed_form_measure) return {proc.closed_form_measure(x, s, lambda), 0.0, 1, Method::quadrature};
  const auto g = proc.geometry(x, s);
  return numint::integrate_spherical(
      [&](std::span<const double> mu) { return proc.eval(x, s, mu, lambda); }, g.center, g.breaks, tol);
}

EstimateWithError coverage(const Procedure& proc, const LocationScale& point, const blyth::BlythContext& ctx,
                           const numint::McSpec& spec) {
  ctx.validate();
  point.validate(ctx.p);
  auto sampler = [&](rng::Stream& stream) { return blyth::sample_obs_given(point, ctx.p, ctx.m, stream); };
  auto integrand = [&](const Observation& obs) { return proc.eval(obs.x, obs.s, point.mu, point.lambda); };
  return numint::mc_estimate(sampler, integrand, spec);
}

double loss(const Procedure& proc, const blyth::BlythContext& ctx, std::span<const double> x, double s,
            std::span<const double> mu, double lambda) {
  const double r = blyth::r_kappa(ctx.c * s / ctx.m, lambda, ctx);
  return r * measure(proc, x, s, lambda).value - proc.eval(x, s, mu, lambda);
}

EstimateWithError posterior_risk(const Procedure& proc, const blyth::BlythContext& ctx, const Observation& obs,
                                 const Tolerance& tol) {
  if (!proc.lambda_free) return posterior_risk_nested(proc, ctx, obs, tol);
  ctx.validate();
  obs.validate(ctx.p);
  const double w = blyth::mu_posterior_density_at(ctx, obs, ctx.c * obs.s / ctx.m);
  const auto g = proc.geometry(obs.x, obs.s);
  return numint::integrate_spherical(
      [&](std::span<const double> mu) {
        const double phi = proc.eval(obs.x, obs.s, mu, 1.0);
        return phi == 0.0 ? 0.0 : phi * (w - blyth::mu_posterior_density(ctx, obs, mu));
      },
      g.center, g.breaks, tol);
}

EstimateWithError posterior_risk_nested(const Procedure& proc, const blyth::BlythContext& ctx, const Observation& obs,
                                        const Tolerance& tol) {
  ctx.validate();
  obs.validate(ctx.p);
  Tolerance inner = tol;
  inner.rel = std::max(0.1 * tol.rel, 1e-13);
  inner.abs = 0.1 * tol.abs;
  const auto g = proc.geometry(obs.x, obs.s);
  const double t = ctx.c * obs.s / ctx.m;
  double inner_err = 0.0;
  auto at_lambda = [&](double lam) {
    const double post = blyth::lambda_posterior_density(ctx, obs, lam);
    if (post == 0.0) return 0.0;
    const auto vol = measure(proc, obs.x, obs.s, lam, inner);
    const auto hit = numint::integrate_spherical(
        [&](std::span<const double> mu) {
          const double phi = proc.eval(obs.x, obs.s, mu, lam);
          return phi == 0.0 ? 0.0 : phi * blyth::cond_mu_density(ctx, obs, lam, mu);
        },
        g.center, g.breaks, inner);
    inner_err = std::max(inner_err, post * (vol.error + hit.error));
    return post * (blyth::r_kappa(t, lam, ctx) * vol.value - hit.value);
  };
  const double b = blyth::beta_kappa(obs, ctx.kappa);
  const double k = 0.5 * ctx.m / b;
  const std::vector<double> br{ctx.eps, ctx.eps + 0.5 * k, ctx.eps + 2.0 * k, ctx.eps + 8.0 * k, kInf};
  auto res = numint::integrate_piecewise(at_lambda, br, tol);
  res.error += inner_err;
  return res;
}

EstimateWithError bayes_risk(const Procedure& proc, const blyth::BlythContext& ctx, const numint::McSpec& spec) {
  const auto prior = blyth::prior_params(ctx);
  auto sampler = [&](rng::Stream& stream) { return draw_joint(prior, ctx.m, stream); };
  auto integrand = [&](const Draw& d) { return loss(proc, ctx, d.obs.x, d.obs.s, d.point.mu, d.point.lambda); };
  return numint::mc_estimate(sampler, integrand, spec);
}

numint::PairedEstimate bayes_risk_paired(const Procedure& first, const Procedure& second,
                                         const blyth::BlythContext& ctx, const numint::McSpec& spec) {
  const auto prior = blyth::prior_params(ctx);
  auto sampler = [&](rng::Stream& stream) { return draw_joint(prior, ctx.m, stream); };
  auto f = [&](const Draw& d) { return loss(first, ctx, d.obs.x, d.obs.s, d.point.mu, d.point.lambda); };
  auto g = [&](const Draw& d) { return loss(second, ctx, d.obs.x, d.obs.s, d.point.mu, d.point.lambda); };
  return numint::mc_paired(sampler, f, g, spec);
}

double risk_difference_closed(int p, int m, double c, double kappa) {
  if (p < 1 || m < 1) throw DomainError("risk_difference_closed: p and m must be >= 1");
  if (!(c > 0.0)) throw DomainError("risk_difference_closed: c must be positive");
  if (!(kappa >= 0.0)) throw DomainError("risk_difference_closed: kappa must be >= 0");
  if (kappa == 0.0) return 0.0;
  return specfun::f_cdf(p, m, c * (1.0 + kappa) / p) - specfun::f_cdf(p, m, c / p);
}

numint::PairedEstimate risk_difference_mc(const blyth::BlythContext& ctx, const numint::McSpec& spec) {
  ctx.validate();
  spec.validate();
  const auto n = static_cast<std::int64_t>(spec.n);
  if (ctx.kappa == 0.0) {
    // Both procedures coincide; each covers with probability F_{p,m}(c/p)
    // at every parameter value.
    const double cov = specfun::f_cdf(ctx.p, ctx.m, ctx.c / ctx.p);
    return {{cov, 0.0, n, Method::monte_carlo},
            {cov, 0.0, n, Method::monte_carlo},
            {0.0, 0.0, n, Method::monte_carlo}};
  }
  const auto prior = blyth::prior_params(ctx);
  const int p = ctx.p;
  const double scale = ctx.c / ctx.m;
  const double denom = 1.0 + ctx.kappa;
  auto res = numint::run_blocks<3>(spec, [&](rng::Stream& stream, std::uint64_t count) {
    const std::size_t nb = count;
    std::vector<double> x(nb * p), mu(nb * p), r2(nb);
    for (std::size_t i = 0; i < nb; ++i) {
      const auto d = draw_joint(prior, ctx.m, stream);
      for (int j = 0; j < p; ++j) {
        x[j * nb + i] = d.obs.x[j];
        mu[j * nb + i] = d.point.mu[j];
      }
      r2[i] = scale * d.obs.s;
    }
    const simd::BallBatch batch{p, nb, x, mu, r2};
    const auto counts = simd::paired_ball_counts(batch, 1.0, denom);
    numint::Moments diff;
    const double nn = static_cast<double>(nb);
    const double sum = static_cast<double>(counts.only_second - counts.only_first);
    const double sumsq = static_cast<double>(counts.only_second + counts.only_first);
    diff.n = nb;
    diff.mean = sum / nn;
    diff.m2 = std::max(0.0, sumsq - sum * sum / nn);
    return std::array<numint::Moments, 3>{bernoulli_moments(counts.in_first, nb), bernoulli_moments(counts.in_second, nb),
                                  diff};
  });
  return {res[0].estimate(), res[1].estimate(), res[2].estimate()};
}

std::vector<ScalingRow> blyth_scaling(int p, int m, double c, double eps, const std::vector<double>& kappa_grid) {
  if (kappa_grid.empty()) throw DomainError("blyth_scaling: empty kappa grid");
  std::vector<ScalingRow> rows;
  rows.reserve(kappa_grid.size());
  for (double kappa : kappa_grid) {
    if (!(kappa > 0.0)) throw DomainError("blyth_scaling: kappa must be positive");
    const auto ctx = blyth::BlythContext::make(p, m, c, kappa, eps);
    ScalingRow row;
    row.kappa = kappa;
    row.big_k = blyth::big_K(ctx);
    row.delta = risk_difference_closed(ctx);
    row.k_times_delta = row.big_k * row.delta;
    rows.push_back(row);
  }
  return rows;
}

double radius_constant(int p, int m, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("radius_constant: level must lie in (0, 1)");
  return p * specfun::f_quantile(p, m, level);
}

RiskReport make_report(const blyth::BlythContext& ctx, const std::vector<LocationScale>& grid,
                       const numint::McSpec& spec) {
  ctx.validate();
  RiskReport rep;
  rep.context = ctx;
  const auto a = phi0(ctx);
  const auto b = phi_kappa(ctx);
  rep.first_label = a.label;
  rep.second_label = b.label;
  for (const auto& pt : grid) rep.coverage.push_back({pt, coverage(a, pt, ctx, spec), coverage(b, pt, ctx, spec)});
  const auto diff = risk_difference_mc(ctx, spec);
  rep.risk_difference_mc = diff.difference;
  rep.risk_difference_closed = risk_difference_closed(ctx);
  if (ctx.kappa > 0.0) {
    rep.bayes_risk = bayes_risk(b, ctx, spec);
    rep.k_scaled_difference = blyth::big_K(ctx) * rep.risk_difference_closed;
  } else {
    rep.bayes_risk = {0.0, 0.0, 0, Method::monte_carlo};
  }
  return rep;
}

}  // namespace ntglab::risk
