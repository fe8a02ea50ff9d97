#include "ntglab/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ntglab/blyth.hpp"

namespace ntglab::checks {

namespace {

constexpr double kInf = numint::kInf;

Tolerance tighter(const Tolerance& tol) {
  Tolerance t = tol;
  t.rel = std::max(0.1 * tol.rel, 2e-14);
  t.abs = 0.1 * tol.abs;
  return t;
}

// Spherical integral about `center` with breaks at scale * {1, 4}.
double over_mu(std::span<const double> center, const numint::FnP& g, double scale, const Tolerance& tol) {
  // Offsets this small next to the centre lose digits in center + r * dir.
  Tolerance t = tol;
  if (scale < 1e-5) t.rel = std::max(t.rel, 1e-8);
  const std::vector<double> br{0.0, scale, 4.0 * scale, kInf};
  return numint::integrate_spherical(g, center, br, t).value;
}

double uniform(rng::Stream& gen, double lo, double hi) { return lo + (hi - lo) * gen.uniform_open(); }

std::string describe(const ntg::NtGParams& q) {
  std::ostringstream os;
  os << "p=" << q.p << ",kappa0=" << q.kappa0 << ",alpha0=" << q.alpha0 << ",beta0=" << q.beta0
     << ",eps0=" << q.eps0;
  return os.str();
}

}  // namespace

CheckResult compare(std::string name, double expected, double observed, double tolerance, bool relative) {
  CheckResult r;
  r.name = std::move(name);
  r.expected = expected;
  r.observed = observed;
  r.tolerance = tolerance;
  r.relative = relative;
  const double diff = std::abs(observed - expected);
  r.error = relative ? diff / std::abs(expected) : diff;
  r.pass = std::isfinite(r.error) && r.error <= tolerance;
  return r;
}

ntg::NtGParams random_params(int p, rng::Stream& gen) {
  Vec mu0(p);
  for (auto& v : mu0) v = 0.5 * gen.normal();
  const double kappa = uniform(gen, 0.5, 2.0);
  const int regime = std::min(2, static_cast<int>(3.0 * gen.uniform_open()));
  switch (regime) {
    case 0:
      return ntg::NtGParams::make(p, mu0, kappa, uniform(gen, 0.5, 3.0), uniform(gen, 0.5, 2.0), 0.0);
    case 1:
      return ntg::NtGParams::make(p, mu0, kappa, uniform(gen, -1.5, 2.0), uniform(gen, 0.5, 2.0),
                                  uniform(gen, 0.1, 1.0));
    default:
      return ntg::NtGParams::make(p, mu0, kappa, uniform(gen, -2.0, -0.6), 0.0, uniform(gen, 0.2, 1.0));
  }
}

Observation random_observation(const ntg::NtGParams& params, rng::Stream& gen) {
  Observation obs{params.mu0, uniform(gen, 0.3, 3.0)};
  for (auto& v : obs.x) v += gen.normal();
  return obs;
}

double evidence_by_quadrature(const ntg::NtGParams& params, int m, const Observation& obs, const Tolerance& tol) {
  // The posterior only supplies the integration geometry.
  const auto post = ntg::posterior_update(params, obs, m);
  const auto inner = tighter(tol);
  auto at_lambda = [&](double lam) {
    return over_mu(
        post.mu0,
        [&](std::span<const double> mu) {
          const LocationScale pt{Vec(mu.begin(), mu.end()), lam};
          return blyth::likelihood(params.p, m, obs, pt) * ntg::prior_density(params, pt);
        },
        1.0 / std::sqrt(post.kappa0 * lam), inner);
  };
  const double k = std::max(post.alpha0, 1.0) / post.beta0;
  const double lo = params.eps0;
  const std::vector<double> br{lo, lo + 0.25 * k, lo + k, lo + 3.0 * k, lo + 10.0 * k, kInf};
  return numint::integrate_piecewise(at_lambda, br, tol).value;
}

double mu_marginal_by_quadrature(const ntg::NtGParams& params, std::span<const double> mu, const Tolerance& tol) {
  const LocationScale probe{Vec(mu.begin(), mu.end()), 1.0};
  auto f = [&](double lam) { return ntg::prior_density(params, {probe.mu, lam}); };
  const double lo = params.eps0;
  const std::vector<double> br{lo, lo + 0.5, lo + 2.0, lo + 8.0, kInf};
  return numint::integrate_piecewise(f, br, tol).value;
}

double lambda_marginal_by_quadrature(const ntg::NtGParams& params, double lambda, const Tolerance& tol) {
  return over_mu(
      params.mu0,
      [&](std::span<const double> mu) { return ntg::prior_density(params, {Vec(mu.begin(), mu.end()), lambda}); },
      1.0 / std::sqrt(params.kappa0 * lambda), tol);
}

double total_mu_marginal(const ntg::NtGParams& params, const Tolerance& tol) {
  const double sc = 1.0 / std::sqrt(params.kappa0);
  const std::vector<double> br{0.0, 0.1 * sc, sc, 4.0 * sc, kInf};
  return numint::integrate_spherical([&](std::span<const double> mu) { return ntg::marginal_mu_density(params, mu); },
                                     params.mu0, br, tol)
      .value;
}

double total_lambda_marginal(const ntg::NtGParams& params, const Tolerance& tol) {
  const double lo = params.eps0;
  const std::vector<double> br{lo, lo + 0.5, lo + 2.0, lo + 8.0, kInf};
  return numint::integrate_piecewise([&](double l) { return ntg::marginal_lambda_density(params, l); }, br, tol)
      .value;
}

double total_obs_marginal(const ntg::NtGParams& params, int m, const Tolerance& tol) {
  if (params.p > 2) throw DomainError("total_obs_marginal: p must be 1 or 2");
  const auto inner = tighter(tol);
  // Given s, x is a scale mixture with widths from sqrt(s) up to about
  // 1/sqrt(eps0): geometric radial breaks. Below s = 1e-16 the widths cannot
  // be resolved next to mu0 and the (negligible) mass is dropped.
  auto over_x = [&](double s) {
    if (s < 1e-16) return 0.0;
    const double w = std::sqrt(1.0 + 1.0 / params.kappa0);
    const double top = 8.0 * w * std::max(1.0, std::sqrt(s)) / std::sqrt(std::max(params.eps0, 0.05));
    std::vector<double> br{0.0};
    for (double r = w * std::sqrt(s); r < top; r *= 4.0) br.push_back(r);
    br.push_back(top);
    br.push_back(kInf);
    Tolerance t = inner;
    t.rel = std::max(t.rel, 1e-9);
    return numint::integrate_spherical(
               [&](std::span<const double> x) {
                 return ntg::marginal_obs_density(params, m, {Vec(x.begin(), x.end()), s});
               },
               params.mu0, br, t)
        .value;
  };
  // Near s = 0 the density goes like s^(m/2-1), or s^(-1-alpha0) with a
  // power-law lambda tail (times a log when the two coincide).
  const double lead = params.beta0 == 0.0 ? std::max(std::min(0.5 * m - 1.0, -1.0 - params.alpha0) - 0.1, -0.95)
                                          : 0.5 * m - 1.0;
  return numint::integrate_power_left(over_x, 0.0, 1.0, lead, tol).value +
         numint::integrate_1d(over_x, 1.0, kInf, tol).value;
}

std::vector<CheckResult> conjugacy(const SuiteOptions& opt) {
  rng::Stream gen(opt.seed, 0xc0);
  std::vector<CheckResult> out;
  for (int i = 0; i < opt.pairs; ++i) {
    const int p = 1 + i % 2;
    const int m = 1 + static_cast<int>(5.0 * gen.uniform_open());
    const auto params = random_params(p, gen);
    const auto obs = random_observation(params, gen);
    const auto post = ntg::posterior_update(params, obs, m);
    const double evidence = evidence_by_quadrature(params, m, obs, opt.quad);
    const double lam_scale = std::max(post.alpha0, 1.0) / post.beta0;
    CheckResult worst;
    for (int k = 0; k < opt.probes; ++k) {
      const double lam = post.eps0 + lam_scale * (0.05 + 2.0 * gen.uniform_open());
      Vec mu(p);
      for (int j = 0; j < p; ++j) mu[j] = post.mu0[j] + gen.normal() / std::sqrt(post.kappa0 * lam);
      const LocationScale pt{mu, lam};
      const double expected = blyth::likelihood(p, m, obs, pt) * ntg::prior_density(params, pt) / evidence;
      auto r = compare("", expected, ntg::prior_density(post, pt), opt.rel_tol, true);
      if (k == 0 || r.error > worst.error || !r.pass) worst = r;
    }
    worst.name = "conjugacy[" + describe(params) + ",m=" + std::to_string(m) + "]";
    out.push_back(worst);
  }
  return out;
}

std::vector<CheckResult> marginals(const SuiteOptions& opt) {
  rng::Stream gen(opt.seed, 0x3a);
  std::vector<CheckResult> out;
  for (int i = 0; i < opt.pairs; ++i) {
    const int p = 1 + i % 2;
    const int m = 1 + static_cast<int>(5.0 * gen.uniform_open());
    const auto params = random_params(p, gen);
    const std::string tag = "[" + describe(params) + "]";
    CheckResult wmu, wlam, wobs;
    for (int k = 0; k < opt.probes; ++k) {
      Vec mu(p);
      for (int j = 0; j < p; ++j) mu[j] = params.mu0[j] + 1.5 * gen.normal();
      auto a = compare("", mu_marginal_by_quadrature(params, mu, opt.quad), ntg::marginal_mu_density(params, mu),
                       opt.rel_tol, true);
      if (k == 0 || a.error > wmu.error || !a.pass) wmu = a;
      const double lam = params.eps0 + 0.05 + 3.0 * gen.uniform_open();
      auto b = compare("", lambda_marginal_by_quadrature(params, lam, opt.quad),
                       ntg::marginal_lambda_density(params, lam), opt.rel_tol, true);
      if (k == 0 || b.error > wlam.error || !b.pass) wlam = b;
    }
    // The observation marginal costs a nested quadrature per probe; fewer probes.
    for (int k = 0; k < std::max(1, opt.probes / 5); ++k) {
      const auto obs = random_observation(params, gen);
      auto c = compare("", evidence_by_quadrature(params, m, obs, opt.quad),
                       ntg::marginal_obs_density(params, m, obs), opt.rel_tol, true);
      if (k == 0 || c.error > wobs.error || !c.pass) wobs = c;
    }
    wmu.name = "marginal_mu" + tag;
    wlam.name = "marginal_lambda" + tag;
    wobs.name = "marginal_obs" + tag + "[m=" + std::to_string(m) + "]";
    out.push_back(wmu);
    out.push_back(wlam);
    out.push_back(wobs);
    out.push_back(compare("total_mu" + tag, 1.0, total_mu_marginal(params, opt.quad), opt.rel_tol, false));
    out.push_back(compare("total_lambda" + tag, 1.0, total_lambda_marginal(params, opt.quad), opt.rel_tol, false));
    Tolerance outer = opt.quad;
    outer.rel = std::max(outer.rel, 1e-7);
    out.push_back(compare("total_obs" + tag + "[m=" + std::to_string(m) + "]", 1.0,
                          total_obs_marginal(params, m, outer), opt.rel_tol, false));
  }
  return out;
}

std::vector<CheckResult> q_identity(std::uint64_t seed, int points, const std::vector<double>& kappas, double rel_tol) {
  std::vector<CheckResult> out;
  for (double kappa : kappas) {
    rng::Stream gen(seed, static_cast<std::uint64_t>(kappa * 1e6));
    CheckResult wj, wo;
    for (int k = 0; k < points; ++k) {
      const int p = 1 + static_cast<int>(3.0 * gen.uniform_open());
      const int m = 1 + static_cast<int>(6.0 * gen.uniform_open());
      const auto ctx = blyth::BlythContext::make(p, m, 1.0, kappa, uniform(gen, 0.1, 2.0));
      const auto prior = blyth::prior_params(ctx);
      const double K = blyth::big_K(ctx);
      Vec mu(p), x(p);
      for (int j = 0; j < p; ++j) {
        mu[j] = gen.normal();
        x[j] = 2.0 * gen.normal();
      }
      const double lam = ctx.eps * (1.0 + 4.0 * gen.uniform_open());
      const Observation obs{x, uniform(gen, 0.1, 5.0)};
      auto a = compare("", K * ntg::prior_density(prior, {mu, lam}), blyth::q_joint(ctx, mu, lam), rel_tol, true);
      auto b = compare("", K * ntg::marginal_obs_density(prior, m, obs), blyth::q_obs(ctx, obs), rel_tol, true);
      if (k == 0 || a.error > wj.error || !a.pass) wj = a;
      if (k == 0 || b.error > wo.error || !b.pass) wo = b;
    }
    std::ostringstream tag;
    tag << "[kappa=" << kappa << ",points=" << points << "]";
    wj.name = "q_joint_equals_K_prior" + tag.str();
    wo.name = "q_obs_equals_K_marginal" + tag.str();
    out.push_back(wj);
    out.push_back(wo);
  }
  return out;
}

}  // namespace ntglab::checks
