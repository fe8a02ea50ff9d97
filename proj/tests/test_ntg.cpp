#include <catch_amalgamated.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "ntglab/blyth.hpp"
#include "ntglab/numint.hpp"
#include "ntglab/ntg.hpp"
#include "ntglab/specfun.hpp"
#include "test_support.hpp"

using namespace ntglab;
using namespace ntglab::ntg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using numint::kInf;

namespace {

constexpr double kPi = std::numbers::pi;
const Tolerance kTol{1e-11, 1e-300, 4000};
const Tolerance kOuterTol{1e-9, 1e-300, 4000};
// For mu-then-lambda nested quadratures, checked at 1e-6 or looser.
const Tolerance kNestedInner{1e-9, 1e-300, 4000};
const Tolerance kNestedOuter{1e-7, 1e-300, 4000};

// Integral over mu in R^p (p <= 3) of g(mu), centred at `center`; `scale`
// is the width of the bulk of g, used to place radial breaks.
double over_mu(const Vec& center, const std::function<double(std::span<const double>)>& g, double scale = 1.0,
               const Tolerance& tol = kTol) {
  const std::vector<double> br{0.0, scale, 4.0 * scale, kInf};
  // Offsets this small relative to `center` lose digits in center + r * dir.
  const Tolerance narrow{1e-8, 1e-300, 4000};
  return numint::integrate_spherical(g, center, br, scale < 1e-5 ? narrow : tol).value;
}

// Integral over lambda > lo of h(lambda), split at a few scales.
double over_lambda(double lo, const std::function<double(double)>& h) {
  const std::vector<double> br{lo, lo + 0.5, lo + 2.0, lo + 8.0, kInf};
  return numint::integrate_piecewise(h, br, kOuterTol).value;
}

// As over_lambda, for integrands that are themselves quadratures. Beyond
// lo + 8 the integral is taken in ln(lambda) and cut at 1e14, where the inner
// mu integral runs out of precision; the dropped mass is below 1e-7 for the
// parameter sets used here.
double over_lambda_nested(double lo, const std::function<double(double)>& h) {
  const std::vector<double> br{lo, lo + 0.5, lo + 2.0, lo + 8.0};
  const double head = numint::integrate_piecewise(h, br, kNestedOuter).value;
  auto in_log = [&](double u) {
    const double lam = std::exp(u);
    return lam * h(lam);
  };
  return head + numint::integrate_1d(in_log, std::log(lo + 8.0), std::log(1e14), kNestedOuter).value;
}

std::vector<NtGParams> sample_params() {
  return {
      NtGParams::make(1, {0.0}, 1.0, 1.0, 1.0, 0.0),
      NtGParams::make(1, {0.4}, 0.5, -0.5, 0.0, 0.3),
      NtGParams::make(2, {0.1, -0.2}, 2.0, 2.0, 3.0, 0.5),
      NtGParams::make(2, {0.0, 0.0}, 0.7, -1.0, 0.0, 1.0),
      NtGParams::make(2, {1.0, 0.5}, 1.3, -0.3, 0.8, 0.2),
      NtGParams::make(3, {0.0, 0.3, -0.1}, 1.5, 0.5, 1.2, 0.0),
  };
}

}  // namespace

TEST_CASE("normalizing constant examples") {
  CHECK_THAT(normalizing_constant(NtGParams::make(2, {0, 0}, 1.0, -1.0, 0.0, 1.0)), WithinRel(1.0 / (2 * kPi), 1e-14));
  CHECK_THAT(normalizing_constant(NtGParams::make(1, {0}, 1.0, 1.0, 1.0, 0.0)),
             WithinRel(1.0 / std::sqrt(2 * kPi), 1e-14));
  const double g = 2.5 * std::exp(-1.5);
  CHECK_THAT(normalizing_constant(NtGParams::make(2, {0, 0}, 1.0, 2.0, 3.0, 0.5)),
             WithinRel(9.0 / (2 * kPi * g), 1e-12));
}

TEST_CASE("parameter invariants") {
  CHECK_THROWS_AS(NtGParams::make(1, {0}, 1.0, -1.0, 1.0, 0.0), DomainError);  // eps0=0 needs alpha0>0
  CHECK_THROWS_AS(NtGParams::make(1, {0}, 1.0, 1.0, 0.0, 1.0), DomainError);   // beta0=0 needs alpha0<0
  CHECK_THROWS_AS(NtGParams::make(1, {0}, 0.0, 1.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(NtGParams::make(2, {0}, 1.0, 1.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(NtGParams::make(0, {}, 1.0, 1.0, 1.0, 0.0), DomainError);
  CHECK(NtGParams::make(1, {0}, 1.0, -2.0, 1.0, 0.5).regime() == Regime::truncated);
  CHECK(NtGParams::make(1, {0}, 1.0, -2.0, 0.0, 0.5).regime() == Regime::truncated_power);
  CHECK(NtGParams::make(1, {0}, 1.0, 2.0, 1.0, 0.0).regime() == Regime::untruncated);
}

TEST_CASE("prior density values and normalisation") {
  const auto q = NtGParams::make(1, {0}, 1.0, 1.0, 1.0, 0.0);
  CHECK_THAT(prior_density(q, {{0.0}, 1.0}), WithinRel(std::exp(-1.0) / std::sqrt(2 * kPi), 1e-14));
  const auto t = NtGParams::make(1, {0}, 1.0, -0.5, 0.0, 0.5);
  CHECK(prior_density(t, {{0.0}, 0.5}) == 0.0);
  CHECK(prior_density(t, {{0.0}, 0.2}) == 0.0);

  for (const auto& params : sample_params()) {
    const double total = over_lambda_nested(params.eps0, [&](double lam) {
      return over_mu(
          params.mu0, [&](std::span<const double> mu) { return prior_density(params, {Vec(mu.begin(), mu.end()), lam}); },
          1.0 / std::sqrt(params.kappa0 * lam), kNestedInner);
    });
    INFO("p = " << params.p << " alpha0 = " << params.alpha0);
    CHECK_THAT(total, WithinAbs(1.0, 1e-6));
  }
}

TEST_CASE("posterior update formulas") {
  const auto q = NtGParams::make(1, {0.0}, 1.0, -0.5, 0.0, 1.0);
  const auto r = posterior_update(q, {{2.0}, 3.0}, 2);
  CHECK_THAT(r.mu0[0], WithinAbs(1.0, 1e-15));
  CHECK(r.kappa0 == 2.0);
  CHECK(r.alpha0 == 1.0);
  CHECK_THAT(r.beta0, WithinAbs(2.5, 1e-15));
  CHECK(r.eps0 == q.eps0);
  for (const auto& params : sample_params()) {
    Observation obs{Vec(params.p, 0.7), 1.3};
    const auto post = posterior_update(params, obs, 3);
    CHECK_NOTHROW(post.validate());
    CHECK(post.alpha0 > params.alpha0);
    CHECK(post.beta0 > params.beta0);
  }
  CHECK_THROWS_AS(posterior_update(q, {{2.0}, 0.0}, 2), DomainError);
  CHECK_THROWS_AS(posterior_update(q, {{2.0, 1.0}, 1.0}, 2), DomainError);
  CHECK_THROWS_AS(posterior_update(q, {{2.0}, 1.0}, 0), DomainError);
}

TEST_CASE("posterior equals likelihood times prior over the evidence") {
  rng::Stream gen(404);
  for (const auto& params : sample_params()) {
    const int m = 3;
    Observation obs{Vec(params.p), 0.5 + 2.0 * gen.uniform_open()};
    for (auto& v : obs.x) v = gen.normal();
    auto joint = [&](std::span<const double> mu, double lam) {
      LocationScale pt{Vec(mu.begin(), mu.end()), lam};
      return blyth::likelihood(params.p, m, obs, pt) * prior_density(params, pt);
    };
    const auto post = posterior_update(params, obs, m);
    const double evidence = over_lambda_nested(params.eps0, [&](double lam) {
      return over_mu(post.mu0, [&](std::span<const double> mu) { return joint(mu, lam); },
                     1.0 / std::sqrt(post.kappa0 * lam), kNestedInner);
    });
    CHECK_THAT(evidence, WithinRel(marginal_obs_density(params, m, obs), 1e-6));
    for (int k = 0; k < 5; ++k) {
      Vec mu(params.p);
      for (auto& v : mu) v = post.mu0[0] * 0 + gen.normal();
      const double lam = params.eps0 + 0.05 + 2.0 * gen.uniform_open();
      const double lhs = prior_density(post, {mu, lam});
      CHECK_THAT(lhs, WithinRel(joint(mu, lam) / evidence, 1e-6));
    }
  }
}

TEST_CASE("sequential updates") {
  const auto q = NtGParams::make(2, {0.2, -0.1}, 0.8, -1.0, 0.0, 0.5);
  const Observation a{{1.0, 2.0}, 1.5}, b{{-0.5, 0.3}, 4.0};
  const auto ab = posterior_update(posterior_update(q, a, 2), b, 5);
  const auto ba = posterior_update(posterior_update(q, b, 5), a, 2);
  CHECK(ab.kappa0 == ba.kappa0);
  CHECK(ab.alpha0 == ba.alpha0);
  CHECK_THAT(ab.mu0[0], WithinRel(ba.mu0[0], 1e-14));
  CHECK_THAT(ab.beta0, WithinRel(ba.beta0, 1e-14));
  // A single update with the averaged location and pooled s is not the same
  // posterior: it only counts one location measurement.
  const Observation pooled{{0.25, 1.15}, 5.5};
  const auto once = posterior_update(q, pooled, 7);
  CHECK(once.kappa0 != ab.kappa0);
  CHECK(std::abs(once.beta0 - ab.beta0) > 1e-3);
  CHECK(std::abs(once.mu0[0] - ab.mu0[0]) > 1e-3);
}

TEST_CASE("marginal densities match marginalisation of the joint") {
  rng::Stream gen(77);
  for (const auto& params : sample_params()) {
    INFO("p = " << params.p << " alpha0 = " << params.alpha0 << " beta0 = " << params.beta0);
    for (int k = 0; k < 4; ++k) {
      Vec mu(params.p);
      for (auto& v : mu) v = params.mu0[0] + 1.5 * gen.normal();
      const double num = over_lambda(params.eps0, [&](double lam) { return prior_density(params, {mu, lam}); });
      CHECK_THAT(marginal_mu_density(params, mu), WithinRel(num, 1e-8));

      const double lam = params.eps0 + 0.1 + 3.0 * gen.uniform_open();
      const double numl =
          over_mu(params.mu0, [&](std::span<const double> m) { return prior_density(params, {Vec(m.begin(), m.end()), lam}); },
                  1.0 / std::sqrt(params.kappa0 * lam));
      CHECK_THAT(marginal_lambda_density(params, lam), WithinRel(numl, 1e-8));
    }
    const double tot_l = over_lambda(params.eps0, [&](double lam) { return marginal_lambda_density(params, lam); });
    CHECK_THAT(tot_l, WithinAbs(1.0, 1e-8));
    if (params.beta0 > 0.0 || params.alpha0 + 0.5 * params.p < 0.0) {
      const double tot_mu = over_mu(params.mu0, [&](std::span<const double> m) { return marginal_mu_density(params, m); });
      CHECK_THAT(tot_mu, WithinAbs(1.0, 1e-6));
    }
  }
}

TEST_CASE("marginal mu density: symmetry and the singular point") {
  const auto q = NtGParams::make(2, {0.5, -0.5}, 1.2, -1.0, 0.0, 0.7);
  const Vec a{0.5 + 0.6, -0.5 + 0.8}, b{0.5 - 1.0, -0.5};
  CHECK_THAT(marginal_mu_density(q, a), WithinRel(marginal_mu_density(q, b), 1e-14));
  CHECK(std::isinf(marginal_mu_density(q, q.mu0)));
  // alpha0 + p/2 < 0: finite limit C kappa^(p/2) eps^a / (-a).
  const auto r = NtGParams::make(1, {0.0}, 2.0, -1.5, 0.0, 0.4);
  const double a_sh = -1.0;
  const double expect = normalizing_constant(r) * std::sqrt(2.0) * std::pow(0.4, a_sh) / (-a_sh);
  CHECK_THAT(marginal_mu_density(r, r.mu0), WithinRel(expect, 1e-13));
  const Vec near{1e-7};
  CHECK_THAT(marginal_mu_density(r, near), WithinRel(expect, 1e-6));
  // beta0 = 0 singularity integrates: mass of the marginal over R^2.
  const std::vector<double> br{0.0, 0.1, 1.0, kInf};
  const double tot =
      numint::integrate_spherical([&](std::span<const double> m) { return marginal_mu_density(q, m); }, q.mu0, br, kTol).value;
  CHECK_THAT(tot, WithinAbs(1.0, 1e-6));
}

TEST_CASE("marginal lambda density example") {
  const auto q = NtGParams::make(2, {0, 0}, 1.0, -1.0, 0.0, 1.0);
  CHECK_THAT(marginal_lambda_density(q, 2.0), WithinRel(0.25, 1e-14));
  CHECK(marginal_lambda_density(q, 1.0) == 0.0);
  CHECK(marginal_lambda_density(q, 0.5) == 0.0);
}

TEST_CASE("marginal observation density matches quadrature and integrates to one") {
  rng::Stream gen(5150);
  for (const auto& params : sample_params()) {
    if (params.p > 2) continue;
    for (int m : {1, 4}) {
      INFO("p = " << params.p << " m = " << m << " alpha0 = " << params.alpha0);
      // Integrate over x in R^p, then over s in (0, 1] and [1, inf).
      // Given s, x is a scale mixture with widths from sqrt(s) up to about
      // 1/sqrt(eps0), so the radial breaks are geometric.
      // Below s = 1e-16 the x integral is dropped (mass < 1e-7): the widths
      // there are too small to resolve next to mu0.
      const Tolerance inner{1e-9, 1e-300, 4000};
      auto over_x = [&](double s) {
        if (s < 1e-16) return 0.0;
        const double w = std::sqrt(1.0 + 1.0 / params.kappa0);
        const double top = 8.0 * w * std::max(1.0, std::sqrt(s)) / std::sqrt(std::max(params.eps0, 0.05));
        std::vector<double> br{0.0};
        for (double r = w * std::sqrt(s); r < top; r *= 4.0) br.push_back(r);
        br.push_back(top);
        br.push_back(kInf);
        return numint::integrate_spherical(
                   [&](std::span<const double> x) { return marginal_obs_density(params, m, {Vec(x.begin(), x.end()), s}); },
                   params.mu0, br, inner)
            .value;
      };
      const Tolerance tol{1e-7, 1e-300, 4000};
      // With a power-law lambda tail the density near s = 0 goes like
      // s^(-1-alpha0), with a log factor when that equals s^(m/2-1).
      const double lead = params.beta0 == 0.0
                              ? std::max(std::min(0.5 * m - 1.0, -1.0 - params.alpha0) - 0.1, -0.95)
                              : 0.5 * m - 1.0;
      const double tot = numint::integrate_power_left(over_x, 0.0, 1.0, lead, tol).value +
                         numint::integrate_1d(over_x, 1.0, kInf, tol).value;
      CHECK_THAT(tot, WithinAbs(1.0, 1e-5));
    }
    for (int k = 0; k < 5; ++k) {
      INFO("p = " << params.p << " alpha0 = " << params.alpha0 << " k = " << k);
      Observation obs{Vec(params.p), 0.2 + 3.0 * gen.uniform_open()};
      for (auto& v : obs.x) v = 2.0 * gen.normal();
      const int m = 2;
      const double v = marginal_obs_density(params, m, obs);
      CHECK(v > 0.0);
      const auto post = posterior_update(params, obs, m);
      const double num = over_lambda_nested(params.eps0, [&](double lam) {
        return over_mu(
            post.mu0,
            [&](std::span<const double> mu) {
              LocationScale pt{Vec(mu.begin(), mu.end()), lam};
              return blyth::likelihood(params.p, m, obs, pt) * prior_density(params, pt);
            },
            1.0 / std::sqrt(post.kappa0 * lam), kNestedInner);
      });
      CHECK_THAT(v, WithinRel(num, 1e-5));
    }
  }
}

TEST_CASE("reference-prior limit") {
  const double k = 1e-4, e = 1e-4;
  const auto q = NtGParams::make(2, {0, 0}, k, -1.0, 0.0, e);
  const Vec mu{0.6, 0.8};
  const double scaled = prior_density(q, {mu, 1.0}) / (normalizing_constant(q) * std::pow(k, 1.0));
  CHECK_THAT(scaled, WithinRel(std::exp(-0.5 * k), 1e-12));
  CHECK(std::abs(scaled - 1.0) < 0.01);
}

TEST_CASE("prior sampling: power-law lambda") {
  const auto q = NtGParams::make(2, {0.0, 1.0}, 0.5, -1.0, 0.0, 0.8);
  rng::Stream s(31337);
  const int n = 100000;
  std::vector<double> lam(n);
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto pt = sample_prior(q, s);
    lam[i] = pt.lambda;
    const double v = q.kappa0 * pt.lambda * squared_distance(pt.mu, q.mu0);
    acc += v;
    acc2 += v * v;
  }
  // P(lambda > t) = (t / eps)^alpha0.
  const double d = testsupport::ks_statistic(lam, [&](double t) { return t <= q.eps0 ? 0.0 : 1.0 - std::pow(t / q.eps0, q.alpha0); });
  CHECK(d < testsupport::ks_critical_1pct(n));
  const double mean = acc / n, se = std::sqrt((acc2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 2.0) < 3.0 * se);

  // Explicit inverse: eps U^(-2/p) for alpha0 = -p/2.
  rng::Stream a(9), b(9);
  CHECK_THAT(sample_lambda(q, a), WithinRel(q.eps0 * std::pow(b.uniform_open(), -1.0), 1e-14));
}

TEST_CASE("prior sampling: truncated gamma lambda, chi-square histogram") {
  for (const auto& q : {NtGParams::make(1, {0}, 1.0, 1.5, 2.0, 0.5), NtGParams::make(1, {0}, 1.0, -0.7, 0.8, 0.3),
                        NtGParams::make(1, {0}, 1.0, 2.5, 1.0, 0.0)}) {
    rng::Stream s(8);
    const int n = 100000;
    std::vector<double> lam(n);
    for (auto& v : lam) v = sample_lambda(q, s);
    auto cdf = [&](double t) {
      if (t <= q.eps0) return 0.0;
      return 1.0 - std::exp(specfun::log_upper_incomplete_gamma(q.alpha0, q.beta0 * t) -
                            specfun::log_upper_incomplete_gamma_or_complete(q.alpha0, q.beta0 * q.eps0));
    };
    INFO("alpha0 = " << q.alpha0);
    CHECK(testsupport::ks_statistic(lam, cdf) < testsupport::ks_critical_1pct(n));
    // Chi-square goodness of fit on 20 equiprobable bins found by bisection.
    const int bins = 20;
    std::vector<double> edges{q.eps0};
    for (int k = 1; k < bins; ++k) {
      double lo = q.eps0, hi = q.eps0 + 1.0;
      while (cdf(hi) < double(k) / bins) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < double(k) / bins ? lo : hi) = mid;
      }
      edges.push_back(0.5 * (lo + hi));
    }
    std::vector<int> counts(bins, 0);
    for (double v : lam) counts[std::upper_bound(edges.begin(), edges.end(), v) - edges.begin() - 1]++;
    double chi2 = 0.0;
    const double expect = double(n) / bins;
    for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
    boost::math::chi_squared dist(bins - 1);
    CHECK(chi2 < boost::math::quantile(dist, 0.999));
  }
}

TEST_CASE("prior sampling is deterministic given the seed") {
  const auto q = NtGParams::make(2, {0, 0}, 1.0, 1.0, 1.0, 0.2);
  rng::Stream a(1, 3), b(1, 3);
  for (int i = 0; i < 10; ++i) {
    const auto x = sample_prior(q, a), y = sample_prior(q, b);
    CHECK(x.lambda == y.lambda);
    CHECK(x.mu == y.mu);
  }
}
