#include <catch_amalgamated.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "ntglab/blyth.hpp"
#include "ntglab/numint.hpp"
#include "ntglab/risk.hpp"
#include "ntglab/simd.hpp"
#include "ntglab/specfun.hpp"

using namespace ntglab;
using namespace ntglab::risk;
using blyth::BlythContext;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using numint::kInf;

namespace {

constexpr double kPi = std::numbers::pi;

double joint_z(const EstimateWithError& a, const EstimateWithError& b) {
  return std::abs(a.value - b.value) / std::sqrt(a.error * a.error + b.error * b.error);
}

// P(|x / (1 + kappa) - mu|^2 < c s / m) by one quadrature over s: given s the
// event is a non-central chi-square bound.
double ball_coverage_oracle(const BlythContext& ctx, double denom, const LocationScale& pt) {
  const double shift = (denom - 1.0) * (denom - 1.0) * pt.lambda * squared_norm(pt.mu);
  boost::math::chi_squared_distribution<double> chi(ctx.m);
  auto f = [&](double u) {
    const double bound = denom * denom * ctx.c * u / ctx.m;
    const double inner = shift > 0.0
                             ? boost::math::cdf(boost::math::non_central_chi_squared_distribution<double>(ctx.p, shift), bound)
                             : boost::math::cdf(boost::math::chi_squared_distribution<double>(ctx.p), bound);
    return boost::math::pdf(chi, u) * inner;
  };
  const std::vector<double> br{0.0, 0.5 * ctx.m, 2.0 * ctx.m, 8.0 * ctx.m, kInf};
  double total = numint::integrate_power_left(f, 0.0, br[1], 0.5 * ctx.m - 1.0, {1e-10, 1e-14, 2000}).value;
  for (std::size_t i = 1; i + 1 < br.size(); ++i) total += numint::integrate_1d(f, br[i], br[i + 1], {1e-10, 1e-14, 2000}).value;
  return total;
}

std::vector<Observation> probe_points(int p) {
  std::vector<Observation> out;
  const double grid[3] = {-2.0, 0.0, 2.0};
  const int count = p == 1 ? 3 : 9;
  for (int k = 0; k < count; ++k)
    for (double s : {0.5, 1.0, 4.0}) {
      Vec x(p);
      x[0] = grid[k % 3];
      if (p > 1) x[1] = grid[k / 3];
      out.push_back({x, s});
    }
  return out;
}

}  // namespace

TEST_CASE("standard and Bayes balls") {
  const auto ctx = BlythContext::make(2, 2, 2.0, 0.5, 1.0);
  const auto a = phi0(ctx);
  const auto b = phi_kappa(ctx);
  const Vec x{0.7, -1.2};
  CHECK(a.eval(x, 0.01, x, 1.0) == 1.0);
  CHECK(b.eval(x, 0.01, blyth::mu_kappa(x, ctx.kappa), 1.0) == 1.0);
  CHECK_THAT(a.closed_form_measure(x, 2.0, 1.0), WithinRel(2.0 * kPi, 1e-14));
  for (double s : {0.1, 1.0, 7.0}) CHECK(a.closed_form_measure(x, s, 1.0) == b.closed_form_measure(x, s, 1.0));

  auto flat = ctx;
  flat.kappa = 0.0;
  const auto a0 = phi0(flat), b0 = phi_kappa(flat);
  rng::Stream gen(3);
  for (int k = 0; k < 200; ++k) {
    const Vec xx{gen.normal(), gen.normal()}, mu{gen.normal(), gen.normal()};
    const double s = 0.1 + gen.uniform_open();
    CHECK(a0.eval(xx, s, mu, 1.0) == b0.eval(xx, s, mu, 1.0));
  }
  CHECK_THAT(ball_volume(3, 4.0), WithinRel(4.0 / 3.0 * kPi * 8.0, 1e-14));
  CHECK_THAT(ball_volume(1, 4.0), WithinRel(4.0, 1e-14));
}

TEST_CASE("measure: closed forms against quadrature") {
  for (int p : {1, 2, 3}) {
    const auto ctx = BlythContext::make(p, 3, 1.7, 0.4, 1.0);
    const Vec x(p, 0.3);
    std::vector<Procedure> procs{phi0(ctx), phi_kappa(ctx)};
    for (auto kind : {Perturbation::radius_jitter, Perturbation::center_offset, Perturbation::boundary_band})
      procs.push_back(perturb(phi_kappa(ctx), kind, 17));
    for (auto proc : procs) {
      INFO(proc.label << " p = " << p);
      REQUIRE(proc.closed_form_measure);
      const double closed = measure(proc, x, 2.2, 1.0).value;
      proc.closed_form_measure = nullptr;
      const double numeric = measure(proc, x, 2.2, 1.0, {1e-9, 1e-14, 2000}).value;
      CHECK_THAT(numeric, WithinRel(closed, 1e-6));
    }
  }
  const auto half = constant_ball(2, 0.5, 1.0, "half");
  CHECK_THAT(measure(half, Vec{1.0, 2.0}, 1.0, 1.0).value, WithinRel(0.5 * kPi, 1e-9));
  CHECK(measure(constant_ball(2, 0.0, 1.0, "none"), Vec{0.0, 0.0}, 1.0, 1.0).value == 0.0);
}

TEST_CASE("coverage") {
  const auto ctx = BlythContext::make(2, 4, 3.0, 0.6, 0.5);
  const numint::McSpec spec{200000, 42, 2, 8192};
  const auto all = constant_ball(2, 1.0, kInf, "all");
  const auto one = coverage(all, {{0.3, 0.3}, 1.0}, ctx, spec);
  CHECK(one.value == 1.0);
  CHECK(one.error == 0.0);
  const double nominal = specfun::f_cdf(2, 4, 3.0 / 2.0);
  for (const LocationScale& pt : {LocationScale{{0.0, 0.0}, 1.0}, LocationScale{{2.0, -1.0}, 0.3}}) {
    const auto c0 = coverage(phi0(ctx), pt, ctx, spec);
    CHECK(std::abs(c0.value - nominal) < 3.0 * c0.error);
    const auto ck = coverage(phi_kappa(ctx), pt, ctx, spec);
    const double oracle = ball_coverage_oracle(ctx, 1.0 + ctx.kappa, pt);
    INFO("phi_kappa coverage " << ck.value << " +- " << ck.error << " oracle " << oracle);
    CHECK(std::abs(ck.value - oracle) < 3.0 * ck.error);
  }
  const auto again = coverage(phi0(ctx), {{0.0, 0.0}, 1.0}, ctx, spec);
  const auto other_workers = coverage(phi0(ctx), {{0.0, 0.0}, 1.0}, ctx, {200000, 42, 5, 8192});
  CHECK(again.value == other_workers.value);
  CHECK(again.error == other_workers.error);
}

TEST_CASE("loss") {
  const auto ctx = BlythContext::make(2, 3, 2.5, 0.5, 0.7);
  const auto none = constant_ball(2, 0.0, 1.0, "none");
  const Vec x{0.4, 0.1};
  CHECK(loss(none, ctx, x, 1.0, x, 2.0) == 0.0);
  const double s = 1.3, lam = 2.0;
  const double r = blyth::r_kappa(ctx.c * s / ctx.m, lam, ctx);
  const double vol = kPi * ctx.c * s / ctx.m;
  CHECK_THAT(loss(phi0(ctx), ctx, x, s, x, lam), WithinRel(r * vol - 1.0, 1e-13));
  rng::Stream gen(8);
  for (int k = 0; k < 500; ++k) {
    const Vec xx{gen.normal(), gen.normal()}, mu{gen.normal(), gen.normal()};
    const double ss = 0.05 + 5.0 * gen.uniform_open();
    const double ll = 0.05 + 5.0 * gen.uniform_open();
    CHECK(loss(phi0(ctx), ctx, xx, ss, mu, ll) >= -1.0);
    CHECK(loss(phi_kappa(ctx), ctx, xx, ss, mu, ll) >= -1.0);
  }
}

TEST_CASE("posterior risk: the threshold weight and the two evaluation paths") {
  for (double kappa : {0.0, 0.5}) {
    const auto ctx = BlythContext::make(2, 3, 2.0, kappa, 0.4);
    const Observation obs{{1.0, -0.5}, 1.2};
    const double t = ctx.c * obs.s / ctx.m;
    const double b = blyth::beta_kappa(obs, kappa);
    const std::vector<double> br{ctx.eps, ctx.eps + 1.0 / b, ctx.eps + 6.0 / b, kInf};
    const double w = numint::integrate_piecewise(
                         [&](double l) { return blyth::lambda_posterior_density(ctx, obs, l) * blyth::r_kappa(t, l, ctx); },
                         br, {1e-12, 1e-300, 2000})
                         .value;
    CHECK_THAT(blyth::mu_posterior_density_at(ctx, obs, t), WithinRel(w, 1e-10));

    for (const auto& proc : {phi0(ctx), phi_kappa(ctx), perturb(phi_kappa(ctx), Perturbation::center_offset, 5)}) {
      INFO(proc.label << " kappa = " << kappa);
      const auto fast = posterior_risk(proc, ctx, obs);
      const auto nested = posterior_risk_nested(proc, ctx, obs, {1e-9, 1e-13, 2000});
      CHECK_THAT(nested.value, WithinAbs(fast.value, 1e-7));
    }
    CHECK(posterior_risk(constant_ball(2, 0.0, 1.0, "none"), ctx, obs).value == 0.0);
  }
}

TEST_CASE("posterior risk: phi_kappa is optimal") {
  for (int p : {1, 2}) {
    for (double kappa : {0.0, 0.5}) {
      const auto ctx = BlythContext::make(p, 3, radius_constant(p, 3, 0.9), kappa, 0.5);
      const auto best = phi_kappa(ctx);
      std::vector<Procedure> rivals{phi0(ctx)};
      for (std::uint64_t seed = 1; seed <= 20; ++seed) rivals.push_back(perturb(best, seed));
      for (const auto& obs : probe_points(p)) {
        const double own = posterior_risk(best, ctx, obs).value;
        CHECK(own <= 0.0);
        for (const auto& r : rivals) {
          INFO(r.label << " x0 = " << obs.x[0] << " s = " << obs.s << " kappa = " << kappa);
          CHECK(own <= posterior_risk(r, ctx, obs).value + 1e-8);
        }
      }
    }
  }
}

TEST_CASE("perturbations") {
  const auto ctx = BlythContext::make(2, 2, 2.0, 0.5, 1.0);
  const auto base = phi_kappa(ctx);
  const Vec x{0.5, 0.5};
  const double s = 1.0;
  const auto g = base.geometry(x, s);
  const double R = g.breaks[1];
  for (auto kind : {Perturbation::radius_jitter, Perturbation::center_offset, Perturbation::boundary_band}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto q = perturb(base, kind, seed);
      INFO(q.label);
      // Probe along a ray and across the boundary.
      bool differs = false;
      rng::Stream gen(seed);
      for (int k = 0; k < 400; ++k) {
        const double ang = 2.0 * kPi * gen.uniform_open();
        const double rad = 1.6 * R * gen.uniform_open();
        const Vec mu{g.center[0] + rad * std::cos(ang), g.center[1] + rad * std::sin(ang)};
        const double v = q.eval(x, s, mu, 1.0);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        differs = differs || v != base.eval(x, s, mu, 1.0);
      }
      CHECK(differs);
    }
  }
  const auto a = perturb(base, 99), b = perturb(base, 99);
  CHECK(a.label == b.label);
}

TEST_CASE("Bayes risk") {
  const numint::McSpec spec{100000, 7, 0, 8192};
  const auto ctx = BlythContext::make(2, 2, 2.0, 0.5, 1.0);
  const auto br = bayes_risk(phi_kappa(ctx), ctx, spec);
  CHECK(br.value >= -1.0);
  CHECK(br.value <= 0.0);
  CHECK(bayes_risk(constant_ball(2, 0.0, 1.0, "none"), ctx, spec).value == 0.0);
  CHECK_THROWS_AS(bayes_risk(phi0(ctx), BlythContext::make(2, 2, 2.0, 0.0, 1.0), spec), DomainError);

  for (double kappa : {0.25, 0.5, 1.0}) {
    for (double c : {1.0, 2.0, 4.0}) {
      const auto cx = BlythContext::make(2, 3, c, kappa, 1.0);
      const auto pr = bayes_risk_paired(phi_kappa(cx), phi0(cx), cx, spec);
      const double closed = risk_difference_closed(cx);
      INFO("kappa " << kappa << " c " << c << " mc " << pr.difference.value << " +- " << pr.difference.error);
      CHECK(std::abs(pr.difference.value - closed) < 3.0 * pr.difference.error);
    }
  }
}

TEST_CASE("closed-form risk difference") {
  CHECK(risk_difference_closed(2, 2, 2.0, 0.0) == 0.0);
  CHECK_THAT(risk_difference_closed(2, 2, 2.0, 1.0), WithinAbs(1.0 / 6.0, 1e-12));
  for (int p : {1, 2, 3}) {
    double prev = 0.0;
    for (double k : {0.01, 0.1, 0.5, 1.0, 3.0}) {
      const double d = risk_difference_closed(p, 4, 2.0, k);
      CHECK(d > prev);
      prev = d;
    }
  }
  const double r1 = risk_difference_closed(2, 5, 3.0, 0.1) / 0.1;
  const double r2 = risk_difference_closed(2, 5, 3.0, 0.05) / 0.05;
  const double r3 = risk_difference_closed(2, 5, 3.0, 0.025) / 0.025;
  CHECK(std::abs(r2 / r1 - 1.0) < 0.05);
  CHECK(std::abs(r3 / r2 - 1.0) < 0.05);
  CHECK(std::abs(r3 / r2 - 1.0) < std::abs(r2 / r1 - 1.0));
}

TEST_CASE("Monte Carlo risk difference") {
  const numint::McSpec spec{400000, 99, 0, 8192};
  const auto ctx = BlythContext::make(2, 2, 2.0, 1.0, 1.0);
  const auto est = risk_difference_mc(ctx, spec);
  INFO(est.difference.value << " +- " << est.difference.error);
  CHECK(std::abs(est.difference.value - 1.0 / 6.0) < 3.0 * est.difference.error);

  auto flat = ctx;
  flat.kappa = 0.0;
  const auto zero = risk_difference_mc(flat, spec);
  CHECK(zero.difference.value == 0.0);
  CHECK(zero.difference.error == 0.0);

  std::vector<EstimateWithError> by_eps;
  for (double eps : {0.5, 1.0, 2.0}) {
    auto c = ctx;
    c.eps = eps;
    by_eps.push_back(risk_difference_mc(c, spec).difference);
  }
  for (std::size_t i = 0; i < by_eps.size(); ++i)
    for (std::size_t j = i + 1; j < by_eps.size(); ++j) CHECK(joint_z(by_eps[i], by_eps[j]) <= 3.0);

  const auto one = risk_difference_mc(ctx, {50000, 5, 1, 4096});
  const auto many = risk_difference_mc(ctx, {50000, 5, 7, 4096});
  CHECK(one.difference.value == many.difference.value);
  CHECK(one.difference.error == many.difference.error);
  CHECK(one.first.value == many.first.value);

  const auto saved = simd::active_isa();
  simd::set_active_isa(simd::Isa::scalar);
  const auto scalar = risk_difference_mc(ctx, {50000, 5, 2, 4096});
  simd::set_active_isa(simd::detected_isa());
  const auto vec = risk_difference_mc(ctx, {50000, 5, 2, 4096});
  simd::set_active_isa(saved);
  CHECK(scalar.difference.value == vec.difference.value);
  CHECK(scalar.second.value == vec.second.value);

  // The paired estimator and the per-procedure coverage estimates agree.
  const auto cov = bayes_risk_paired(phi_kappa(ctx), phi0(ctx), ctx, {50000, 5, 2, 4096});
  CHECK(std::abs(cov.difference.value - one.difference.value) < 4.0 * one.difference.error);
}

TEST_CASE("Blyth scaling") {
  const std::vector<double> grid{0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625};
  for (int p : {1, 2, 3}) {
    const auto rows = blyth_scaling(p, 3, radius_constant(p, 3, 0.95), 1.0, grid);
    REQUIRE(rows.size() == grid.size());
    const double target = std::pow(2.0, 0.5 * p - 1.0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double ratio = rows[i].k_times_delta / rows[i - 1].k_times_delta;
      INFO("p = " << p << " kappa = " << rows[i].kappa << " ratio = " << ratio);
      CHECK(std::abs(ratio / target - 1.0) < 0.1);
      if (p == 2 && rows[i].kappa <= 0.05) CHECK(std::abs(ratio - 1.0) < 0.02);
      CHECK_THAT(rows[i].k_times_delta, WithinRel(rows[i].big_k * rows[i].delta, 1e-15));
    }
    // Ratio of K*Delta at kappa/4 and kappa: 1/2, 1, 2.
    const double quarter = rows[5].k_times_delta / rows[3].k_times_delta;
    CHECK(std::abs(quarter / (target * target) - 1.0) < 0.05);
  }
  CHECK(blyth_scaling(2, 2, 1.0, 1.0, {0.3}).size() == 1);
  CHECK_THROWS_AS(blyth_scaling(2, 2, 1.0, 1.0, {}), DomainError);
}

TEST_CASE("risk report") {
  const auto ctx = BlythContext::make(1, 3, radius_constant(1, 3, 0.9), 0.5, 1.0);
  const std::vector<LocationScale> grid{{{0.0}, 1.0}, {{1.5}, 0.5}};
  const auto rep = make_report(ctx, grid, {20000, 3, 2, 4096});
  CHECK(rep.coverage.size() == 2);
  for (const auto& cp : rep.coverage) {
    CHECK(cp.phi0.n_evals == 20000);
    CHECK(cp.phi_kappa.n_evals == 20000);
  }
  CHECK(rep.bayes_risk.n_evals == 20000);
  CHECK(rep.risk_difference_closed > 0.0);
  CHECK_THAT(rep.k_scaled_difference, WithinRel(blyth::big_K(ctx) * rep.risk_difference_closed, 1e-15));
  const auto again = make_report(ctx, grid, {20000, 3, 5, 4096});
  CHECK(again.risk_difference_mc.value == rep.risk_difference_mc.value);
  CHECK(again.bayes_risk.value == rep.bayes_risk.value);
}
