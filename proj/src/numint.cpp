#include "ntglab/numint.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <queue>
#include <thread>

#include "ntglab/simd.hpp"

namespace ntglab::numint {

namespace {

// 21-point Kronrod nodes (non-negative half) and weights, with the embedded
// 10-point Gauss weights on the odd-indexed nodes.
constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208969221861, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double kWg[5] = {0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
                           0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
                           0.295524224714752870173892994651338};

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

Piece gk21(const Fn1& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[10];
  double resg = 0.0;
  double resabs = std::abs(resk);
  double fv1[10], fv2[10];
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double reskh = resk * 0.5;
  double resasc = kWgk[10] * std::abs(fc - reskh);
  for (int j = 0; j < 10; ++j) resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));

  const double value = resk * half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  if (!std::isfinite(value) || !std::isfinite(err))
    throw NumericError("integrate_1d: integrand is not finite on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]",
                       value, err);
  return {a, b, value, err};
}

EstimateWithError adaptive(const Fn1& f, double a, double b, const Tolerance& tol) {
  tol.validate();
  std::priority_queue<Piece> work;
  Piece first = gk21(f, a, b);
  std::int64_t evals = 21;
  double total = first.value;
  double total_err = first.error;
  double frozen_err = 0.0;
  work.push(first);
  int splits = 0;
  auto target = [&] { return std::max(tol.abs, tol.rel * std::abs(total)); };
  while (total_err > target()) {
    if (work.empty() || splits >= tol.max_iter) {
      throw NumericError("integrate_1d: tolerance not reached after " + std::to_string(splits) + " bisections",
                         total, total_err);
    }
    Piece worst = work.top();
    work.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-14 * std::abs(mid)) {
      // Cannot be refined further in double precision; keep its error.
      frozen_err += worst.error;
      if (frozen_err > target())
        throw NumericError("integrate_1d: error estimate stalled at the resolution limit", total, total_err);
      continue;
    }
    Piece left = gk21(f, worst.a, mid);
    Piece right = gk21(f, mid, worst.b);
    evals += 42;
    ++splits;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    work.push(left);
    work.push(right);
  }
  // Re-sum to shed accumulated rounding from the running updates.
  double sum = 0.0, err = frozen_err;
  while (!work.empty()) {
    sum += work.top().value;
    err += work.top().error;
    work.pop();
  }
  return {sum, std::max(err, total_err), evals, Method::quadrature};
}

}  // namespace

EstimateWithError integrate_1d(const Fn1& f, double a, double b, const Tolerance& tol) {
  if (std::isnan(a) || std::isnan(b)) throw DomainError("integrate_1d: NaN limit");
  if (a == b) return {0.0, 0.0, 1, Method::quadrature};
  if (a > b) {
    auto r = integrate_1d(f, b, a, tol);
    r.value = -r.value;
    return r;
  }
  const bool lo_inf = std::isinf(a), hi_inf = std::isinf(b);
  if (!lo_inf && !hi_inf) return adaptive(f, a, b, tol);
  if (lo_inf && hi_inf) {
    auto left = integrate_1d(f, -kInf, 0.0, tol);
    auto right = integrate_1d(f, 0.0, kInf, tol);
    return {left.value + right.value, left.error + right.error, left.n_evals + right.n_evals, Method::quadrature};
  }
  // t = a + u / (1 - u), written in v = 1 - u so that the far end of the
  // range sits at v = 0, where doubles are densest.
  const double anchor = hi_inf ? a : b;
  const double sign = hi_inf ? 1.0 : -1.0;
  Fn1 g = [&f, anchor, sign](double v) {
    if (v <= 0.0) return 0.0;
    const double y = f(anchor + sign * (1.0 - v) / v);
    return y == 0.0 ? 0.0 : y / (v * v);
  };
  return adaptive(g, 0.0, 1.0, tol);
}

EstimateWithError integrate_piecewise(const Fn1& f, std::span<const double> breaks, const Tolerance& tol) {
  if (breaks.size() < 2) throw DomainError("integrate_piecewise: need at least two break points");
  EstimateWithError acc{0.0, 0.0, 0, Method::quadrature};
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i] <= breaks[i + 1])) throw DomainError("integrate_piecewise: breaks must ascend");
    const auto r = integrate_1d(f, breaks[i], breaks[i + 1], tol);
    acc.value += r.value;
    acc.error += r.error;
    acc.n_evals += r.n_evals;
  }
  return acc;
}

EstimateWithError integrate_power_left(const Fn1& f, double a, double b, double exponent, const Tolerance& tol) {
  if (!(exponent > -1.0)) throw DomainError("integrate_power_left: exponent must exceed -1");
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("integrate_power_left: finite limits required");
  const double k = 1.0 / (exponent + 1.0);
  const double w = b - a;
  Fn1 g = [&f, a, w, k](double v) {
    if (v <= 0.0) return 0.0;
    const double y = f(a + w * std::pow(v, k));
    return y == 0.0 ? 0.0 : y * w * k * std::pow(v, k - 1.0);
  };
  return integrate_1d(g, 0.0, 1.0, tol);
}

namespace {

// Integrates over the angles of S^{p-1} with the radial integral innermost.
struct SphereIntegrator {
  const FnP& f;
  std::span<const double> center;
  std::span<const double> breaks;
  Tolerance tol;
  int p;
  std::vector<double> point;
  std::vector<double> dir;
  std::int64_t evals = 0;
  double inner_err_max = 0.0;

  double radial() {
    Fn1 g = [this](double r) {
      for (int j = 0; j < p; ++j) point[j] = center[j] + r * dir[j];
      const double v = f(point);
      return v == 0.0 ? 0.0 : v * std::pow(r, p - 1);
    };
    // An open last piece is stretched by the width of the piece before it, so
    // the mapped integrand keeps its mass away from the far end.
    const std::size_t nb = breaks.size();
    const bool open = std::isinf(breaks[nb - 1]) && nb >= 3;
    auto res = integrate_piecewise(g, breaks.first(open ? nb - 1 : nb), tol);
    if (open) {
      const double r0 = breaks[nb - 2];
      const double w = r0 > breaks[nb - 3] ? r0 - breaks[nb - 3] : 1.0;
      Fn1 tail = [&g, r0, w](double u) {
        const double v = g(r0 + w * u);
        return v == 0.0 ? 0.0 : v * w;
      };
      const auto t = integrate_1d(tail, 0.0, kInf, tol);
      res.value += t.value;
      res.error += t.error;
      res.n_evals += t.n_evals;
    }
    evals += res.n_evals;
    inner_err_max = std::max(inner_err_max, res.error);
    return res.value;
  }
};

}  // namespace

EstimateWithError integrate_spherical(const FnP& f, std::span<const double> center,
                                      std::span<const double> radial_breaks, const Tolerance& tol) {
  const int p = static_cast<int>(center.size());
  if (p < 1 || p > 3) throw DomainError("integrate_spherical: dimension must be 1, 2 or 3");
  if (radial_breaks.size() < 2 || radial_breaks.front() != 0.0)
    throw DomainError("integrate_spherical: radial breaks must start at 0");
  // Inner integrals run tighter than the outer ones so that their noise does
  // not stall the outer refinement.
  Tolerance inner = tol;
  inner.rel = std::max(0.1 * tol.rel, 2e-14);
  inner.abs = 0.1 * tol.abs;
  SphereIntegrator s{f, center, radial_breaks, inner, p, std::vector<double>(p), std::vector<double>(p)};
  constexpr double pi = std::numbers::pi;
  EstimateWithError out{0.0, 0.0, 0, Method::quadrature};
  double angular_measure = 0.0;
  if (p == 1) {
    s.dir[0] = 1.0;
    out.value = s.radial();
    s.dir[0] = -1.0;
    out.value += s.radial();
    angular_measure = 2.0;
  } else if (p == 2) {
    Fn1 ang = [&s](double phi) {
      s.dir[0] = std::cos(phi);
      s.dir[1] = std::sin(phi);
      return s.radial();
    };
    auto r = integrate_1d(ang, 0.0, 2.0 * pi, tol);
    out.value = r.value;
    out.error = r.error;
    angular_measure = 2.0 * pi;
  } else {
    Fn1 polar = [&](double theta) {
      const double st = std::sin(theta), ct = std::cos(theta);
      Fn1 az = [&s, st, ct](double phi) {
        s.dir[0] = st * std::cos(phi);
        s.dir[1] = st * std::sin(phi);
        s.dir[2] = ct;
        return s.radial();
      };
      auto r = integrate_1d(az, 0.0, 2.0 * pi, inner);
      s.inner_err_max = std::max(s.inner_err_max, r.error / (2.0 * pi));
      return r.value * st;
    };
    auto r = integrate_1d(polar, 0.0, pi, tol);
    out.value = r.value;
    out.error = r.error;
    angular_measure = 4.0 * pi;
  }
  out.error += s.inner_err_max * angular_measure;
  out.n_evals = std::max<std::int64_t>(1, s.evals);
  return out;
}

SphericalPoint spherical_map(double r, std::span<const double> thetas) {
  const int p = static_cast<int>(thetas.size());
  if (p < 1) throw DomainError("spherical_map: need at least one angle");
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("spherical_map: r must be positive");
  SphericalPoint out;
  out.z.resize(p);
  const double c1 = std::cos(thetas[0]);
  out.t = r * r * c1 * c1;
  double jac = 2.0 * std::pow(r, p + 1) * c1;
  double sin_prod = r;
  for (int j = 0; j < p; ++j) {
    const double sj = std::sin(thetas[j]);
    sin_prod *= sj;
    if (j + 1 < p) out.z[j] = sin_prod * std::cos(thetas[j + 1]);
    jac *= std::pow(sj, p - 1 - j);
  }
  out.z[p - 1] = sin_prod;
  out.jacobian = jac;
  return out;
}

// ---------------------------------------------------------------------------

void McSpec::validate() const {
  if (n < 1) throw DomainError("McSpec: n must be >= 1");
  if (block_size < 1) throw DomainError("McSpec: block_size must be >= 1");
}

std::uint64_t McSpec::block_length(std::uint64_t block) const noexcept {
  const std::uint64_t start = block * block_size;
  return std::min(block_size, n - start);
}

Moments Moments::of(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  const double shift = values[0];
  const auto s = simd::shifted_sums(values, shift);
  const double nn = static_cast<double>(values.size());
  m.n = values.size();
  m.mean = shift + s.sum / nn;
  m.m2 = std::max(0.0, s.sumsq - s.sum * s.sum / nn);
  return m;
}

void Moments::merge(const Moments& o) noexcept {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
  const double nt = na + nb;
  const double delta = o.mean - mean;
  mean += delta * (nb / nt);
  m2 += o.m2 + delta * delta * (na * nb / nt);
  n += o.n;
}

EstimateWithError Moments::estimate() const noexcept {
  EstimateWithError e;
  e.value = mean;
  e.method = Method::monte_carlo;
  e.n_evals = static_cast<std::int64_t>(std::max<std::uint64_t>(n, 1));
  e.error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  return e;
}

void for_each_block(const McSpec& spec, const std::function<void(std::uint64_t)>& body) {
  const std::uint64_t blocks = spec.block_count();
  unsigned workers = spec.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.workers;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, blocks));
  if (workers <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto run = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        body(b);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ntglab::numint
