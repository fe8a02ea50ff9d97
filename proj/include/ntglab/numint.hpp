#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ntglab/core.hpp"
#include "ntglab/rng.hpp"

namespace ntglab::numint {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Quadrature tolerance: rel/abs error targets; max_iter caps the number of
/// interval bisections.
inline constexpr Tolerance kDefaultQuadTol{1e-10, 1e-14, 2000};

using Fn1 = std::function<double(double)>;
using FnP = std::function<double(std::span<const double>)>;

/// Globally adaptive 21-point Gauss-Kronrod quadrature of f over [a, b].
///
/// Either limit may be infinite. A semi-infinite range [a, inf) is mapped to
/// the unit interval by t = a + u / (1 - u); (-inf, inf) is split at 0.
/// Throws NumericError with the partial result when the bisection budget runs
/// out before the error estimate meets max(abs, rel * |value|).
EstimateWithError integrate_1d(const Fn1& f, double a, double b, const Tolerance& tol = kDefaultQuadTol);

/// Sum of integrate_1d over consecutive pieces [breaks[i], breaks[i+1]].
EstimateWithError integrate_piecewise(const Fn1& f, std::span<const double> breaks,
                                      const Tolerance& tol = kDefaultQuadTol);

/// Integral over [a, b] of f, where f(x) behaves like (x - a)^exponent near a
/// (exponent > -1). Uses x = a + (b - a) v^(1/(exponent+1)), which makes the
/// transformed integrand bounded at v = 0.
EstimateWithError integrate_power_left(const Fn1& f, double a, double b, double exponent,
                                       const Tolerance& tol = kDefaultQuadTol);

/// Integral over R^p, or a ball, in hyperspherical coordinates about `center`.
///
/// `radial_breaks` is an ascending list of radii starting at 0; the integrand
/// may jump across these radii. The last entry may be +inf.
EstimateWithError integrate_spherical(const FnP& f, std::span<const double> center,
                                      std::span<const double> radial_breaks,
                                      const Tolerance& tol = kDefaultQuadTol);

/// Coordinates (t, z) in (0, inf) x R^p for a radius and p angles.
struct SphericalPoint {
  double t = 0.0;
  std::vector<double> z;
  double jacobian = 0.0;
};

/// The map (r, theta_1..theta_p) -> (t, z) with
///   t      = r^2 cos^2(theta_1)
///   z_j    = r sin(theta_1) ... sin(theta_j) cos(theta_{j+1}),  j < p
///   z_p    = r sin(theta_1) ... sin(theta_p)
/// and Jacobian determinant 2 r^(p+1) cos(theta_1) prod_j sin^(p-j)(theta_j).
/// Note t + |z|^2 = r^2.
///
/// Angle ranges: theta_1 in [0, pi/2), theta_i in [0, pi) for 1 < i < p,
/// theta_p in [0, 2 pi). For p = 1 the single angle ranges over (-pi/2, pi/2)
/// so that z covers both half-lines.
SphericalPoint spherical_map(double r, std::span<const double> thetas);

// ---------------------------------------------------------------------------
// Monte Carlo

struct McSpec {
  std::uint64_t n = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  /// Samples per substream. Block b always draws from substream b, so the
  /// result does not depend on `workers`.
  std::uint64_t block_size = 8192;

  void validate() const;
  std::uint64_t block_count() const noexcept { return (n + block_size - 1) / block_size; }
  std::uint64_t block_length(std::uint64_t block) const noexcept;
};

/// Count, mean and centred sum of squares; merged in a fixed order.
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  /// Moments of the given values using the dispatched SIMD reduction.
  static Moments of(std::span<const double> values);
  void merge(const Moments& other) noexcept;
  EstimateWithError estimate() const noexcept;
};

/// Runs body(block_index) for every block on `workers` threads.
void for_each_block(const McSpec& spec, const std::function<void(std::uint64_t)>& body);

/// Runs a per-block function producing K moment accumulators and merges the
/// blocks in index order.
template <std::size_t K, class BlockFn>
std::array<Moments, K> run_blocks(const McSpec& spec, BlockFn&& fn) {
  spec.validate();
  std::vector<std::array<Moments, K>> per_block(spec.block_count());
  for_each_block(spec, [&](std::uint64_t b) {
    rng::Stream stream(spec.seed, b);
    per_block[b] = fn(stream, spec.block_length(b));
  });
  std::array<Moments, K> total{};
  for (const auto& blk : per_block)
    for (std::size_t k = 0; k < K; ++k) total[k].merge(blk[k]);
  return total;
}

/// Sample mean of integrand(sampler(stream)) with standard error sd / sqrt(n).
template <class Sampler, class Integrand>
EstimateWithError mc_estimate(Sampler&& sampler, Integrand&& integrand, const McSpec& spec) {
  auto res = run_blocks<1>(spec, [&](rng::Stream& stream, std::uint64_t count) {
    std::vector<double> values(count);
    for (auto& v : values) v = integrand(sampler(stream));
    return std::array<Moments, 1>{Moments::of(values)};
  });
  return res[0].estimate();
}

struct PairedEstimate {
  EstimateWithError first;
  EstimateWithError second;
  /// second - first on common draws.
  EstimateWithError difference;
};

/// Evaluates two integrands on the same draws and estimates each plus their
/// difference (second - first).
template <class Sampler, class F, class G>
PairedEstimate mc_paired(Sampler&& sampler, F&& first, G&& second, const McSpec& spec) {
  auto res = run_blocks<3>(spec, [&](rng::Stream& stream, std::uint64_t count) {
    std::vector<double> a(count), b(count), d(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto sample = sampler(stream);
      a[i] = first(sample);
      b[i] = second(sample);
      d[i] = b[i] - a[i];
    }
    return std::array<Moments, 3>{Moments::of(a), Moments::of(b), Moments::of(d)};
  });
  return {res[0].estimate(), res[1].estimate(), res[2].estimate()};
}

}  // namespace ntglab::numint
