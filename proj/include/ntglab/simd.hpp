#pragma once

// Data-parallel inner loops of the Monte Carlo estimators.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variants perform the same IEEE operations in the same order
// per lane (no FMA contraction), so their results are bit-identical; the
// dispatcher picks one at runtime.

#include <cstddef>
#include <cstdint>
#include <span>

namespace ntglab::simd {

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa) noexcept;

/// Best ISA the running CPU supports.
Isa detected_isa() noexcept;

/// ISA used by the dispatching entry points. Defaults to detected_isa(),
/// unless NTGLAB_SIMD=scalar is set in the environment.
Isa active_isa() noexcept;

/// Overrides the active ISA; requesting an unsupported ISA falls back to scalar.
void set_active_isa(Isa isa) noexcept;

/// Sums of (v - shift) and (v - shift)^2.
///
/// Reduction order: element i goes to lane i mod 4 for the largest multiple
/// of four; lanes combine as (l0 + l1) + (l2 + l3); the remaining tail is
/// added sequentially afterwards.
struct ShiftedSums {
  double sum = 0.0;
  double sumsq = 0.0;
};

/// Paired membership of points mu in two balls of common squared radius,
/// centred at x / denom_first and x / denom_second respectively.
///
/// Coordinates are stored coordinate-major: x[j * n + i] is coordinate j of
/// sample i, likewise for mu; radius2 has n entries.
struct BallBatch {
  int dim = 1;
  std::size_t n = 0;
  std::span<const double> x;
  std::span<const double> mu;
  std::span<const double> radius2;
};

struct BallCounts {
  std::int64_t in_first = 0;
  std::int64_t in_second = 0;
  std::int64_t only_first = 0;
  std::int64_t only_second = 0;

  BallCounts& operator+=(const BallCounts& o) noexcept {
    in_first += o.in_first;
    in_second += o.in_second;
    only_first += o.only_first;
    only_second += o.only_second;
    return *this;
  }
};

ShiftedSums shifted_sums(std::span<const double> v, double shift);
BallCounts paired_ball_counts(const BallBatch& batch, double denom_first, double denom_second);

namespace scalar {
ShiftedSums shifted_sums(std::span<const double> v, double shift);
BallCounts paired_ball_counts(const BallBatch& batch, double denom_first, double denom_second);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define NTGLAB_HAVE_AVX2_KERNELS 1
namespace avx2 {
ShiftedSums shifted_sums(std::span<const double> v, double shift);
BallCounts paired_ball_counts(const BallBatch& batch, double denom_first, double denom_second);
}  // namespace avx2
#endif

}  // namespace ntglab::simd
