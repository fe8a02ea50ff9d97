#include "ntglab/simd.hpp"

#if defined(NTGLAB_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#define NTGLAB_AVX2 __attribute__((target("avx2")))

namespace ntglab::simd::avx2 {

NTGLAB_AVX2 ShiftedSums shifted_sums(std::span<const double> v, double shift) {
  const std::size_t n = v.size();
  const std::size_t n4 = n - n % 4;
  const __m256d s = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  __m256d acc_sq = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(v.data() + i), s);
    acc = _mm256_add_pd(acc, d);
    acc_sq = _mm256_add_pd(acc_sq, _mm256_mul_pd(d, d));
  }
  alignas(32) double lane[4];
  alignas(32) double lane_sq[4];
  _mm256_store_pd(lane, acc);
  _mm256_store_pd(lane_sq, acc_sq);
  ShiftedSums out;
  out.sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  out.sumsq = (lane_sq[0] + lane_sq[1]) + (lane_sq[2] + lane_sq[3]);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = v[i] - shift;
    out.sum += d;
    out.sumsq += d * d;
  }
  return out;
}

NTGLAB_AVX2 BallCounts paired_ball_counts(const BallBatch& batch, double denom_first, double denom_second) {
  BallCounts out;
  const std::size_t n = batch.n;
  const std::size_t n4 = n - n % 4;
  const __m256d den1 = _mm256_set1_pd(denom_first);
  const __m256d den2 = _mm256_set1_pd(denom_second);
  const double* x = batch.x.data();
  const double* mu = batch.mu.data();
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d d1 = _mm256_setzero_pd();
    __m256d d2 = _mm256_setzero_pd();
    for (int j = 0; j < batch.dim; ++j) {
      const __m256d xj = _mm256_loadu_pd(x + j * n + i);
      const __m256d mj = _mm256_loadu_pd(mu + j * n + i);
      const __m256d a = _mm256_sub_pd(_mm256_div_pd(xj, den1), mj);
      const __m256d b = _mm256_sub_pd(_mm256_div_pd(xj, den2), mj);
      d1 = _mm256_add_pd(d1, _mm256_mul_pd(a, a));
      d2 = _mm256_add_pd(d2, _mm256_mul_pd(b, b));
    }
    const __m256d r2 = _mm256_loadu_pd(batch.radius2.data() + i);
    const int m1 = _mm256_movemask_pd(_mm256_cmp_pd(d1, r2, _CMP_LT_OQ));
    const int m2 = _mm256_movemask_pd(_mm256_cmp_pd(d2, r2, _CMP_LT_OQ));
    out.in_first += __builtin_popcount(m1);
    out.in_second += __builtin_popcount(m2);
    out.only_first += __builtin_popcount(m1 & ~m2);
    out.only_second += __builtin_popcount(m2 & ~m1);
  }
  if (n4 < n) {
    // Remainder with the reference arithmetic.
    BallCounts tail;
    for (std::size_t i = n4; i < n; ++i) {
      double t1 = 0.0;
      double t2 = 0.0;
      for (int j = 0; j < batch.dim; ++j) {
        const double a = x[j * n + i] / denom_first - mu[j * n + i];
        const double b = x[j * n + i] / denom_second - mu[j * n + i];
        t1 = t1 + a * a;
        t2 = t2 + b * b;
      }
      const bool in1 = t1 < batch.radius2[i];
      const bool in2 = t2 < batch.radius2[i];
      tail.in_first += in1;
      tail.in_second += in2;
      tail.only_first += in1 && !in2;
      tail.only_second += in2 && !in1;
    }
    out += tail;
  }
  return out;
}

}  // namespace ntglab::simd::avx2

#endif
