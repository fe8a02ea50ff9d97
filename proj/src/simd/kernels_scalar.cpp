#include "ntglab/simd.hpp"

namespace ntglab::simd::scalar {

ShiftedSums shifted_sums(std::span<const double> v, double shift) {
  const std::size_t n = v.size();
  const std::size_t n4 = n - n % 4;
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  double lane_sq[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = v[i + k] - shift;
      lane[k] = lane[k] + d;
      lane_sq[k] = lane_sq[k] + d * d;
    }
  }
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

BallCounts paired_ball_counts(const BallBatch& batch, double denom_first, double denom_second) {
  BallCounts out;
  const std::size_t n = batch.n;
  for (std::size_t i = 0; i < n; ++i) {
    double d1 = 0.0;
    double d2 = 0.0;
    for (int j = 0; j < batch.dim; ++j) {
      const double xj = batch.x[j * n + i];
      const double mj = batch.mu[j * n + i];
      const double a = xj / denom_first - mj;
      const double b = xj / denom_second - mj;
      d1 = d1 + a * a;
      d2 = d2 + b * b;
    }
    const bool in1 = d1 < batch.radius2[i];
    const bool in2 = d2 < batch.radius2[i];
    out.in_first += in1;
    out.in_second += in2;
    out.only_first += in1 && !in2;
    out.only_second += in2 && !in1;
  }
  return out;
}

}  // namespace ntglab::simd::scalar
