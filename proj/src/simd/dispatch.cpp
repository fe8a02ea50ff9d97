#include <atomic>
#include <cstdlib>
#include <cstring>

#include "ntglab/simd.hpp"

namespace ntglab::simd {

namespace {

Isa initial_isa() noexcept {
  const char* env = std::getenv("NTGLAB_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::scalar;
  return detected_isa();
}

std::atomic<Isa>& active() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

const char* to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

Isa detected_isa() noexcept {
#if defined(NTGLAB_HAVE_AVX2_KERNELS)
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
  return Isa::scalar;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) noexcept {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
  active().store(isa, std::memory_order_relaxed);
}

ShiftedSums shifted_sums(std::span<const double> v, double shift) {
#if defined(NTGLAB_HAVE_AVX2_KERNELS)
  if (active_isa() == Isa::avx2) return avx2::shifted_sums(v, shift);
#endif
  return scalar::shifted_sums(v, shift);
}

BallCounts paired_ball_counts(const BallBatch& batch, double denom_first, double denom_second) {
#if defined(NTGLAB_HAVE_AVX2_KERNELS)
  if (active_isa() == Isa::avx2) return avx2::paired_ball_counts(batch, denom_first, denom_second);
#endif
  return scalar::paired_ball_counts(batch, denom_first, denom_second);
}

}  // namespace ntglab::simd
