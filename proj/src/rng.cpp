#include "ntglab/rng.hpp"

namespace ntglab::rng {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  std::uint64_t t = a ^ (stream * 0xD1B54A32D192ED03ULL);
  splitmix64(t);
  return splitmix64(t);
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_id) : engine_(derive_seed(seed, stream_id)) {}

double Stream::uniform_open() noexcept {
  // 53 random bits, offset by half an ulp so neither endpoint is reachable.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() { return normal_(engine_); }

double Stream::chi_square_sum(int dof) {
  double acc = 0.0;
  for (int i = 0; i < dof; ++i) {
    const double z = normal_(engine_);
    acc += z * z;
  }
  return acc;
}

}  // namespace ntglab::rng
