#pragma once

#include <cstdint>
#include <random>

namespace ntglab::rng {

/// One step of SplitMix64; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Seed of substream `stream` under master seed `seed`. Distinct streams get
/// decorrelated seeds; the mapping is fixed so results never depend on which
/// worker consumes which stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// An owned generator state. Not thread-safe; give each worker its own.
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t stream_id = 0);

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept;
  double normal();
  /// Sum of `dof` squared standard normals.
  double chi_square_sum(int dof);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace ntglab::rng
