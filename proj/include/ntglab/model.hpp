#pragma once

#include <span>
#include <vector>

namespace ntglab {

using Vec = std::vector<double>;

/// Mean vector and precision (lambda = 1 / sigma^2).
struct LocationScale {
  Vec mu;
  double lambda = 1.0;

  void validate(int p) const;
};

/// Sufficient pair of the location-scale model: x ~ N(mu, sigma^2 I_p) and
/// s / sigma^2 ~ chi^2_m.
struct Observation {
  Vec x;
  double s = 1.0;

  void validate(int p) const;
};

double squared_norm(std::span<const double> v) noexcept;
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace ntglab
