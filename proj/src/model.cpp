#include "ntglab/model.hpp"

#include <cmath>
#include <string>

#include "ntglab/core.hpp"

namespace ntglab {

namespace {
void check_vector(std::span<const double> v, int p, const char* what) {
  if (static_cast<int>(v.size()) != p)
    throw DomainError(std::string(what) + ": expected length " + std::to_string(p) + ", got " +
                      std::to_string(v.size()));
  for (double e : v)
    if (!std::isfinite(e)) throw DomainError(std::string(what) + ": non-finite component");
}
}  // namespace

void LocationScale::validate(int p) const {
  check_vector(mu, p, "LocationScale.mu");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("LocationScale: lambda must be positive");
}

void Observation::validate(int p) const {
  check_vector(x, p, "Observation.x");
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("Observation: s must be positive");
}

double squared_norm(std::span<const double> v) noexcept {
  double acc = 0.0;
  for (double e : v) acc += e * e;
  return acc;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace ntglab
