#include "ntglab/core.hpp"

#include <cmath>

namespace ntglab {

void Tolerance::validate() const {
  if (!(rel > 0.0) || !std::isfinite(rel)) throw DomainError("Tolerance: rel must be positive");
  if (!(abs > 0.0) || !std::isfinite(abs)) throw DomainError("Tolerance: abs must be positive");
  if (max_iter < 1) throw DomainError("Tolerance: max_iter must be >= 1");
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::quadrature:
      return "quadrature";
    case Method::monte_carlo:
      return "monte_carlo";
  }
  return "unknown";
}

}  // namespace ntglab
