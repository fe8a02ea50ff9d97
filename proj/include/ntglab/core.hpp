#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace ntglab {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative method failed to reach its tolerance. Carries whatever the
/// method had when it gave up so callers can decide whether it is usable.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double partial, double error_estimate,
               std::optional<std::pair<double, double>> bracket = std::nullopt)
      : std::runtime_error(what),
        partial_(partial),
        error_estimate_(error_estimate),
        bracket_(bracket) {}

  double partial() const noexcept { return partial_; }
  double error_estimate() const noexcept { return error_estimate_; }
  const std::optional<std::pair<double, double>>& bracket() const noexcept { return bracket_; }

 private:
  double partial_;
  double error_estimate_;
  std::optional<std::pair<double, double>> bracket_;
};

/// Input data that cannot be used (rank deficiency, too few rows, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tolerance {
  double rel = 1e-10;
  double abs = 1e-14;
  int max_iter = 200;

  /// Throws DomainError unless rel > 0, abs > 0 and max_iter >= 1.
  void validate() const;
};

enum class Method { quadrature, monte_carlo };

const char* to_string(Method m) noexcept;

/// A numeric result with its error: a standard error for Monte Carlo, an
/// error bound estimate for quadrature.
struct EstimateWithError {
  double value = 0.0;
  double error = 0.0;
  std::int64_t n_evals = 1;
  Method method = Method::quadrature;
};

}  // namespace ntglab
