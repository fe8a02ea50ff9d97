#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ntglab/core.hpp"
#include "ntglab/model.hpp"

namespace ntglab::regress {

/// Malformed CSV input; row and column are 1-based (row 1 is the header),
/// 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int row, int column);
  int row() const noexcept { return row_; }
  int column() const noexcept { return column_; }

 private:
  int row_;
  int column_;
};

struct RegressionData {
  Eigen::MatrixXd Z;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

struct OlsFit {
  Eigen::VectorXd beta_hat;
  double sigma2_hat = 0.0;
  /// Leading p x p block of (Z'Z)^-1.
  Eigen::MatrixXd S_p;
  int m = 0;
  int p = 1;
};

/// Pivot threshold of the rank check: the smallest pivot of the column-pivoted
/// QR must exceed this times the largest.
inline constexpr double kRankThreshold = 1e-10;

/// Least squares fit; p in {1, 2} selects the leading coefficients of interest.
/// Throws DataError when n <= d or Z is rank deficient.
OlsFit ols(const RegressionData& data, int p, double rank_threshold = kRankThreshold);

enum class Factor { cholesky, symmetric };

/// T with T S T' = I: the inverse lower Cholesky factor of S, or the
/// symmetric inverse square root.
Eigen::MatrixXd whitening_factor(const Eigen::MatrixXd& S, Factor kind = Factor::cholesky);

struct Reduced {
  Observation obs;
  int m = 0;
  Eigen::MatrixXd T;
};

/// x = T beta_hat_(p), s = (n - d) sigma2_hat.
Reduced reduce_to_location_scale(const OlsFit& fit, Factor kind = Factor::cholesky);

/// The set of beta_(p) with (beta - beta_hat)' S_p^-1 (beta - beta_hat) < c sigma2_hat.
struct StandardRegion {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  double c = 0.0;
  double threshold = 0.0;
  /// For p = 1: beta_hat_1 -+ sqrt(threshold S_11).
  std::pair<double, double> interval{0.0, 0.0};

  bool contains(const Eigen::VectorXd& beta) const;
};

/// c = p F^-1_{p,m}(level).
StandardRegion standard_region(const OlsFit& fit, double level);

struct CsvOptions {
  std::string response;
  bool intercept = false;
};

/// Header line, then numeric rows. The response column is selected by name;
/// the remaining columns form Z in file order, after an optional intercept.
RegressionData load_csv(const std::string& path, const CsvOptions& opts);
RegressionData parse_csv(const std::string& text, const CsvOptions& opts);

}  // namespace ntglab::regress
