#include "ntglab/regress.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ntglab/specfun.hpp"

namespace ntglab::regress {

ParseError::ParseError(const std::string& what, int row, int column)
    : std::runtime_error(what + (row > 0 ? " (row " + std::to_string(row) +
                                               (column > 0 ? ", column " + std::to_string(column) : "") + ")"
                                         : "")),
      row_(row),
      column_(column) {}

OlsFit ols(const RegressionData& data, int p, double rank_threshold) {
  const auto n = data.Z.rows();
  const auto d = data.Z.cols();
  if (p < 1 || p > 2) throw DomainError("ols: p must be 1 or 2");
  if (d < p) throw DataError("ols: fewer columns than coefficients of interest");
  if (data.y.size() != n) throw DataError("ols: y and Z differ in length");
  if (n <= d) throw DataError("ols: need more rows than columns");
  if (!data.Z.allFinite() || !data.y.allFinite()) throw DataError("ols: non-finite data");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.Z);
  qr.setThreshold(rank_threshold);
  if (qr.rank() < d) throw DataError("ols: design matrix is rank deficient");

  OlsFit fit;
  fit.p = p;
  fit.m = static_cast<int>(n - d);
  fit.beta_hat = qr.solve(data.y);
  const Eigen::VectorXd resid = data.y - data.Z * fit.beta_hat;
  fit.sigma2_hat = resid.squaredNorm() / fit.m;

  // (Z'Z)^-1 = P R^-1 R^-T P'.
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(d, d).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::MatrixXd inner = Rinv * Rinv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd zz_inv = perm * inner * perm.transpose();
  fit.S_p = zz_inv.topLeftCorner(p, p);
  fit.S_p = 0.5 * (fit.S_p + fit.S_p.transpose()).eval();
  return fit;
}

Eigen::MatrixXd whitening_factor(const Eigen::MatrixXd& S, Factor kind) {
  if (S.rows() != S.cols() || S.rows() == 0) throw DomainError("whitening_factor: S must be square");
  if (kind == Factor::cholesky) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) throw DataError("whitening_factor: S is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    return L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
    throw DataError("whitening_factor: S is not positive definite");
  return es.operatorInverseSqrt();
}

Reduced reduce_to_location_scale(const OlsFit& fit, Factor kind) {
  Reduced out;
  out.T = whitening_factor(fit.S_p, kind);
  const Eigen::VectorXd x = out.T * fit.beta_hat.head(fit.p);
  out.obs.x.assign(x.data(), x.data() + x.size());
  out.obs.s = fit.m * fit.sigma2_hat;
  out.m = fit.m;
  return out;
}

bool StandardRegion::contains(const Eigen::VectorXd& beta) const {
  if (beta.size() != center.size()) throw DomainError("StandardRegion::contains: wrong dimension");
  const Eigen::VectorXd d = beta - center;
  const double q = d.dot(shape.llt().solve(d));
  return q < threshold;
}

StandardRegion standard_region(const OlsFit& fit, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("standard_region: level must lie in (0, 1)");
  StandardRegion r;
  r.center = fit.beta_hat.head(fit.p);
  r.shape = fit.S_p;
  r.c = fit.p * specfun::f_quantile(fit.p, fit.m, level);
  r.threshold = r.c * fit.sigma2_hat;
  if (fit.p == 1) {
    const double half = std::sqrt(r.threshold * fit.S_p(0, 0));
    r.interval = {r.center[0] - half, r.center[0] + half};
  }
  return r;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& cell, int row, int col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw ParseError("non-numeric cell '" + cell + "'", row, col);
  return v;
}

}  // namespace

RegressionData parse_csv(const std::string& text, const CsvOptions& opts) {
  std::istringstream in(text);
  std::string line;
  int row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("empty file", 0, 0);
  const auto it = std::find(header.begin(), header.end(), opts.response);
  if (it == header.end()) throw ParseError("response column '" + opts.response + "' not found", row, 0);
  const auto resp = static_cast<std::size_t>(it - header.begin());

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()),
                       row, 0);
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) vals[j] = parse_number(cells[j], row, static_cast<int>(j + 1));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError("no data rows", row, 0);

  RegressionData data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto extra = opts.intercept ? 1 : 0;
  const auto d = static_cast<Eigen::Index>(header.size() - 1 + extra);
  data.Z.resize(n, d);
  data.y.resize(n);
  if (opts.intercept) data.names.push_back("(intercept)");
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != resp) data.names.push_back(header[j]);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    Eigen::Index k = 0;
    if (opts.intercept) data.Z(i, k++) = 1.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j == resp)
        data.y[i] = r[j];
      else
        data.Z(i, k++) = r[j];
    }
  }
  return data;
}

RegressionData load_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream f(path);
  if (!f) throw std::ios_base::failure("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), opts);
}

}  // namespace ntglab::regress
