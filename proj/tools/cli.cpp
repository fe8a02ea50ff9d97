#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <json.hpp>
#include <sstream>

#include "ntglab/blyth.hpp"
#include "ntglab/lemmas.hpp"
#include "ntglab/regress.hpp"
#include "ntglab/risk.hpp"

namespace ntglab::cli {

namespace {

using json = nlohmann::ordered_json;
using checks::CheckResult;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json config_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["mc_n"] = cfg.mc_n;
  j["workers"] = cfg.workers;
  j["tolerances"] = {{"rel", cfg.tolerances.rel}, {"abs", cfg.tolerances.abs}, {"max_iter", cfg.tolerances.max_iter}};
  j["output_format"] = cfg.output_format;
  j["output_path"] = cfg.output_path ? json(*cfg.output_path) : json(nullptr);
  return j;
}

numint::McSpec mc_spec(const RunConfig& cfg) {
  numint::McSpec s;
  s.n = cfg.mc_n;
  s.seed = cfg.seed;
  s.workers = cfg.workers;
  return s;
}

// z-score of an estimate against a reference; 0/0 counts as agreement.
double z_score(double estimate, double se, double reference) {
  const double d = estimate - reference;
  if (se > 0.0) return d / se;
  return d == 0.0 ? 0.0 : std::copysign(INFINITY, d);
}

CheckResult within_se(std::string name, double expected, double observed, double se, double k) {
  auto r = checks::compare(std::move(name), expected, observed, k * se, false);
  if (se == 0.0) r.pass = observed == expected;
  return r;
}

void write_output(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (!cfg.output_path) {
    out << text;
    return;
  }
  std::ofstream f(*cfg.output_path, std::ios::binary);
  if (!f) throw std::ios_base::failure("cannot write '" + *cfg.output_path + "'");
  f << text;
  if (!f) throw std::ios_base::failure("write failed for '" + *cfg.output_path + "'");
}

std::string format_or(const RunConfig& cfg, const char* fallback) {
  return cfg.output_format.empty() ? fallback : cfg.output_format;
}

// ----------------------------------------------------------------- verify

std::string render_checks(const RunConfig& cfg, const json& command_cfg, const std::vector<CheckResult>& results) {
  const auto format = format_or(cfg, "json");
  if (format == "csv") {
    std::string s = "check_name,expected,observed,error,tolerance,pass\n";
    for (const auto& r : results)
      s += "\"" + r.name + "\"," + fmt(r.expected) + "," + fmt(r.observed) + "," + fmt(r.error) + "," + fmt(r.tolerance) + "," +
               (r.pass ? "true" : "false") + "\n";
    return s;
  }
  json j;
  j["schema"] = kSchema;
  j["command"] = "verify";
  j["config"] = config_json(cfg);
  j["config"]["verify"] = command_cfg;
  json arr = json::array();
  bool all = true;
  for (const auto& r : results) {
    arr.push_back({{"check_name", r.name},
                   {"expected", r.expected},
                   {"observed", r.observed},
                   {"error", r.error},
                   {"tolerance", r.tolerance},
                   {"relative", r.relative},
                   {"pass", r.pass}});
    all = all && r.pass;
  }
  j["checks"] = arr;
  j["pass"] = all;
  return j.dump(2) + "\n";
}

}  // namespace

std::vector<CheckResult> verify_checks(const RunConfig& cfg, double check_rel_tol, bool inject_fault) {
  std::vector<CheckResult> out;
  auto append = [&out](std::vector<CheckResult> v) { out.insert(out.end(), v.begin(), v.end()); };

  checks::SuiteOptions opt;
  opt.seed = cfg.seed;
  opt.quad = cfg.tolerances;
  opt.rel_tol = check_rel_tol;
  append(checks::conjugacy(opt));
  append(checks::marginals(opt));
  append(checks::q_identity(cfg.seed, 100, {0.1, 1.0}));

  struct BigCase {
    int p;
    double a, b, g;
  };
  for (const auto& c : {BigCase{1, 0, 0, 1}, BigCase{2, 1, 1, 3}, BigCase{3, 1, 0, 3}}) {
    const auto r = numint::lemma_bigint_check(c.p, c.a, c.b, c.g, cfg.tolerances);
    std::ostringstream name;
    name << "bigint[p=" << c.p << ",alpha=" << c.a << ",beta=" << c.b << ",gamma=" << c.g << "]";
    out.push_back(checks::compare(name.str(), r.closed, r.numeric.value, 1e-4, true));
  }
  out.push_back(checks::compare("bigint_closed_is_pi[p=2,alpha=1,beta=1,gamma=3]", std::numbers::pi,
                                numint::lemma_bigint_check(2, 1, 1, 3, cfg.tolerances).closed, 1e-15, true));

  for (const auto& [p, g] : {std::pair{1, 1.0}, std::pair{2, 1.0}, std::pair{2, 2.0}}) {
    const auto rows = numint::lemma_d_check(p, g, {1e-1, 1e-2, 1e-3}, cfg.tolerances);
    std::ostringstream name;
    name << "cone_ratio[p=" << p << ",gamma=" << g << ",delta=0.001]";
    out.push_back(checks::compare(name.str(), rows.back().limit, rows.back().ratio.value, 0.05, true));
  }

  const auto spec = mc_spec(cfg);
  const auto sm = numint::lemma_smoments_check(2, 2, 0.5, 1.0, spec);
  out.push_back(within_se("smoments[p=2,m=2,eps=1,kappa=0.5]", sm.closed, sm.numeric.value, sm.numeric.error, 3.0));
  const auto sa = numint::lemma_smoments_check(2, 2, 0.1, 1.0, spec);
  const auto sb = numint::lemma_smoments_check(2, 2, 1.0, 1.0, spec);
  out.push_back(within_se("smoments_kappa_stable[p=2,m=2,eps=1,kappa=0.1:1]", sa.numeric.value, sb.numeric.value,
                          std::hypot(sa.numeric.error, sb.numeric.error), 3.0));

  const auto ctx = blyth::BlythContext::make(2, 2, 2.0, 1.0, 1.0);
  const auto rd = risk::risk_difference_mc(ctx, spec);
  out.push_back(within_se("risk_difference[p=2,m=2,c=2,kappa=1]", risk::risk_difference_closed(ctx),
                          rd.difference.value, rd.difference.error, 4.0));
  for (double eps : {0.5, 2.0}) {
    const auto other = risk::risk_difference_mc(blyth::BlythContext::make(2, 2, 2.0, 1.0, eps), spec);
    std::ostringstream name;
    name << "risk_difference_eps_invariant[p=2,m=2,c=2,kappa=1,eps=" << eps << "]";
    out.push_back(within_se(name.str(), rd.difference.value, other.difference.value,
                            std::hypot(rd.difference.error, other.difference.error), 3.0));
  }

  if (inject_fault && !out.empty()) {
    auto& r = out.front();
    r.observed *= 1.0 + 1e-3;
    r = checks::compare(r.name, r.expected, r.observed, r.tolerance, r.relative);
  }
  return out;
}

namespace {

int cmd_verify(const RunConfig& cfg, double check_rel_tol, bool inject_fault, std::ostream& out) {
  const auto results = verify_checks(cfg, check_rel_tol, inject_fault);
  const json command_cfg = {{"check_rel_tol", check_rel_tol}, {"inject_fault", inject_fault}};
  write_output(cfg, render_checks(cfg, command_cfg, results), out);
  const bool all = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
  return all ? kPass : kCheckFailure;
}

// -------------------------------------------------------------- risk-diff

struct RiskDiffArgs {
  int p = 1;
  int m = 1;
  std::optional<double> c;
  double level = 0.95;
  double kappa = 0.0;
  double eps = 1.0;
  bool eps_sweep = false;
};

json estimate_json(const EstimateWithError& e) {
  return {{"value", e.value}, {"se", e.error}, {"n", e.n_evals}, {"method", to_string(e.method)}};
}

int cmd_risk_diff(const RunConfig& cfg, const RiskDiffArgs& a, std::ostream& out) {
  if (cfg.mc_n < 1000) throw UsageError("risk-diff: --mc-n must be at least 1000");
  const double c = a.c ? *a.c : risk::radius_constant(a.p, a.m, a.level);
  const auto spec = mc_spec(cfg);
  const std::vector<double> eps_list = a.eps_sweep ? std::vector<double>{0.5, 1.0, 2.0} : std::vector<double>{a.eps};

  struct Row {
    double eps;
    numint::PairedEstimate est;
    double z;
  };
  std::vector<Row> rows;
  const double closed = risk::risk_difference_closed(a.p, a.m, c, a.kappa);
  for (double eps : eps_list) {
    const auto ctx = blyth::BlythContext::make(a.p, a.m, c, a.kappa, eps);
    const auto est = risk::risk_difference_mc(ctx, spec);
    rows.push_back({eps, est, z_score(est.difference.value, est.difference.error, closed)});
  }
  double max_z = 0.0;
  for (const auto& r : rows) max_z = std::max(max_z, std::abs(r.z));
  double max_pair_z = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const auto& x = rows[i].est.difference;
      const auto& y = rows[j].est.difference;
      max_pair_z = std::max(max_pair_z, std::abs(z_score(x.value, std::hypot(x.error, y.error), y.value)));
    }
  const bool pass = max_z <= 4.0 && max_pair_z <= 4.0;

  const auto format = format_or(cfg, "text");
  std::string text;
  if (format == "json") {
    json j;
    j["schema"] = kSchema;
    j["command"] = "risk-diff";
    j["config"] = config_json(cfg);
    j["config"]["risk_diff"] = {{"p", a.p},     {"m", a.m},         {"c", c},
                                {"level", a.c ? json(nullptr) : json(a.level)},
                                {"kappa", a.kappa}, {"eps", a.eps}, {"eps_sweep", a.eps_sweep}};
    j["closed"] = closed;
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"eps", r.eps},
                     {"coverage_phi0", estimate_json(r.est.first)},
                     {"coverage_phi_kappa", estimate_json(r.est.second)},
                     {"difference", estimate_json(r.est.difference)},
                     {"z", r.z}});
    j["estimates"] = arr;
    j["max_abs_z"] = max_z;
    if (a.eps_sweep) j["max_pairwise_abs_z"] = max_pair_z;
    if (a.kappa > 0.0) j["K_times_closed"] = blyth::big_K(blyth::BlythContext::make(a.p, a.m, c, a.kappa, a.eps)) * closed;
    j["pass"] = pass;
    text = j.dump(2) + "\n";
  } else if (format == "csv") {
    text = "p,m,c,kappa,eps,closed,mc,se,z\n";
    for (const auto& r : rows)
      text += std::to_string(a.p) + "," + std::to_string(a.m) + "," + fmt(c) + "," + fmt(a.kappa) + "," + fmt(r.eps) +
              "," + fmt(closed) + "," + fmt(r.est.difference.value) + "," + fmt(r.est.difference.error) + "," +
              fmt(r.z) + "\n";
  } else {
    std::ostringstream os;
    os << "p=" << a.p << " m=" << a.m << " c=" << fmt(c) << " kappa=" << fmt(a.kappa) << " mc_n=" << cfg.mc_n
       << " seed=" << cfg.seed << "\n";
    os << "closed " << fmt(closed) << "\n";
    for (const auto& r : rows)
      os << "eps=" << fmt(r.eps) << " mc " << fmt(r.est.difference.value) << " se " << fmt(r.est.difference.error)
         << " z " << fmt(r.z) << "\n";
    if (a.eps_sweep) os << "max pairwise |z| " << fmt(max_pair_z) << "\n";
    os << (pass ? "PASS" : "FAIL") << "\n";
    text = os.str();
  }
  write_output(cfg, text, out);
  return pass ? kPass : kCheckFailure;
}

// ------------------------------------------------------------------ blyth

struct BlythArgs {
  int p = 2;
  int m = 2;
  std::optional<double> c;
  double level = 0.95;
  double eps = 1.0;
  std::vector<double> kappa_grid{0.2, 0.1, 0.05, 0.025};
};

int cmd_blyth(const RunConfig& cfg, const BlythArgs& a, std::ostream& out) {
  const double c = a.c ? *a.c : risk::radius_constant(a.p, a.m, a.level);
  const auto rows = risk::blyth_scaling(a.p, a.m, c, a.eps, a.kappa_grid);
  const auto format = format_or(cfg, "csv");
  std::string text;
  if (format == "json") {
    json j;
    j["schema"] = kSchema;
    j["command"] = "blyth";
    j["config"] = config_json(cfg);
    j["config"]["blyth"] = {{"p", a.p},         {"m", a.m},     {"c", c}, {"level", a.c ? json(nullptr) : json(a.level)},
                            {"eps", a.eps}, {"kappa_grid", a.kappa_grid}};
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"kappa", r.kappa}, {"K", r.big_k}, {"delta_closed", r.delta}, {"K_times_delta", r.k_times_delta}});
    j["rows"] = arr;
    text = j.dump(2) + "\n";
  } else if (format == "csv") {
    text = "kappa,K,delta_closed,K_times_delta\n";
    for (const auto& r : rows)
      text += fmt(r.kappa) + "," + fmt(r.big_k) + "," + fmt(r.delta) + "," + fmt(r.k_times_delta) + "\n";
  } else {
    throw UsageError("blyth: --format must be csv or json");
  }
  write_output(cfg, text, out);
  return kPass;
}

// ---------------------------------------------------------------- regress

struct RegressArgs {
  std::string csv;
  std::string response = "y";
  int coef_count = 1;
  double level = 0.95;
  bool intercept = true;
  bool json_out = false;
};

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

int cmd_regress(const RunConfig& cfg, const RegressArgs& a, std::ostream& out) {
  if (a.coef_count < 1 || a.coef_count > 2) throw UsageError("regress: --coef-count must be 1 or 2");
  if (!(a.level > 0.0 && a.level < 1.0)) throw UsageError("regress: --level must lie in (0, 1)");
  const auto data = regress::load_csv(a.csv, {a.response, a.intercept});
  const auto fit = regress::ols(data, a.coef_count);
  const auto region = regress::standard_region(fit, a.level);
  const auto red = regress::reduce_to_location_scale(fit);

  const auto format = a.json_out ? std::string("json") : format_or(cfg, "text");
  std::string text;
  if (format == "json") {
    json j;
    j["schema"] = kSchema;
    j["command"] = "regress";
    j["config"] = config_json(cfg);
    j["config"]["regress"] = {{"csv", a.csv},     {"response", a.response}, {"coef_count", a.coef_count},
                              {"level", a.level}, {"intercept", a.intercept}};
    j["names"] = data.names;
    j["beta_hat"] = std::vector<double>(fit.beta_hat.data(), fit.beta_hat.data() + fit.beta_hat.size());
    j["sigma2_hat"] = fit.sigma2_hat;
    j["m"] = fit.m;
    j["c"] = region.c;
    if (fit.p == 1) {
      j["interval"] = {region.interval.first, region.interval.second};
    } else {
      j["ellipse"] = {{"center", std::vector<double>(region.center.data(), region.center.data() + region.center.size())},
                      {"shape", matrix_json(region.shape)},
                      {"threshold", region.threshold}};
    }
    j["reduced"] = {{"x", red.obs.x}, {"s", red.obs.s}, {"m", red.m}};
    text = j.dump(2) + "\n";
  } else if (format == "csv") {
    text = "name,beta_hat\n";
    for (std::size_t i = 0; i < data.names.size(); ++i)
      text += data.names[i] + "," + fmt(fit.beta_hat[static_cast<Eigen::Index>(i)]) + "\n";
  } else {
    std::ostringstream os;
    for (std::size_t i = 0; i < data.names.size(); ++i)
      os << "beta_hat[" << data.names[i] << "] " << fmt(fit.beta_hat[static_cast<Eigen::Index>(i)]) << "\n";
    os << "sigma2_hat " << fmt(fit.sigma2_hat) << "\n";
    os << "m " << fit.m << "\n";
    os << "c " << fmt(region.c) << "\n";
    if (fit.p == 1) {
      os << "interval " << fmt(region.interval.first) << " " << fmt(region.interval.second) << "\n";
    } else {
      os << "center " << fmt(region.center[0]) << " " << fmt(region.center[1]) << "\n";
      os << "shape " << fmt(region.shape(0, 0)) << " " << fmt(region.shape(0, 1)) << " " << fmt(region.shape(1, 1))
         << "\n";
      os << "threshold " << fmt(region.threshold) << "\n";
    }
    text = os.str();
  }
  write_output(cfg, text, out);
  return kPass;
}

std::uint64_t seed_from_env() {
  const char* env = std::getenv("NTGLAB_SEED");
  if (!env || !*env) return 1;
  const std::string s(env);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used, 0);
  } catch (const std::exception&) {
    throw UsageError("NTGLAB_SEED is not an unsigned integer: '" + s + "'");
  }
  if (used != s.size() || s.front() == '-') throw UsageError("NTGLAB_SEED is not an unsigned integer: '" + s + "'");
  return v;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks for the normal-truncated-gamma prior and ball confidence procedures", "ntglab"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::optional<std::uint64_t> seed;
  std::string output;
  app.add_option("--seed", seed, "Master seed (default: $NTGLAB_SEED, else 1)");
  app.add_option("--mc-n", cfg.mc_n, "Monte Carlo sample size")->check(CLI::PositiveNumber);
  app.add_option("--workers", cfg.workers, "Monte Carlo worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", cfg.output_format, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option("--output,-o", output, "Write the report to this file");
  app.add_option("--quad-rel", cfg.tolerances.rel, "Quadrature relative tolerance");
  app.add_option("--quad-abs", cfg.tolerances.abs, "Quadrature absolute tolerance");
  app.add_option("--quad-max-iter", cfg.tolerances.max_iter, "Quadrature subdivision limit");

  auto* verify = app.add_subcommand("verify", "Run the identity checks and write a JSON report");
  double check_rel_tol = 1e-5;
  bool inject_fault = false;
  verify->add_option("--check-rel-tol", check_rel_tol, "Relative tolerance of the density checks");
  verify->add_flag("--inject-fault", inject_fault, "Corrupt one observed value (exercises the failure path)");

  RiskDiffArgs rd;
  auto* risk_diff = app.add_subcommand("risk-diff", "Closed-form vs Monte Carlo risk difference");
  risk_diff->add_option("--p", rd.p, "Dimension")->check(CLI::PositiveNumber);
  risk_diff->add_option("--m", rd.m, "Degrees of freedom of s")->check(CLI::PositiveNumber);
  auto* rd_c = risk_diff->add_option("--c", rd.c, "Radius constant")->check(CLI::PositiveNumber);
  risk_diff->add_option("--level", rd.level, "Coverage level fixing c")->check(CLI::Range(0.0, 1.0))->excludes(rd_c);
  risk_diff->add_option("--kappa", rd.kappa, "Prior precision ratio")->check(CLI::NonNegativeNumber);
  risk_diff->add_option("--eps", rd.eps, "Precision truncation")->check(CLI::PositiveNumber);
  risk_diff->add_flag("--eps-sweep", rd.eps_sweep, "Compare eps in {0.5, 1, 2} on a common seed");

  BlythArgs ba;
  auto* blyth_cmd = app.add_subcommand("blyth", "K-scaled risk difference over a kappa grid (CSV)");
  blyth_cmd->add_option("--p", ba.p, "Dimension")->check(CLI::PositiveNumber);
  blyth_cmd->add_option("--m", ba.m, "Degrees of freedom of s")->check(CLI::PositiveNumber);
  auto* b_c = blyth_cmd->add_option("--c", ba.c, "Radius constant")->check(CLI::PositiveNumber);
  blyth_cmd->add_option("--level", ba.level, "Coverage level fixing c")->check(CLI::Range(0.0, 1.0))->excludes(b_c);
  blyth_cmd->add_option("--eps", ba.eps, "Precision truncation")->check(CLI::PositiveNumber);
  blyth_cmd->add_option("--kappa-grid", ba.kappa_grid, "Kappa values")->delimiter(',')->check(CLI::PositiveNumber);

  RegressArgs ra;
  auto* reg = app.add_subcommand("regress", "OLS fit and the standard confidence region");
  reg->add_option("--csv", ra.csv, "Input CSV with a header row")->required();
  reg->add_option("--response", ra.response, "Name of the response column");
  reg->add_option("--coef-count", ra.coef_count, "Number of leading coefficients of interest (1 or 2)");
  reg->add_option("--level", ra.level, "Confidence level");
  reg->add_flag("--intercept,!--no-intercept", ra.intercept, "Prepend an intercept column (default on)");
  reg->add_flag("--json", ra.json_out, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "ntglab: " << e.what() << "\n";
    return kUsage;
  }

  try {
    cfg.seed = seed ? *seed : seed_from_env();
    if (!output.empty()) cfg.output_path = output;
    cfg.tolerances.validate();
    if (verify->parsed()) {
      if (cfg.output_format == "text") throw UsageError("verify: --format must be json or csv");
      return cmd_verify(cfg, check_rel_tol, inject_fault, out);
    }
    if (risk_diff->parsed()) return cmd_risk_diff(cfg, rd, out);
    if (blyth_cmd->parsed()) return cmd_blyth(cfg, ba, out);
    if (reg->parsed()) return cmd_regress(cfg, ra, out);
  } catch (const UsageError& e) {
    err << "ntglab: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "ntglab: " << e.what() << "\n";
    return kUsage;
  } catch (const std::ios_base::failure& e) {
    err << "ntglab: " << e.what() << "\n";
    return kIoError;
  } catch (const regress::ParseError& e) {
    err << "ntglab: " << e.what() << "\n";
    return kIoError;
  } catch (const DataError& e) {
    err << "ntglab: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericError& e) {
    err << "ntglab: " << e.what() << "\n";
    return kCheckFailure;
  }
  return kUsage;
}

}  // namespace ntglab::cli
