#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ntglab/checks.hpp"
#include "ntglab/core.hpp"

namespace ntglab::cli {

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kIoError = 2, kUsage = 64 };

inline constexpr const char* kSchema = "ntg-lab/1";

struct RunConfig {
  std::uint64_t seed = 1;
  std::uint64_t mc_n = 1000000;
  unsigned workers = 1;
  Tolerance tolerances{1e-9, 1e-14, 4000};
  /// Empty means the command's own default.
  std::string output_format;
  std::optional<std::string> output_path;
};

/// All checks run by `verify`. `inject_fault` corrupts one observed value.
std::vector<checks::CheckResult> verify_checks(const RunConfig& cfg, double check_rel_tol, bool inject_fault);

/// Runs one command; argv[0] is the program name. Returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ntglab::cli
