#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scoretest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 424243;
  double runs_scale = 1.0;  // < 1 shrinks Monte Carlo sizes (tolerances follow)
  int threads = 0;
};

// The full battery: exactness, distribution shape, familywise error control,
// quantile and eigen identities, gene-set rule replay and planted recovery.
std::vector<CheckResult> run_all_checks(const VerifyOptions& opts = {});

CheckResult check_example2_reproduction(const VerifyOptions& opts = {});
CheckResult check_exact_level_all_designs(const VerifyOptions& opts = {});
CheckResult check_null_shape_all_designs(const VerifyOptions& opts = {});
CheckResult check_fwe_sequential(const VerifyOptions& opts = {});
CheckResult check_beta_t_identity(const VerifyOptions& opts = {});
CheckResult check_dual_primal_equivalence(const VerifyOptions& opts = {});
CheckResult check_lambda_beta_identity(const VerifyOptions& opts = {});
CheckResult check_gene_set_replay(const VerifyOptions& opts = {});
CheckResult check_planted_recovery(const VerifyOptions& opts = {});

}  // namespace scoretest
