#include "scoretest/verify.hpp"

#include "scoretest/beta.hpp"
#include "scoretest/errors.hpp"
#include "scoretest/linalg.hpp"
#include "scoretest/model_choice.hpp"
#include "scoretest/numeric_ref.hpp"
#include "scoretest/score_tests.hpp"
#include "scoretest/simulate.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>
#include <tuple>

namespace scoretest {

namespace {

long scaled_runs(long base, double scale, long floor_runs) {
  return std::max(floor_runs, static_cast<long>(std::llround(base * scale)));
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return std::string(buf);
}

ProjectionPair fixed_general_pair(int n, int f, int f_H, std::uint64_t seed) {
  RngStream rng(seed);
  Eigen::MatrixXd G(n, f);
  rng.fill_normal(G);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  const Eigen::MatrixXd U = Eigen::MatrixXd(qr.householderQ()).leftCols(f);
  const Eigen::MatrixXd UH = U.leftCols(f_H);
  return validate_projection_pair(U * U.transpose(), UH * UH.transpose());
}

TargetVector centered_ramp(int n) {
  Eigen::VectorXd y(n);
  for (int j = 0; j < n; ++j) y[j] = j - (n - 1) / 2.0;
  return TargetVector{std::move(y), true};
}

struct DesignCase {
  std::string name;
  DesignPtr design;
  int n;
  int p;
};

// The four null-level designs exercised by the exactness and shape checks.
std::vector<DesignCase> design_cases(std::uint64_t seed) {
  std::vector<DesignCase> cases;
  cases.push_back({"one-group", std::make_shared<Design>(Design::one_group()), 10, 5});
  cases.push_back({"two-group", std::make_shared<Design>(Design::two_group(6, 8)), 14, 12});
  cases.push_back(
      {"correlation", std::make_shared<Design>(Design::correlation(centered_ramp(15))), 15, 20});
  cases.push_back({"general-f10-fH2",
                   std::make_shared<Design>(Design::general(fixed_general_pair(12, 10, 2, seed))),
                   12, 6});
  return cases;
}

struct BatteryEntry {
  std::string name;
  std::vector<double> b1;  // score-1 statistics under the null
  BetaParams params;
  long runs = 0;
};

std::vector<BatteryEntry> run_null_battery(const VerifyOptions& opts) {
  const long runs = scaled_runs(100000, opts.runs_scale, 2000);
  std::vector<BatteryEntry> out;
  std::uint64_t idx = 0;
  for (const DesignCase& dc : design_cases(opts.seed)) {
    SimConfig cfg;
    cfg.n = dc.n;
    cfg.p = dc.p;
    cfg.runs = runs;
    cfg.alpha = 0.05;
    cfg.seed = opts.seed + 101 * ++idx;
    cfg.threads = opts.threads;
    cfg.scenario.design = dc.design;
    cfg.scenario.rule = WeightRule::Pca;
    cfg.scenario.num_scores = 1;
    NullSimSamples samples = run_null_sim(cfg);
    out.push_back({dc.name, std::move(samples.b_samples.front()), samples.null_params, runs});
  }
  return out;
}

CheckResult eval_exact_level(const std::vector<BatteryEntry>& battery) {
  CheckResult res;
  res.name = "exact-level-all-designs";
  res.passed = true;
  std::ostringstream detail;
  for (const BatteryEntry& entry : battery) {
    for (double alpha : {0.05, 0.01}) {
      const double threshold = beta_quantile(1.0 - alpha, entry.params);
      long hits = 0;
      for (double b : entry.b1)
        if (b >= threshold) ++hits;
      const double freq = static_cast<double>(hits) / entry.runs;
      const double tol = 3.0 * std::sqrt(alpha * (1.0 - alpha) / entry.runs);
      const bool ok = std::abs(freq - alpha) <= tol;
      res.passed = res.passed && ok;
      detail << fmt("%s a=%.2f f=%.5f tol=%.5f%s; ", entry.name.c_str(), alpha, freq, tol,
                    ok ? "" : " FAIL");
    }
  }
  res.detail = detail.str();
  return res;
}

CheckResult eval_null_shape(const std::vector<BatteryEntry>& battery) {
  CheckResult res;
  res.name = "null-shape-ks";
  res.passed = true;
  std::ostringstream detail;
  for (const BatteryEntry& entry : battery) {
    const BetaParams params = entry.params;
    const double d = ks_statistic(
        entry.b1, [&params](double x) { return beta_cdf(std::clamp(x, 0.0, 1.0), params); });
    const double crit = ks_critical_value(0.001, static_cast<double>(entry.b1.size()));
    const bool ok = d <= crit;
    res.passed = res.passed && ok;
    detail << fmt("%s D=%.5f crit=%.5f%s; ", entry.name.c_str(), d, crit, ok ? "" : " FAIL");
  }
  res.detail = detail.str();
  return res;
}

// Bit-exact serialization of a gene-set sequence for determinism comparison.
std::string serialize_sets(const GeneSetSequence& seq) {
  std::ostringstream os;
  auto hex = [&os](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    os << std::hex << bits << std::dec << ",";
  };
  os << seq.derived_from << "|";
  for (int s : seq.skipped_columns) os << s << ",";
  os << "|";
  for (const GeneSet& set : seq.sets) {
    os << set.center << ":";
    for (int m : set.members) os << m << ",";
    os << ";";
    for (double r : set.correlations) hex(r);
    os << ";";
    hex(set.measure);
    for (int t : set.top20) os << t << ",";
    os << "#";
  }
  return os.str();
}

}  // namespace

CheckResult check_example2_reproduction(const VerifyOptions& opts) {
  CheckResult res;
  res.name = "example2-reproduction";
  const long runs = scaled_runs(1000000, opts.runs_scale, 100000);
  const SimReport rep = simulate_example2(runs, opts.seed, opts.threads);
  const double f1 = rep.rejection_frequency.at(0);
  const double f2 = rep.rejection_frequency.at(1);
  const double tol2 =
      std::max(0.002, 7.0 * std::sqrt(0.0834 * (1.0 - 0.0834) / runs));
  const bool ok1 = f1 >= 0.999;
  const bool ok2 = std::abs(f2 - 0.0834) <= tol2;
  res.passed = ok1 && ok2;
  res.detail = fmt("runs=%ld score1=%.6f (>=0.999%s) score2=%.6f (0.0834+-%.4f%s)", runs, f1,
                   ok1 ? "" : " FAIL", f2, tol2, ok2 ? "" : " FAIL");
  return res;
}

CheckResult check_exact_level_all_designs(const VerifyOptions& opts) {
  return eval_exact_level(run_null_battery(opts));
}

CheckResult check_null_shape_all_designs(const VerifyOptions& opts) {
  return eval_null_shape(run_null_battery(opts));
}

CheckResult check_fwe_sequential(const VerifyOptions& opts) {
  CheckResult res;
  res.name = "fwe-sequential";
  res.passed = true;
  const long runs = scaled_runs(100000, opts.runs_scale, 2000);
  const double alpha = 0.05;

  struct FweCase {
    std::string name;
    WeightRule rule;
    DesignPtr design;
    int n, p;
  };
  std::vector<FweCase> cases = {
      {"pca/one-group", WeightRule::Pca, std::make_shared<Design>(Design::one_group()), 10, 8},
      {"column-sum/one-group", WeightRule::ColumnSum,
       std::make_shared<Design>(Design::one_group()), 10, 8},
      {"gene-sets/two-group", WeightRule::GeneSets,
       std::make_shared<Design>(Design::two_group(5, 5)), 10, 10},
  };

  std::ostringstream detail;
  std::uint64_t idx = 0;
  for (const FweCase& fc : cases) {
    for (const auto& [procedure, k, pname] :
         {std::tuple<Procedure, int, const char*>{Procedure::Simple, 1, "simple"},
          std::tuple<Procedure, int, const char*>{Procedure::HommelKropf, 3, "hk3"}}) {
      SimConfig cfg;
      cfg.n = fc.n;
      cfg.p = fc.p;
      cfg.runs = runs;
      cfg.alpha = alpha;
      cfg.seed = opts.seed + 577 * ++idx;
      cfg.threads = opts.threads;
      cfg.scenario.design = fc.design;
      cfg.scenario.rule = fc.rule;
      cfg.scenario.sequential = true;
      cfg.scenario.procedure = procedure;
      cfg.scenario.k = k;
      cfg.scenario.num_scores = 1;
      NullSimSamples samples = run_null_sim(cfg);
      long hits = 0;
      for (char c : samples.any_significant) hits += c;
      const double freq = static_cast<double>(hits) / runs;
      const double margin = 3.0 * std::sqrt(alpha * (1.0 - alpha) / runs);
      // The simple procedure attains the level exactly; Hommel-Kropf only
      // bounds it from above.
      bool ok = freq <= alpha + margin;
      if (procedure == Procedure::Simple) ok = ok && freq >= alpha - margin;
      res.passed = res.passed && ok;
      detail << fmt("%s/%s f=%.5f<=%.5f%s; ", fc.name.c_str(), pname, freq, alpha + margin,
                    ok ? "" : " FAIL");
    }
  }
  res.detail = detail.str();
  return res;
}

CheckResult check_beta_t_identity(const VerifyOptions& opts) {
  CheckResult res;
  res.name = "beta-t-identity";
  const std::vector<double> alphas = {0.1, 0.05, 0.01, 0.00125};
  std::vector<double> max_err_per_m(200, 0.0);
  detail::parallel_for(1, 201, opts.threads, [&](long lo, long hi) {
    for (long m = lo; m < hi; ++m) {
      double worst = 0.0;
      for (double alpha : alphas) {
        const double t = ref::student_t_quantile(1.0 - alpha / 2.0, static_cast<double>(m));
        const double expected = t * t / (t * t + m);
        const double got = beta_quantile(1.0 - alpha, BetaParams{0.5, m / 2.0});
        worst = std::max(worst, std::abs(got - expected));
      }
      max_err_per_m[m - 1] = worst;
    }
  });
  const double max_err = *std::max_element(max_err_per_m.begin(), max_err_per_m.end());
  res.passed = max_err <= 1e-9;
  res.detail = fmt("m=1..200, alpha in {0.1,0.05,0.01,0.00125}: max |err| = %.3g (tol 1e-9)",
                   max_err);
  return res;
}

CheckResult check_dual_primal_equivalence(const VerifyOptions& opts) {
  CheckResult res;
  res.name = "dual-primal-equivalence";
  const int instances = 200;
  std::vector<double> val_err(instances, 0.0), vec_err(instances, 0.0);
  detail::parallel_for(0, instances, opts.threads, [&](long lo, long hi) {
    for (long t = lo; t < hi; ++t) {
      RngStream rng = RngStream::substream(opts.seed ^ 0xD0A1D0A1ULL, t);
      const int n = 5 + static_cast<int>(rng.next_u64() % 16);       // 5..20
      const int p = n + 1 + static_cast<int>(rng.next_u64() % (60 - n));  // n+1..60
      Eigen::MatrixXd M(n, p);
      rng.fill_normal(M);

      const DualEigenResult dual = dual_eigen_scores(M, n);
      const std::vector<EigenPair> primal =
          symmetric_eigen(sums_of_products(M).values, static_cast<int>(dual.pairs.size()));
      for (std::size_t h = 0; h < dual.pairs.size(); ++h) {
        const double lp = primal[h].value;
        val_err[t] = std::max(val_err[t], std::abs(dual.pairs[h].value - lp) /
                                              std::max(lp, 1e-300));
        const Eigen::VectorXd direct = M * primal[h].vector;
        const Eigen::VectorXd& z = dual.pairs[h].vector;
        const double diff =
            std::min((z - direct).norm(), (z + direct).norm()) / std::max(z.norm(), 1e-300);
        vec_err[t] = std::max(vec_err[t], diff);
      }
    }
  });
  const double worst_val = *std::max_element(val_err.begin(), val_err.end());
  const double worst_vec = *std::max_element(vec_err.begin(), vec_err.end());
  res.passed = worst_val <= 1e-8 && worst_vec <= 1e-8;
  res.detail = fmt("200 instances: max eigenvalue rel err %.3g, max score err %.3g (tol 1e-8)",
                   worst_val, worst_vec);
  return res;
}

CheckResult check_lambda_beta_identity(const VerifyOptions& opts) {
  CheckResult res;
  res.name = "lambda-beta-identity";
  res.passed = true;
  std::ostringstream detail;
  std::uint64_t design_idx = 0;
  for (const DesignCase& dc : design_cases(opts.seed)) {
    const ProjectionPair pair = make_design_projections(*dc.design, dc.n);
    const std::uint64_t case_seed = opts.seed ^ (0xAB00 + ++design_idx);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      RngStream rng = RngStream::substream(case_seed, t);
      Eigen::MatrixXd X(dc.n, dc.p);
      rng.fill_normal(X);
      Eigen::MatrixXd M;
      switch (dc.design->kind()) {
        case Design::Kind::OneGroup: M = X; break;
        case Design::Kind::TwoGroup:
        case Design::Kind::Correlation: M = center(X).values; break;
        case Design::Kind::General: M = pair.Q * X; break;
      }
      const WeightMatrix W = pca_weights(M, 1);
      const Eigen::VectorXd z = M * W.columns.col(0);
      const WilksResult wilks = wilks_test(z, pair, 0.05);
      const BetaTestResult beta =
          score_test_general(make_score(z, dc.design, "PC1"), pair, 0.05);
      worst = std::max(worst, std::abs(wilks.lambda - (1.0 - beta.statistic)));
    }
    const bool ok = worst <= 1e-12;
    res.passed = res.passed && ok;
    detail << fmt("%s max|Lambda-(1-B)|=%.3g%s; ", dc.name.c_str(), worst, ok ? "" : " FAIL");
  }
  res.detail = detail.str();
  return res;
}

CheckResult check_gene_set_replay(const VerifyOptions& opts) {
  CheckResult res;
  res.name = "gene-set-replay";
  res.passed = true;
  const int instances = 50;
  const int n = 30, p = 200;
  const double sqrt_half = std::sqrt(0.5);
  std::vector<std::string> failures(instances);

  detail::parallel_for(0, instances, opts.threads, [&](long lo, long hi) {
    for (long t = lo; t < hi; ++t) {
      RngStream rng = RngStream::substream(opts.seed ^ 0x6E5E75ULL, t);
      Eigen::MatrixXd X(n, p);
      rng.fill_normal(X);
      const CenteredMatrix C = center(X);
      GeneSetOptions gopts;
      gopts.threads = 1;
      const GeneSetSequence seq = build_gene_sets(C, gopts);
      const GeneSetSequence again = build_gene_sets(C, gopts);
      if (serialize_sets(seq) != serialize_sets(again)) {
        failures[t] = "non-deterministic rebuild";
        continue;
      }

      const Eigen::VectorXd ss = C.values.colwise().squaredNorm();
      std::set<int> used;
      for (const GeneSet& set : seq.sets) {
        const Eigen::VectorXd cross = C.values.transpose() * C.values.col(set.center);
        std::set<int> member_set(set.members.begin(), set.members.end());
        if (!member_set.count(set.center)) failures[t] = "center not a member";
        // Inclusion rules, both directions.
        for (int i = 0; i < p; ++i) {
          const double r = i == set.center
                               ? 1.0
                               : cross[i] / std::sqrt(ss[set.center] * ss[i]);
          const bool qualifies = ss[i] <= ss[set.center] && r >= sqrt_half;
          if (qualifies != (member_set.count(i) > 0)) failures[t] = "inclusion rule mismatch";
        }
        // O_m over at most the 20 largest correlations, center included.
        std::vector<double> rs = set.correlations;
        std::sort(rs.begin(), rs.end(), std::greater<double>());
        double r_sum = 0.0;
        for (std::size_t j = 0; j < std::min<std::size_t>(20, rs.size()); ++j) r_sum += rs[j];
        if (std::abs(set.measure - ss[set.center] * r_sum) >
            1e-9 * std::max(1.0, std::abs(set.measure)))
          failures[t] = "measure mismatch";
        if (set.top20.size() > 20) failures[t] = "top20 overflow";
        for (int g : set.top20)
          if (used.count(g)) failures[t] = "top20 overlap between retained sets";
        for (int g : set.top20) used.insert(g);
      }
      // O_m ordering among retained sets.
      for (std::size_t s = 1; s < seq.sets.size(); ++s)
        if (seq.sets[s - 1].measure < seq.sets[s].measure) failures[t] = "sets out of order";
    }
  });

  int failed = 0;
  for (const auto& f : failures)
    if (!f.empty()) ++failed;
  res.passed = failed == 0;
  res.detail = fmt("50 random 30x200 matrices: %d replay failures", failed);
  if (failed > 0) {
    for (const auto& f : failures)
      if (!f.empty()) {
        res.detail += " [" + f + "]";
        break;
      }
  }
  return res;
}

CheckResult check_planted_recovery(const VerifyOptions& opts) {
  CheckResult res;
  res.name = "planted-recovery";
  const int replicates = 100;
  const int n = 20, p = 50, block = 10;
  const int n1 = 10, n2 = 10;
  const double delta = 1.5;
  const double load = std::sqrt(0.9);
  const double noise = std::sqrt(0.1);

  std::vector<char> success(replicates, 0);
  detail::parallel_for(0, replicates, opts.threads, [&](long lo, long hi) {
    for (long t = lo; t < hi; ++t) {
      RngStream rng = RngStream::substream(opts.seed ^ 0x9A27EDULL, t);
      Eigen::MatrixXd X(n, p);
      for (int j = 0; j < n; ++j) {
        const double factor = rng.normal();
        const double shift = j < n1 ? delta : -delta;
        for (int i = 0; i < p; ++i) {
          X(j, i) = i < block ? load * factor + noise * rng.normal() + shift
                              : rng.normal();
        }
      }
      const CenteredMatrix C = center(X);
      GeneSetOptions gopts;
      gopts.threads = 1;
      const GeneSetSequence seq = build_gene_sets(C, gopts);
      if (seq.sets.empty()) continue;
      int planted = 0;
      for (int i : seq.sets.front().members)
        if (i < block) ++planted;
      if (planted < static_cast<int>(std::ceil(0.8 * block))) continue;

      const WeightMatrix W = gene_set_weights(seq, C.values);
      const auto design = std::make_shared<Design>(Design::two_group(n1, n2));
      const ScoreVector z = make_score(C.values * W.columns.col(0), design, "set1");
      if (score_test_two_group(z, {n1, n2}, 0.05).significant) success[t] = 1;
    }
  });

  int hits = 0;
  for (char c : success) hits += c;
  res.passed = hits >= 95;
  res.detail = fmt("planted block recovered and significant in %d/100 replicates (need >= 95)",
                   hits);
  return res;
}

std::vector<CheckResult> run_all_checks(const VerifyOptions& opts) {
  std::vector<CheckResult> results;
  results.push_back(check_example2_reproduction(opts));
  const std::vector<BatteryEntry> battery = run_null_battery(opts);
  results.push_back(eval_exact_level(battery));
  results.push_back(eval_null_shape(battery));
  results.push_back(check_fwe_sequential(opts));
  results.push_back(check_beta_t_identity(opts));
  results.push_back(check_dual_primal_equivalence(opts));
  results.push_back(check_lambda_beta_identity(opts));
  results.push_back(check_gene_set_replay(opts));
  results.push_back(check_planted_recovery(opts));
  return results;
}

}  // namespace scoretest
