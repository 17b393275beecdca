#include "scoretest/analysis.hpp"
#include "scoretest/errors.hpp"
#include "scoretest/linalg.hpp"
#include "scoretest/simulate.hpp"
#include "scoretest/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitParse = 2;
constexpr int kExitDesign = 3;
constexpr int kExitNumerical = 4;

void write_output(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw scoretest::ConfigError("cannot write output file: " + out_path);
  out << content;
}

scoretest::DesignPtr design_from_flags(const std::string& design, int n, int n1, int n2,
                                       const std::string& q_path,
                                       const std::string& qh_path) {
  using scoretest::Design;
  if (design == "one-group") return std::make_shared<Design>(Design::one_group());
  if (design == "two-group") {
    if (n1 < 1 || n2 < 1)
      throw scoretest::ConfigError("two-group simulation needs --n1 and --n2");
    return std::make_shared<Design>(Design::two_group(n1, n2));
  }
  if (design == "correlation") {
    // Deterministic centered ramp target; any fixed centered target is null.
    Eigen::VectorXd y(n);
    for (int j = 0; j < n; ++j) y[j] = j - (n - 1) / 2.0;
    return std::make_shared<Design>(Design::correlation({y, true}));
  }
  if (design == "general") {
    if (q_path.empty() || qh_path.empty())
      throw scoretest::ConfigError("general design needs --q-matrix and --qh-matrix");
    return std::make_shared<Design>(Design::general(scoretest::validate_projection_pair(
        scoretest::read_matrix_file(q_path), scoretest::read_matrix_file(qh_path))));
  }
  throw scoretest::ConfigError("unknown design '" + design + "'");
}

scoretest::WeightRule rule_from_method(const std::string& method) {
  if (method == "pca") return scoretest::WeightRule::Pca;
  if (method == "column-order") return scoretest::WeightRule::ColumnSum;
  if (method == "diagonal-order") return scoretest::WeightRule::Diagonal;
  if (method == "gene-sets") return scoretest::WeightRule::GeneSets;
  throw scoretest::ConfigError("unknown simulation method '" + method + "'");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Exact sphericity tests for data-driven linear scores"};
  app.require_subcommand(1);

  // analyze ------------------------------------------------------------------
  scoretest::AnalysisConfig cfg;
  std::string format = "table";
  std::string out_path;
  CLI::App* analyze = app.add_subcommand("analyze", "run the testing pipeline on a data file");
  analyze->add_option("--input", cfg.input_path, "CSV/TSV data file")->required();
  analyze->add_option("--design", cfg.design,
                      "one-group | two-group | correlation | general");
  analyze->add_option("--labels", cfg.labels_column, "two-group label column name");
  analyze->add_option("--target", cfg.target_column,
                      "correlation target / regression variable column");
  analyze->add_option("--q-matrix", cfg.q_path, "general design: Q matrix file");
  analyze->add_option("--qh-matrix", cfg.qh_path, "general design: Q_H matrix file");
  analyze->add_option("--method", cfg.method,
                      "pca | gene-sets | column-order | diagonal-order | regression");
  analyze->add_option("--alpha", cfg.alpha, "test level");
  analyze->add_option("--procedure", cfg.procedure, "simple | hommel-kropf");
  analyze->add_option("--k", cfg.k, "hommel-kropf non-significance budget");
  analyze->add_option("--seed", cfg.seed, "seed echoed into the report");
  analyze->add_option("--max-scores", cfg.max_scores, "cap on tested scores (0 = all)");
  analyze->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
  analyze->add_option("--format", format, "table | csv | json");
  analyze->add_option("--out", out_path, "write the report to a file instead of stdout");

  // simulate-null ------------------------------------------------------------
  struct NullFlags {
    std::string design = "one-group";
    int n = 10, p = 5, n1 = 0, n2 = 0;
    std::string method = "pca";
    std::string q_path, qh_path;
    double alpha = 0.05;
    long runs = 100000;
    std::uint64_t seed = 1;
    int scores = 1;
    std::string procedure = "none";
    int k = 1;
    int threads = 0;
  } nf;
  CLI::App* simnull = app.add_subcommand(
      "simulate-null", "null rejection rates and score distribution shape");
  simnull->add_option("--design", nf.design, "one-group | two-group | correlation | general");
  simnull->add_option("--n", nf.n, "individuals (one-group/correlation)");
  simnull->add_option("--n1", nf.n1, "group 1 size (two-group)");
  simnull->add_option("--n2", nf.n2, "group 2 size (two-group)");
  simnull->add_option("--p", nf.p, "variables");
  simnull->add_option("--method", nf.method,
                      "pca | column-order | diagonal-order | gene-sets");
  simnull->add_option("--q-matrix", nf.q_path, "general design: Q matrix file");
  simnull->add_option("--qh-matrix", nf.qh_path, "general design: Q_H matrix file");
  simnull->add_option("--alpha", nf.alpha, "test level");
  simnull->add_option("--runs", nf.runs, "Monte Carlo runs");
  simnull->add_option("--seed", nf.seed, "RNG seed");
  simnull->add_option("--scores", nf.scores, "scores tested per run");
  simnull->add_option("--procedure", nf.procedure,
                      "none | simple | hommel-kropf (sequential FWE mode)");
  simnull->add_option("--k", nf.k, "hommel-kropf non-significance budget");
  simnull->add_option("--threads", nf.threads, "worker threads (0 = auto)");
  std::string null_format = "table";
  std::string null_out;
  simnull->add_option("--format", null_format, "table | json");
  simnull->add_option("--out", null_out, "output file");

  // simulate-example2 ----------------------------------------------------------
  long ex2_runs = 1000000;
  std::uint64_t ex2_seed = 1;
  int ex2_threads = 0;
  std::string ex2_format = "table";
  std::string ex2_out;
  CLI::App* ex2 = app.add_subcommand("simulate-example2",
                                     "column-sum ordering simulation, n=10, p=3, mu=(0,0,3)");
  ex2->add_option("--runs", ex2_runs, "Monte Carlo runs (>= 1e5)");
  ex2->add_option("--seed", ex2_seed, "RNG seed");
  ex2->add_option("--threads", ex2_threads, "worker threads (0 = auto)");
  ex2->add_option("--format", ex2_format, "table | json");
  ex2->add_option("--out", ex2_out, "output file");

  // verify ---------------------------------------------------------------------
  scoretest::VerifyOptions vopts;
  CLI::App* verify = app.add_subcommand("verify", "run the built-in invariant suites");
  verify->add_option("--seed", vopts.seed, "RNG seed");
  verify->add_option("--runs-scale", vopts.runs_scale,
                     "scales Monte Carlo sizes (1.0 = full suite)");
  verify->add_option("--threads", vopts.threads, "worker threads (0 = auto)");

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed()) {
    const scoretest::AnalysisResult result = scoretest::run_analysis(cfg);
    if (format == "json")
      write_output(result.report.dump(2) + "\n", out_path);
    else if (format == "csv")
      write_output(scoretest::result_table_csv(result), out_path);
    else
      write_output(scoretest::result_table_text(result), out_path);
    return kExitOk;
  }

  if (simnull->parsed()) {
    scoretest::SimConfig sim;
    sim.n = nf.design == "two-group" ? nf.n1 + nf.n2 : nf.n;
    sim.p = nf.p;
    sim.runs = nf.runs;
    sim.alpha = nf.alpha;
    sim.seed = nf.seed;
    sim.threads = nf.threads;
    sim.scenario.design =
        design_from_flags(nf.design, sim.n, nf.n1, nf.n2, nf.q_path, nf.qh_path);
    if (nf.design == "general")
      sim.n = static_cast<int>(sim.scenario.design->projections().Q.rows());
    sim.scenario.rule = rule_from_method(nf.method);
    sim.scenario.num_scores = nf.scores;
    if (nf.procedure != "none") {
      sim.scenario.sequential = true;
      sim.scenario.procedure = nf.procedure == "hommel-kropf"
                                   ? scoretest::Procedure::HommelKropf
                                   : scoretest::Procedure::Simple;
      sim.scenario.k = nf.k;
    }
    const scoretest::SimReport report = scoretest::simulate_null_level(sim);
    std::fprintf(stderr, "wall seconds: %.2f\n", report.wall_seconds);
    write_output(null_format == "json" ? report.to_json().dump(2) + "\n" : report.to_table(),
                 null_out);
    return kExitOk;
  }

  if (ex2->parsed()) {
    const scoretest::SimReport report =
        scoretest::simulate_example2(ex2_runs, ex2_seed, ex2_threads);
    std::fprintf(stderr, "wall seconds: %.2f\n", report.wall_seconds);
    write_output(ex2_format == "json" ? report.to_json().dump(2) + "\n" : report.to_table(),
                 ex2_out);
    return kExitOk;
  }

  // verify
  const std::vector<scoretest::CheckResult> results = scoretest::run_all_checks(vopts);
  bool all_ok = true;
  for (const auto& r : results) {
    std::printf("%s %-26s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    all_ok = all_ok && r.passed;
  }
  return all_ok ? kExitOk : kExitOther;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const scoretest::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitParse;
  } catch (const scoretest::DesignError& e) {
    std::fprintf(stderr, "design error: %s\n", e.what());
    return kExitDesign;
  } catch (const scoretest::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitDesign;
  } catch (const scoretest::DimensionError& e) {
    std::fprintf(stderr, "design error: %s\n", e.what());
    return kExitDesign;
  } catch (const scoretest::EmptyInputError& e) {
    std::fprintf(stderr, "design error: %s\n", e.what());
    return kExitDesign;
  } catch (const scoretest::Error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
}
