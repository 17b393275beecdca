#pragma once

#include "scoretest/model_choice.hpp"
#include "scoretest/rng.hpp"
#include "scoretest/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace scoretest {

enum class WeightRule { Pca, ColumnSum, Diagonal, GeneSets };

// What a simulated run exercises: the design, the data-driven weight rule and
// either a fixed number of per-score tests or a full sequential procedure.
struct Scenario {
  DesignPtr design;
  WeightRule rule = WeightRule::Pca;
  int num_scores = 1;      // fixed mode: test scores 1..num_scores every run
  bool sequential = false; // sequential mode: run the multiple procedure
  Procedure procedure = Procedure::Simple;
  int k = 1;
};

struct SimConfig {
  int n = 10;
  int p = 5;
  Eigen::VectorXd mean;        // defaults to zero
  Eigen::MatrixXd covariance;  // defaults to identity; PSD accepted (not just PD)
  long runs = 100000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  Scenario scenario;
  int threads = 0;  // 0 = SCORETEST_THREADS env or hardware concurrency
};

struct SimReport {
  std::string scenario_label;
  std::vector<double> rejection_frequency;  // per tested score
  std::vector<double> half_width_3sigma;    // 3 * sqrt(f(1-f)/runs)
  double any_significant_frequency = -1.0;  // sequential mode only
  std::vector<double> quantile_grid;        // probabilities
  std::vector<double> empirical_quantiles;  // of the score-1 B sample
  std::vector<double> theoretical_quantiles;
  double ks_distance = 0.0;                 // score-1 B sample vs theoretical beta
  double ks_critical_0001 = 0.0;
  BetaParams null_params;
  long runs = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string rng_id;
  double wall_seconds = 0.0;

  // Stable field order; wall time is excluded from both renderings so
  // identical seed + config serialize byte-identically.
  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

// Raw per-score statistic samples, for evaluating several alpha levels or
// distribution checks on one set of runs.
struct NullSimSamples {
  std::vector<std::vector<double>> b_samples;  // [score][run]
  std::vector<char> any_significant;           // sequential mode, per run
  BetaParams null_params;                      // beta law of each score under H0
  double wall_seconds = 0.0;
};

NullSimSamples run_null_sim(const SimConfig& cfg);

// Null rejection frequency per tested score with 3-sigma half-widths and a
// KS comparison of the score-1 statistic sample against its theoretical beta
// distribution. The scenario's null condition (Q E(X) = 0) is checked first.
SimReport simulate_null_level(const SimConfig& cfg);

// The 10 x 3, mu = (0,0,3), sigma = I column-sum-ordering simulation at
// alpha = 0.05; reports frequencies for scores 1 and 2. Requires runs >= 1e5.
SimReport simulate_example2(long runs, std::uint64_t seed, int threads = 0);
SimReport simulate_example2_at(long runs, std::uint64_t seed, const Eigen::VectorXd& mean,
                               int threads = 0, long min_runs = 100000);

// Orthogonal matrix used to rotate score draws; possibly a reflection.
struct RotationMatrix {
  Eigen::MatrixXd C;

  // C'C = I within 1e-10 and |det| = 1 within 1e-8; throws EigenError.
  void validate() const;
};

RotationMatrix random_rotation(int n, RngStream& rng);

struct RotationCheckReport {
  double ks_two_sample = 0.0;
  double ks_critical = 0.0;
  bool spherical_consistent = false;  // false flags a non-spherical generator
  long trials = 0;
  std::uint64_t seed = 0;
};

// Draws scores from the generator, applies a fresh random rotation to each
// draw and compares the one-group B distributions of rotated and unrotated
// scores by a two-sample KS test at level 0.001. The comparison is
// distributional; pointwise B(Cz) != B(z) is expected.
RotationCheckReport rotation_invariance_check(
    const std::function<Eigen::VectorXd(RngStream&)>& make_score_draw, long trials,
    std::uint64_t seed);

// -- small statistics helpers (shared with the verification suite) -----------

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b);
double ks_critical_value(double alpha, double effective_n);   // asymptotic
double binomial_half_width_3sigma(double freq, long runs);

int effective_thread_count(int requested);

}  // namespace scoretest
