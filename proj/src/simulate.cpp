#include "scoretest/simulate.hpp"

#include "scoretest/beta.hpp"
#include "scoretest/errors.hpp"
#include "scoretest/linalg.hpp"
#include "scoretest/score_tests.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace scoretest {

namespace {

const std::vector<double> kQuantileGrid = {0.01, 0.05, 0.1, 0.25, 0.5,
                                           0.75, 0.9,  0.95, 0.99};

std::string weight_rule_name(WeightRule rule) {
  switch (rule) {
    case WeightRule::Pca: return "pca";
    case WeightRule::ColumnSum: return "column-sum";
    case WeightRule::Diagonal: return "diagonal";
    case WeightRule::GeneSets: return "gene-sets";
  }
  return "?";
}

struct SimContext {
  ProjectionPair proj;
  BetaParams null_params;
  Eigen::VectorXd mean;
  Eigen::MatrixXd sigma_sqrt;  // empty when covariance is the identity
  bool general = false;
};

SimContext prepare(const SimConfig& cfg) {
  if (cfg.n < 2 || cfg.p < 1) throw ConfigError("simulation needs n >= 2 and p >= 1");
  if (cfg.runs < 1) throw ConfigError("simulation needs runs >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!cfg.scenario.design) throw ConfigError("scenario has no design");

  SimContext ctx;
  ctx.proj = make_design_projections(*cfg.scenario.design, cfg.n);
  ctx.null_params = BetaParams{ctx.proj.f_H / 2.0, (ctx.proj.f - ctx.proj.f_H) / 2.0};
  ctx.general = cfg.scenario.design->kind() == Design::Kind::General;

  ctx.mean = cfg.mean.size() == 0 ? Eigen::VectorXd::Zero(cfg.p).eval() : cfg.mean;
  if (static_cast<int>(ctx.mean.size()) != cfg.p)
    throw ConfigError("mean vector length does not match p");

  if (cfg.covariance.size() != 0) {
    if (cfg.covariance.rows() != cfg.p || cfg.covariance.cols() != cfg.p)
      throw ConfigError("covariance must be p x p");
    const Eigen::MatrixXd sym = (cfg.covariance + cfg.covariance.transpose()) * 0.5;
    if ((cfg.covariance - sym).cwiseAbs().maxCoeff() >
        1e-10 * std::max(sym.cwiseAbs().maxCoeff(), 1.0))
      throw ConfigError("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw ConfigError("covariance eigensolve failed");
    const double top = std::max(es.eigenvalues().maxCoeff(), 1.0);
    if (es.eigenvalues().minCoeff() < -1e-10 * top)
      throw ConfigError("covariance is not positive semidefinite");
    if ((sym - Eigen::MatrixXd::Identity(cfg.p, cfg.p)).cwiseAbs().maxCoeff() > 0.0) {
      // Symmetric square root accepts PSD-but-singular covariances.
      ctx.sigma_sqrt = es.eigenvectors() *
                       es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                       es.eigenvectors().transpose();
    }
  }
  return ctx;
}

void check_null_condition(const SimConfig& cfg, const SimContext& ctx) {
  const Eigen::MatrixXd expectation =
      Eigen::VectorXd::Ones(cfg.n) * ctx.mean.transpose();
  const double residual = (ctx.proj.Q * expectation).cwiseAbs().maxCoeff();
  if (residual > 1e-9 * (1.0 + ctx.mean.cwiseAbs().maxCoeff()))
    throw ConfigError("scenario is not null: Q E(X) != 0 for the given mean");
}

// Draws X row by row: entry order is fixed so streams are reproducible and
// independent of the covariance shape.
void sample_data(Eigen::MatrixXd& X, const SimContext& ctx, RngStream& rng) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (ctx.sigma_sqrt.size() == 0) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < p; ++i) X(j, i) = ctx.mean[i] + rng.normal();
  } else {
    Eigen::VectorXd g(p);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < p; ++i) g[i] = rng.normal();
      X.row(j) = (ctx.mean + ctx.sigma_sqrt * g).transpose();
    }
  }
}

std::vector<ScoreVector> scores_for_run(const Eigen::MatrixXd& X, const SimConfig& cfg,
                                        const SimContext& ctx, int max_scores) {
  const Design& design = *cfg.scenario.design;
  Eigen::MatrixXd M;
  switch (design.kind()) {
    case Design::Kind::OneGroup: M = X; break;
    case Design::Kind::TwoGroup:
    case Design::Kind::Correlation: M = center(X).values; break;
    case Design::Kind::General: M = ctx.proj.Q * X; break;
  }

  switch (cfg.scenario.rule) {
    case WeightRule::Pca: {
      const int avail = static_cast<int>(std::min(M.rows(), M.cols()));
      const int q = std::min(max_scores, avail);
      WeightMatrix W = pca_weights(M, q);
      return make_scores(M, W, cfg.scenario.design);
    }
    case WeightRule::ColumnSum: {
      const SumsOfProducts W = sums_of_products(M);
      OrderingKey key = column_sum_order(W);
      key.order.resize(std::min<std::size_t>(key.order.size(), max_scores));
      return make_scores(
          M, indicator_weights(key, static_cast<int>(M.cols()), matrix_fingerprint(W.values)),
          cfg.scenario.design);
    }
    case WeightRule::Diagonal: {
      const SumsOfProducts W = sums_of_products(M);
      OrderingKey key = kropf_diagonal_order(W);
      key.order.resize(std::min<std::size_t>(key.order.size(), max_scores));
      return make_scores(
          M, indicator_weights(key, static_cast<int>(M.cols()), matrix_fingerprint(W.values)),
          cfg.scenario.design);
    }
    case WeightRule::GeneSets: {
      GeneSetOptions opts;
      opts.threads = 1;  // runs already parallelize
      GeneSetSequence seq = build_gene_sets(M, opts);
      if (static_cast<int>(seq.sets.size()) > max_scores) seq.sets.resize(max_scores);
      return make_scores(M, gene_set_weights(seq, M), cfg.scenario.design);
    }
  }
  throw ConfigError("unknown weight rule");
}

NullSimSamples run_sim_impl(const SimConfig& cfg, const SimContext& ctx) {
  const auto started = std::chrono::steady_clock::now();
  const int tracked = std::max(1, cfg.scenario.num_scores);
  const int max_scores =
      cfg.scenario.sequential ? std::numeric_limits<int>::max() : tracked;

  NullSimSamples out;
  out.null_params = ctx.null_params;
  out.b_samples.assign(tracked,
                       std::vector<double>(cfg.runs, std::numeric_limits<double>::quiet_NaN()));
  if (cfg.scenario.sequential) out.any_significant.assign(cfg.runs, 0);

  detail::parallel_for(0, cfg.runs, cfg.threads, [&](long lo, long hi) {
    Eigen::MatrixXd X(cfg.n, cfg.p);
    for (long run = lo; run < hi; ++run) {
      RngStream rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(run));
      sample_data(X, ctx, rng);
      const std::vector<ScoreVector> scores = scores_for_run(X, cfg, ctx, max_scores);
      if (cfg.scenario.sequential) {
        const SequentialOutcome seq = run_sequential(
            scores, cfg.alpha, cfg.scenario.procedure, cfg.scenario.k);
        out.any_significant[run] = seq.significant_indices.empty() ? 0 : 1;
        const int have = std::min<int>(tracked, static_cast<int>(seq.results.size()));
        for (int h = 0; h < have; ++h)
          out.b_samples[h][run] = seq.results[h].statistic;
      } else {
        const int have = std::min<int>(tracked, static_cast<int>(scores.size()));
        for (int h = 0; h < have; ++h)
          out.b_samples[h][run] = test_score(scores[h], cfg.alpha).statistic;
      }
    }
  });

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

SimReport report_from_samples(const SimConfig& cfg, const SimContext& ctx,
                              const NullSimSamples& samples, std::string label) {
  SimReport rep;
  rep.scenario_label = std::move(label);
  rep.runs = cfg.runs;
  rep.alpha = cfg.alpha;
  rep.seed = cfg.seed;
  rep.rng_id = kRngAlgorithmId;
  rep.null_params = samples.null_params;
  rep.wall_seconds = samples.wall_seconds;

  const double level =
      cfg.scenario.sequential && cfg.scenario.procedure == Procedure::HommelKropf
          ? cfg.alpha / cfg.scenario.k
          : cfg.alpha;
  const double threshold = beta_quantile(1.0 - level, samples.null_params);
  for (const auto& sample : samples.b_samples) {
    long hits = 0;
    for (double b : sample)
      if (b >= threshold) ++hits;  // NaN (score unavailable) never rejects
    const double freq = static_cast<double>(hits) / cfg.runs;
    rep.rejection_frequency.push_back(freq);
    rep.half_width_3sigma.push_back(binomial_half_width_3sigma(freq, cfg.runs));
  }

  if (cfg.scenario.sequential) {
    long hits = 0;
    for (char c : samples.any_significant) hits += c;
    rep.any_significant_frequency = static_cast<double>(hits) / cfg.runs;
  }

  std::vector<double> first;
  first.reserve(cfg.runs);
  for (double b : samples.b_samples.front())
    if (std::isfinite(b)) first.push_back(b);
  if (first.empty()) return rep;
  std::sort(first.begin(), first.end());

  rep.quantile_grid = kQuantileGrid;
  for (double prob : kQuantileGrid) {
    const std::size_t idx = std::min(
        first.size() - 1, static_cast<std::size_t>(prob * static_cast<double>(first.size())));
    rep.empirical_quantiles.push_back(first[idx]);  // nearest-rank
    rep.theoretical_quantiles.push_back(beta_quantile(prob, samples.null_params));
  }
  rep.ks_distance = ks_statistic(
      first, [&](double x) { return beta_cdf(std::clamp(x, 0.0, 1.0), samples.null_params); });
  rep.ks_critical_0001 = ks_critical_value(0.001, static_cast<double>(first.size()));
  return rep;
}

}  // namespace

NullSimSamples run_null_sim(const SimConfig& cfg) {
  const SimContext ctx = prepare(cfg);
  check_null_condition(cfg, ctx);
  return run_sim_impl(cfg, ctx);
}

SimReport simulate_null_level(const SimConfig& cfg) {
  const SimContext ctx = prepare(cfg);
  check_null_condition(cfg, ctx);
  const NullSimSamples samples = run_sim_impl(cfg, ctx);
  std::ostringstream label;
  label << "null-level " << cfg.scenario.design->describe() << " n=" << cfg.n
        << " p=" << cfg.p << " rule=" << weight_rule_name(cfg.scenario.rule);
  if (cfg.scenario.sequential)
    label << (cfg.scenario.procedure == Procedure::HommelKropf
                  ? " procedure=hommel-kropf(k=" + std::to_string(cfg.scenario.k) + ")"
                  : " procedure=simple");
  return report_from_samples(cfg, ctx, samples, label.str());
}

SimReport simulate_example2_at(long runs, std::uint64_t seed, const Eigen::VectorXd& mean,
                               int threads, long min_runs) {
  if (runs < min_runs)
    throw ConfigError("example-2 simulation needs at least " + std::to_string(min_runs) +
                      " runs");
  SimConfig cfg;
  cfg.n = 10;
  cfg.p = 3;
  cfg.mean = mean;
  cfg.runs = runs;
  cfg.alpha = 0.05;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.scenario.design = std::make_shared<Design>(Design::one_group());
  cfg.scenario.rule = WeightRule::ColumnSum;
  cfg.scenario.num_scores = 2;

  const SimContext ctx = prepare(cfg);  // non-null mean on purpose
  const NullSimSamples samples = run_sim_impl(cfg, ctx);
  return report_from_samples(cfg, ctx, samples, "example2 n=10 p=3 column-sum");
}

SimReport simulate_example2(long runs, std::uint64_t seed, int threads) {
  Eigen::VectorXd mean(3);
  mean << 0.0, 0.0, 3.0;
  return simulate_example2_at(runs, seed, mean, threads);
}

void RotationMatrix::validate() const {
  const int n = static_cast<int>(C.rows());
  if (C.cols() != n || n < 1) throw EigenError("rotation matrix must be square");
  const Eigen::MatrixXd gram = C.transpose() * C;
  if ((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
    throw EigenError("rotation matrix is not orthogonal");
  if (std::abs(std::abs(C.determinant()) - 1.0) > 1e-8)
    throw EigenError("rotation determinant is not +-1");
}

RotationMatrix random_rotation(int n, RngStream& rng) {
  RotationMatrix rot{random_orthogonal(n, rng)};
  rot.validate();
  return rot;
}

RotationCheckReport rotation_invariance_check(
    const std::function<Eigen::VectorXd(RngStream&)>& make_score_draw, long trials,
    std::uint64_t seed) {
  if (trials < 10) throw ConfigError("rotation check needs at least 10 trials");

  std::vector<double> plain(trials), rotated(trials);
  detail::parallel_for(0, trials, 0, [&](long lo, long hi) {
    for (long t = lo; t < hi; ++t) {
      RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(t));
      const Eigen::VectorXd z = make_score_draw(rng);
      const int n = static_cast<int>(z.size());
      if (n < 2 || z.squaredNorm() <= 0.0)
        throw DegenerateScoreError("score generator produced a degenerate draw");
      const RotationMatrix rot = random_rotation(n, rng);
      const Eigen::VectorXd w = rot.C.transpose() * z;
      auto b_stat = [n](const Eigen::VectorXd& v) {
        const double m = v.mean();
        return n * m * m / v.squaredNorm();
      };
      plain[t] = b_stat(z);
      rotated[t] = b_stat(w);
    }
  });

  RotationCheckReport rep;
  rep.trials = trials;
  rep.seed = seed;
  rep.ks_two_sample = ks_two_sample_statistic(plain, rotated);
  rep.ks_critical =
      ks_critical_value(0.001, static_cast<double>(trials) * trials / (2.0 * trials));
  rep.spherical_consistent = rep.ks_two_sample <= rep.ks_critical;
  return rep;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw EmptyInputError("KS needs a non-empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw EmptyInputError("KS needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(double alpha, double effective_n) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(effective_n);
}

double binomial_half_width_3sigma(double freq, long runs) {
  return 3.0 * std::sqrt(freq * (1.0 - freq) / static_cast<double>(runs));
}

int effective_thread_count(int requested) { return detail::thread_count(requested); }

nlohmann::ordered_json SimReport::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario_label;
  j["runs"] = runs;
  j["alpha"] = alpha;
  j["seed"] = seed;
  j["rng"] = rng_id;
  j["null_beta_a"] = null_params.a;
  j["null_beta_b"] = null_params.b;
  j["rejection_frequency"] = rejection_frequency;
  j["half_width_3sigma"] = half_width_3sigma;
  if (any_significant_frequency >= 0.0)
    j["any_significant_frequency"] = any_significant_frequency;
  j["quantile_grid"] = quantile_grid;
  j["empirical_quantiles"] = empirical_quantiles;
  j["theoretical_quantiles"] = theoretical_quantiles;
  j["ks_distance"] = ks_distance;
  j["ks_critical_0001"] = ks_critical_0001;
  return j;
}

std::string SimReport::to_table() const {
  std::ostringstream os;
  os << "scenario: " << scenario_label << "\n";
  os << "runs=" << runs << " alpha=" << alpha << " seed=" << seed << " rng=" << rng_id
     << "\n";
  os << "null beta(a=" << null_params.a << ", b=" << null_params.b << ")\n";
  for (std::size_t h = 0; h < rejection_frequency.size(); ++h) {
    char line[160];
    std::snprintf(line, sizeof(line), "score %zu: rejection %.6f (+- %.6f, 3 sigma)\n",
                  h + 1, rejection_frequency[h], half_width_3sigma[h]);
    os << line;
  }
  if (any_significant_frequency >= 0.0)
    os << "any-significance frequency: " << any_significant_frequency << "\n";
  char ksline[120];
  std::snprintf(ksline, sizeof(ksline), "KS distance %.6g (0.001-level critical %.6g)\n",
                ks_distance, ks_critical_0001);
  os << ksline;
  return os.str();
}

}  // namespace scoretest
