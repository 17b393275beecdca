#include "scoretest/model_choice.hpp"

#include "scoretest/errors.hpp"
#include "scoretest/linalg.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace scoretest {

namespace {

// Variables with a centered sum of squares at or below this fraction of the
// largest one are treated as zero-variance and skipped.
constexpr double kZeroVarianceRelTol = 1e-20;

const double kSqrtHalf = std::sqrt(0.5);

std::vector<int> sorted_desc_with_index_ties(const Eigen::VectorXd& keys) {
  std::vector<int> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&keys](int i, int j) {
    if (keys[i] != keys[j]) return keys[i] > keys[j];
    return i < j;
  });
  return order;
}

}  // namespace

WeightMatrix pca_weights(const SumsOfProducts& S, int q, double rank_tol) {
  const int p = static_cast<int>(S.values.rows());
  if (q < 1 || q > p) throw DomainError("component count out of range");
  std::vector<EigenPair> pairs = symmetric_eigen(S.values, p);

  const double lambda1 = std::max(pairs.front().value, 0.0);
  int rank = 0;
  for (const auto& pr : pairs)
    if (pr.value > rank_tol * lambda1 && pr.value > 0.0) ++rank;

  WeightMatrix out;
  out.source = WeightSource::Pca;
  out.derived_from = matrix_fingerprint(S.values);
  out.truncated = rank < q;
  const int keep = std::min(q, rank);
  out.columns.resize(p, keep);
  for (int h = 0; h < keep; ++h) {
    out.columns.col(h) = pairs[h].vector;
    out.labels.push_back("PC" + std::to_string(h + 1));
    out.eigenvalues.push_back(pairs[h].value);
  }
  return out;
}

WeightMatrix pca_weights(const Eigen::MatrixXd& M, int q, double rank_tol) {
  const int n = static_cast<int>(M.rows());
  const int p = static_cast<int>(M.cols());
  if (q < 1 || q > std::min(n, p)) throw DomainError("component count out of range");

  if (n >= p) return pca_weights(sums_of_products(M), q, rank_tol);

  // p > n: solve on the n x n Gram matrix and map dual vectors back.
  DualEigenResult dual = dual_eigen_scores(M, q, rank_tol);
  WeightMatrix out;
  out.source = WeightSource::Pca;
  out.derived_from = matrix_fingerprint((M * M.transpose()).eval());
  out.truncated = dual.truncated;
  out.columns.resize(p, static_cast<int>(dual.pairs.size()));
  for (std::size_t h = 0; h < dual.pairs.size(); ++h) {
    out.columns.col(static_cast<int>(h)) = primal_from_dual(M, dual.pairs[h]);
    out.labels.push_back("PC" + std::to_string(h + 1));
    out.eigenvalues.push_back(dual.pairs[h].value);
  }
  return out;
}

OrderingKey kropf_diagonal_order(const SumsOfProducts& S) {
  OrderingKey key;
  key.rule = OrderingRule::Diagonal;
  key.keys = S.values.diagonal();
  key.order = sorted_desc_with_index_ties(key.keys);
  return key;
}

OrderingKey column_sum_order(const SumsOfProducts& W) {
  OrderingKey key;
  key.rule = OrderingRule::ColumnAbsSum;
  key.keys = W.values.cwiseAbs().colwise().sum();
  key.order = sorted_desc_with_index_ties(key.keys);
  return key;
}

WeightMatrix indicator_weights(const OrderingKey& key, int p, std::uint64_t fingerprint) {
  WeightMatrix out;
  out.source = key.rule == OrderingRule::Diagonal ? WeightSource::KropfDiagonal
                                                  : WeightSource::ColumnSum;
  out.derived_from = fingerprint;
  out.columns = Eigen::MatrixXd::Zero(p, static_cast<int>(key.order.size()));
  for (std::size_t h = 0; h < key.order.size(); ++h) {
    out.columns(key.order[h], static_cast<int>(h)) = 1.0;
    out.labels.push_back("var" + std::to_string(key.order[h]));
  }
  return out;
}

GeneSetSequence build_gene_sets(const Eigen::MatrixXd& M, const GeneSetOptions& opts) {
  const int p = static_cast<int>(M.cols());
  if (p < 1) throw ShapeError("gene set construction needs at least one variable");
  if (opts.cap < 1) throw ConfigError("gene set cap must be >= 1");

  GeneSetSequence seq;
  seq.derived_from = matrix_fingerprint(M);

  const Eigen::VectorXd ss = M.colwise().squaredNorm();
  const double max_ss = ss.maxCoeff();
  std::vector<char> usable(p, 1);
  for (int i = 0; i < p; ++i) {
    if (!(ss[i] > kZeroVarianceRelTol * max_ss)) {
      usable[i] = 0;
      seq.skipped_columns.push_back(i);
    }
  }

  // One candidate set per usable center; correlations against the center come
  // from a single matrix-vector pass so no p x p matrix is ever formed.
  std::vector<GeneSet> candidates(p);
  detail::parallel_for(0, p, opts.threads, [&](long lo, long hi) {
    for (long c = lo; c < hi; ++c) {
      if (!usable[c]) continue;
      GeneSet set;
      set.center = static_cast<int>(c);
      const Eigen::VectorXd cross = M.transpose() * M.col(c);
      const double inv_center = 1.0 / std::sqrt(ss[c]);
      for (int i = 0; i < p; ++i) {
        if (!usable[i] || ss[i] > ss[c]) continue;
        const double r =
            i == c ? 1.0 : cross[i] * inv_center / std::sqrt(ss[i]);
        if (r < kSqrtHalf && i != c) continue;
        set.members.push_back(i);
        set.correlations.push_back(i == c ? 1.0 : r);
      }
      // Dominantly correlated members: r descending, ties by lower index.
      std::vector<int> pos(set.members.size());
      std::iota(pos.begin(), pos.end(), 0);
      std::stable_sort(pos.begin(), pos.end(), [&set](int a, int b) {
        if (set.correlations[a] != set.correlations[b])
          return set.correlations[a] > set.correlations[b];
        return set.members[a] < set.members[b];
      });
      const std::size_t cap = static_cast<std::size_t>(opts.cap);
      double r_sum = 0.0;
      std::size_t counted = 0;
      for (int idx : pos) {
        const bool is_center = set.members[idx] == set.center;
        if (!opts.include_center_in_measure && is_center) continue;
        if (counted == cap) break;
        r_sum += set.correlations[idx];
        ++counted;
      }
      set.measure = ss[c] * r_sum;
      for (std::size_t t = 0; t < std::min(cap, pos.size()); ++t)
        set.top20.push_back(set.members[pos[t]]);
      std::sort(set.top20.begin(), set.top20.end());
      candidates[c] = std::move(set);
    }
  });

  std::vector<int> order;
  order.reserve(p);
  for (int c = 0; c < p; ++c)
    if (usable[c]) order.push_back(c);
  std::stable_sort(order.begin(), order.end(), [&candidates](int a, int b) {
    if (candidates[a].measure != candidates[b].measure)
      return candidates[a].measure > candidates[b].measure;
    return a < b;
  });

  // Greedy retention in O_m order; overlap is checked on the top-20 lists only.
  std::unordered_set<int> used;
  for (int c : order) {
    GeneSet& set = candidates[c];
    bool overlap = false;
    for (int g : set.top20) {
      if (used.count(g)) {
        overlap = true;
        break;
      }
    }
    if (overlap) continue;
    for (int g : set.top20) used.insert(g);
    seq.sets.push_back(std::move(set));
  }
  return seq;
}

GeneSetSequence build_gene_sets(const CenteredMatrix& C, const GeneSetOptions& opts) {
  return build_gene_sets(C.values, opts);
}

WeightMatrix gene_set_weights(const GeneSetSequence& seq, const Eigen::MatrixXd& M) {
  const int p = static_cast<int>(M.cols());
  const Eigen::VectorXd ss = M.colwise().squaredNorm();
  WeightMatrix out;
  out.source = WeightSource::GeneSet;
  out.derived_from = seq.derived_from;
  out.columns = Eigen::MatrixXd::Zero(p, static_cast<int>(seq.sets.size()));
  for (std::size_t h = 0; h < seq.sets.size(); ++h) {
    for (int i : seq.sets[h].members) {
      if (i < 0 || i >= p) throw ShapeError("gene set member index out of range");
      if (!(ss[i] > 0.0)) throw DegenerateScoreError("gene set member has zero variance");
      out.columns(i, static_cast<int>(h)) = 1.0 / std::sqrt(ss[i]);
    }
    out.labels.push_back("set" + std::to_string(seq.sets[h].center));
  }
  return out;
}

std::vector<ScoreVector> make_scores(const Eigen::MatrixXd& M, const WeightMatrix& W,
                                     DesignPtr design) {
  if (M.cols() != W.columns.rows())
    throw ShapeError("weight rows do not match the data columns");
  std::vector<ScoreVector> scores;
  scores.reserve(W.columns.cols());
  for (int h = 0; h < W.columns.cols(); ++h) {
    std::string id = h < static_cast<int>(W.labels.size()) ? W.labels[h]
                                                           : "score" + std::to_string(h + 1);
    scores.push_back(make_score(M * W.columns.col(h), design, std::move(id)));
  }
  return scores;
}

SequentialOutcome run_sequential(const std::vector<ScoreVector>& scores, double alpha,
                                 Procedure procedure, int k) {
  if (scores.empty()) throw EmptyInputError("no scores to test");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (procedure == Procedure::HommelKropf && k < 1)
    throw ConfigError("Hommel-Kropf needs k >= 1");

  SequentialOutcome out;
  out.procedure = procedure;
  out.k = procedure == Procedure::HommelKropf ? k : 1;
  out.level_used = procedure == Procedure::HommelKropf ? alpha / k : alpha;

  int non_significant = 0;
  const int stop_after = procedure == Procedure::HommelKropf ? out.k : 1;
  std::size_t h = 0;
  for (; h < scores.size(); ++h) {
    BetaTestResult result = test_score(scores[h], out.level_used);
    const bool sig = result.significant;
    out.results.push_back(std::move(result));
    if (sig) {
      out.significant_indices.push_back(h + 1);
    } else if (++non_significant == stop_after) {
      ++h;
      break;
    }
  }
  out.stop_index = h + 1;  // first position that was not tested
  return out;
}

}  // namespace scoretest
