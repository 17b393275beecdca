#pragma once

#include "scoretest/score_tests.hpp"
#include "scoretest/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scoretest {

enum class WeightSource { Pca, KropfDiagonal, ColumnSum, GeneSet, Regression };

// Score weight vectors d_1..d_q, each a deterministic function of the
// recorded sums-of-products matrix (identified by its fingerprint).
struct WeightMatrix {
  Eigen::MatrixXd columns;  // p x q
  WeightSource source = WeightSource::Pca;
  std::uint64_t derived_from = 0;
  bool truncated = false;             // fewer columns than requested
  std::vector<std::string> labels;    // per-column provenance
  std::vector<double> eigenvalues;    // pca source only, descending
};

enum class OrderingRule { Diagonal, ColumnAbsSum };

struct OrderingKey {
  Eigen::VectorXd keys;       // per-variable key values
  OrderingRule rule = OrderingRule::Diagonal;
  std::vector<int> order;     // variable indices, keys descending, ties by index
};

struct GeneSet {
  int center = 0;
  std::vector<int> members;           // ascending variable indices, center included
  std::vector<double> correlations;   // r(center, member), aligned with members
  double measure = 0.0;               // O_m
  std::vector<int> top20;             // <= 20 dominantly correlated members
};

struct GeneSetOptions {
  bool include_center_in_measure = true;  // count the center's r = 1 term in O_m
  int cap = 20;                           // correlations summed; also the deletion scope
  int threads = 0;                        // candidate construction; 0 = auto
};

struct GeneSetSequence {
  std::vector<GeneSet> sets;          // retained, O_m descending
  std::vector<int> skipped_columns;   // zero-variance variables, excluded everywhere
  std::uint64_t derived_from = 0;
};

enum class Procedure { Simple, HommelKropf };

struct SequentialOutcome {
  std::vector<BetaTestResult> results;           // tests performed, in score order
  std::size_t stop_index = 1;                    // 1-based first index NOT tested
  std::vector<std::size_t> significant_indices;  // 1-based positions
  Procedure procedure = Procedure::Simple;
  int k = 1;
  double level_used = 0.05;
};

// Eigenvector weights of S, descending eigenvalues, unit norm, sign fixed.
// Components with eigenvalues at or below rank_tol * lambda_1 are dropped.
WeightMatrix pca_weights(const SumsOfProducts& S, int q, double rank_tol = 1e-10);
// Same weights computed from the score-generating matrix M (n x p); uses the
// dual n x n eigenproblem when n < p.
WeightMatrix pca_weights(const Eigen::MatrixXd& M, int q, double rank_tol = 1e-10);

OrderingKey kropf_diagonal_order(const SumsOfProducts& S);
OrderingKey column_sum_order(const SumsOfProducts& W);

// Indicator weight columns in the given variable order, so single-variable
// score rules run through the same pipeline as every other weight source.
WeightMatrix indicator_weights(const OrderingKey& key, int p, std::uint64_t fingerprint);

// Gene sets over the columns of a centered (or projected) matrix: a variable
// joins the set of a center if its diagonal sum of squares does not exceed the
// center's and its correlation with the center is at least sqrt(0.5). Sets are
// ordered by decreasing O_m; a set is retained only if its top-20 list is
// disjoint from the top-20 lists of all previously retained sets.
GeneSetSequence build_gene_sets(const CenteredMatrix& C, const GeneSetOptions& opts = {});
GeneSetSequence build_gene_sets(const Eigen::MatrixXd& M, const GeneSetOptions& opts = {});

// Standardized weights d_ih = 1 / sqrt(ss_i) on members, 0 elsewhere.
WeightMatrix gene_set_weights(const GeneSetSequence& seq, const Eigen::MatrixXd& M);

// Scores z_h = M d_h with design and provenance attached.
std::vector<ScoreVector> make_scores(const Eigen::MatrixXd& M, const WeightMatrix& W,
                                     DesignPtr design);

// Ordered beta tests: the simple procedure stops at the first non-significant
// test (run at level alpha); Hommel-Kropf runs at alpha/k and stops after the
// k-th non-significance. Scores after the stop are not tested.
SequentialOutcome run_sequential(const std::vector<ScoreVector>& scores, double alpha,
                                 Procedure procedure, int k = 1);

}  // namespace scoretest
