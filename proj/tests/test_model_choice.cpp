#include "scoretest/model_choice.hpp"

#include "scoretest/errors.hpp"
#include "scoretest/linalg.hpp"
#include "scoretest/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace scoretest;

namespace {

// One-group score whose test p-value is exactly p_target: mixes the constant
// direction with an orthogonal one at the matching energy split.
ScoreVector score_with_pvalue(double p_target, int n, const DesignPtr& design) {
  const double b = beta_quantile(1.0 - p_target, BetaParams{0.5, (n - 1) / 2.0});
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  u(0) = 1.0 / std::sqrt(2.0);
  u(1) = -1.0 / std::sqrt(2.0);
  Eigen::VectorXd z = std::sqrt(b / n) * Eigen::VectorXd::Ones(n) +
                      std::sqrt(1.0 - b) * u;
  return make_score(std::move(z), design, "synthetic");
}

}  // namespace

TEST_CASE("pca_weights") {
  SUBCASE("two identical centered columns share the weight equally") {
    Eigen::MatrixXd C(4, 2);
    C.col(0) << 1.5, -0.5, -0.5, -0.5;
    C.col(1) = C.col(0);
    const WeightMatrix W = pca_weights(C, 1);
    CHECK(W.columns(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(W.columns(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  }
  SUBCASE("diagonal sums-of-products give coordinate weights in diagonal order") {
    SumsOfProducts S;
    S.values = Eigen::Vector3d(2.0, 7.0, 4.0).asDiagonal();
    const WeightMatrix W = pca_weights(S, 3);
    CHECK(W.columns(1, 0) == doctest::Approx(1.0));
    CHECK(W.columns(2, 1) == doctest::Approx(1.0));
    CHECK(W.columns(0, 2) == doctest::Approx(1.0));
    CHECK(W.eigenvalues[0] == doctest::Approx(7.0));
  }
  SUBCASE("wide matrices route through the dual problem with matching scores") {
    RngStream rng(151);
    const Eigen::MatrixXd M = oracles::random_matrix(8, 30, rng);
    const WeightMatrix W = pca_weights(M, 5);
    const DualEigenResult dual = dual_eigen_scores(M, 5);
    for (int h = 0; h < 5; ++h) {
      const Eigen::VectorXd z = M * W.columns.col(h);
      const Eigen::VectorXd& zd = dual.pairs[h].vector;
      CHECK(std::min((z - zd).norm(), (z + zd).norm()) <= 1e-8 * zd.norm());
      CHECK(W.columns.col(h).norm() == doctest::Approx(1.0));
    }
    CHECK(W.derived_from != 0);
  }
  SUBCASE("requests beyond the numerical rank truncate with a flag") {
    Eigen::MatrixXd C(4, 3);
    C.col(0) << 1, -1, 2, -2;
    C.col(1) = 2.0 * C.col(0);
    C.col(2) = -C.col(0);
    const WeightMatrix W = pca_weights(C, 3);
    CHECK(W.truncated);
    CHECK(W.columns.cols() == 1);
  }
  SUBCASE("re-derivation is bit-identical") {
    RngStream rng(157);
    const Eigen::MatrixXd M = oracles::random_matrix(6, 20, rng);
    const WeightMatrix a = pca_weights(M, 4);
    const WeightMatrix b = pca_weights(M, 4);
    CHECK(a.derived_from == b.derived_from);
    CHECK((a.columns - b.columns).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("orderings") {
  SUBCASE("diagonal rule sorts the diagonal descending") {
    SumsOfProducts S;
    S.values = Eigen::Vector3d(5.0, 9.0, 2.0).asDiagonal();
    const OrderingKey key = kropf_diagonal_order(S);
    CHECK(key.order == std::vector<int>({1, 0, 2}));
  }
  SUBCASE("ties break toward the lower index") {
    SumsOfProducts S;
    S.values = Eigen::MatrixXd::Identity(4, 4);
    const OrderingKey key = kropf_diagonal_order(S);
    CHECK(key.order == std::vector<int>({0, 1, 2, 3}));
  }
  SUBCASE("column abs sums") {
    SumsOfProducts W;
    W.values = Eigen::MatrixXd(2, 2);
    W.values << 4, 1, 1, 3;
    const OrderingKey key = column_sum_order(W);
    CHECK(key.keys[0] == doctest::Approx(5.0));
    CHECK(key.keys[1] == doctest::Approx(4.0));
    CHECK(key.order == std::vector<int>({0, 1}));
  }
  SUBCASE("diagonal W reduces the column rule to the diagonal rule") {
    SumsOfProducts S;
    S.values = Eigen::Vector4d(1.0, 8.0, 3.0, 5.0).asDiagonal();
    CHECK(column_sum_order(S).order == kropf_diagonal_order(S).order);
  }
  SUBCASE("relabeling variables permutes the ordering consistently") {
    RngStream rng(163);
    const Eigen::MatrixXd M = oracles::random_matrix(10, 5, rng);
    const SumsOfProducts W = sums_of_products(M);
    const OrderingKey base = column_sum_order(W);
    // swap variables 1 and 3
    Eigen::PermutationMatrix<Eigen::Dynamic> P(5);
    P.setIdentity();
    P.applyTranspositionOnTheRight(1, 3);
    SumsOfProducts Wp;
    Wp.values = P.transpose() * W.values * P;
    const OrderingKey permuted = column_sum_order(Wp);
    auto relabel = [](int idx) { return idx == 1 ? 3 : idx == 3 ? 1 : idx; };
    for (std::size_t h = 0; h < base.order.size(); ++h)
      CHECK(permuted.order[h] == relabel(base.order[h]));
  }
  SUBCASE("keys are sorted descending on random input") {
    RngStream rng(167);
    const SumsOfProducts W = sums_of_products(oracles::random_matrix(12, 9, rng));
    const OrderingKey key = kropf_diagonal_order(W);
    for (std::size_t h = 1; h < key.order.size(); ++h)
      CHECK(key.keys[key.order[h - 1]] >= key.keys[key.order[h]]);
  }
}

TEST_CASE("indicator_weights run single-variable rules through the score pipeline") {
  SumsOfProducts S;
  S.values = Eigen::Vector3d(1.0, 5.0, 3.0).asDiagonal();
  const OrderingKey key = kropf_diagonal_order(S);
  const WeightMatrix W = indicator_weights(key, 3, 42);
  CHECK(W.columns.col(0)(1) == 1.0);
  CHECK(W.columns.col(0).sum() == 1.0);
  CHECK(W.columns.col(1)(2) == 1.0);
  CHECK(W.columns.col(2)(0) == 1.0);
  CHECK(W.derived_from == 42);
}

TEST_CASE("build_gene_sets") {
  SUBCASE("three-variable rule walkthrough") {
    Eigen::MatrixXd R(3, 3);
    R << 1.0, 0.9, 0.3, 0.9, 1.0, 0.3, 0.3, 0.3, 1.0;
    const Eigen::Vector3d ss(4.0, 2.0, 1.0);
    const Eigen::MatrixXd S =
        ss.cwiseSqrt().asDiagonal() * R * ss.cwiseSqrt().asDiagonal();
    const Eigen::MatrixXd C = oracles::centered_matrix_with_ssp(S, 6);
    const GeneSetSequence seq = build_gene_sets(C);

    REQUIRE(seq.sets.size() == 2);
    CHECK(seq.sets[0].center == 0);
    CHECK(seq.sets[0].members == std::vector<int>({0, 1}));
    CHECK(seq.sets[0].measure == doctest::Approx(4.0 * 1.9).epsilon(1e-9));
    // the set centered on variable 1 shares variable 1 and is deleted
    CHECK(seq.sets[1].center == 2);
    CHECK(seq.sets[1].members == std::vector<int>({2}));
    CHECK(seq.sets[1].measure == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("the measure sums at most 20 correlation terms") {
    const int p = 25;
    Eigen::MatrixXd R = Eigen::MatrixXd::Constant(p, p, 0.72);
    R.diagonal().setOnes();
    Eigen::VectorXd ss(p);
    for (int i = 0; i < p; ++i) ss[i] = 1.0 + 1e-6 * i;  // strict diagonal order
    const Eigen::MatrixXd S =
        ss.cwiseSqrt().asDiagonal() * R * ss.cwiseSqrt().asDiagonal();
    const Eigen::MatrixXd C = oracles::centered_matrix_with_ssp(S, 30);
    const GeneSetSequence seq = build_gene_sets(C);

    REQUIRE(!seq.sets.empty());
    const GeneSet& top = seq.sets.front();
    CHECK(top.center == p - 1);  // largest diagonal entry
    CHECK(top.members.size() == p);
    CHECK(top.top20.size() == 20);
    CHECK(top.measure / ss[p - 1] == doctest::Approx(1.0 + 19 * 0.72).epsilon(1e-4));
  }
  SUBCASE("retained sets have disjoint top-20 lists") {
    RngStream rng(173);
    const Eigen::MatrixXd C = center(oracles::random_matrix(30, 200, rng)).values;
    const GeneSetSequence seq = build_gene_sets(C);
    std::set<int> seen;
    for (const GeneSet& set : seq.sets) {
      for (int g : set.top20) {
        CHECK(seen.count(g) == 0);
        seen.insert(g);
      }
      CHECK(set.top20.size() <= 20);
      CHECK(std::count(set.members.begin(), set.members.end(), set.center) == 1);
    }
    for (std::size_t s = 1; s < seq.sets.size(); ++s)
      CHECK(seq.sets[s - 1].measure >= seq.sets[s].measure);
  }
  SUBCASE("rebuilding produces identical sets") {
    RngStream rng(179);
    const Eigen::MatrixXd C = center(oracles::random_matrix(20, 80, rng)).values;
    const GeneSetSequence a = build_gene_sets(C);
    const GeneSetSequence b = build_gene_sets(C);
    REQUIRE(a.sets.size() == b.sets.size());
    for (std::size_t s = 0; s < a.sets.size(); ++s) {
      CHECK(a.sets[s].center == b.sets[s].center);
      CHECK(a.sets[s].members == b.sets[s].members);
      CHECK(a.sets[s].measure == b.sets[s].measure);  // bit-exact
      CHECK(a.sets[s].top20 == b.sets[s].top20);
    }
  }
  SUBCASE("the candidate pass is independent of the worker count") {
    RngStream rng(211);
    const Eigen::MatrixXd C = center(oracles::random_matrix(25, 120, rng)).values;
    GeneSetOptions serial;
    serial.threads = 1;
    GeneSetOptions parallel;
    parallel.threads = 4;
    const GeneSetSequence a = build_gene_sets(C, serial);
    const GeneSetSequence b = build_gene_sets(C, parallel);
    REQUIRE(a.sets.size() == b.sets.size());
    for (std::size_t s = 0; s < a.sets.size(); ++s) {
      CHECK(a.sets[s].center == b.sets[s].center);
      CHECK(a.sets[s].members == b.sets[s].members);
      CHECK(a.sets[s].measure == b.sets[s].measure);
    }
  }
  SUBCASE("zero-variance columns are skipped with a record") {
    RngStream rng(181);
    Eigen::MatrixXd X = oracles::random_matrix(12, 6, rng);
    X.col(2).setConstant(7.0);  // vanishes after centering
    const Eigen::MatrixXd C = center(X).values;
    const GeneSetSequence seq = build_gene_sets(C);
    REQUIRE(seq.skipped_columns == std::vector<int>({2}));
    for (const GeneSet& set : seq.sets) {
      CHECK(set.center != 2);
      CHECK(std::count(set.members.begin(), set.members.end(), 2) == 0);
    }
  }
  SUBCASE("center term can be excluded from the measure") {
    Eigen::MatrixXd R(2, 2);
    R << 1.0, 0.8, 0.8, 1.0;
    const Eigen::Vector2d ss(4.0, 2.0);
    const Eigen::MatrixXd S =
        ss.cwiseSqrt().asDiagonal() * R * ss.cwiseSqrt().asDiagonal();
    const Eigen::MatrixXd C = oracles::centered_matrix_with_ssp(S, 5);
    GeneSetOptions opts;
    opts.include_center_in_measure = false;
    const GeneSetSequence seq = build_gene_sets(C, opts);
    CHECK(seq.sets.front().measure == doctest::Approx(4.0 * 0.8).epsilon(1e-9));
  }
}

TEST_CASE("gene_set_weights") {
  SUBCASE("single member with sum of squares 4 weighs one half") {
    Eigen::MatrixXd C(4, 1);
    C << 1, -1, 1, -1;  // ss = 4
    GeneSetSequence seq;
    seq.sets.push_back(GeneSet{0, {0}, {1.0}, 4.0, {0}});
    const WeightMatrix W = gene_set_weights(seq, C);
    CHECK(W.columns(0, 0) == doctest::Approx(0.5));
    const Eigen::VectorXd z = C * W.columns.col(0);
    CHECK(z(0) == doctest::Approx(0.5));
  }
  SUBCASE("two identical columns double the standardized score") {
    Eigen::MatrixXd C(4, 2);
    C.col(0) << 1, -1, 1, -1;
    C.col(1) = C.col(0);
    GeneSetSequence seq;
    seq.sets.push_back(GeneSet{0, {0, 1}, {1.0, 1.0}, 8.0, {0, 1}});
    const Eigen::VectorXd z = C * gene_set_weights(seq, C).columns.col(0);
    const Eigen::VectorXd standardized = C.col(0) / 2.0;
    CHECK((z - 2.0 * standardized).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("rescaling a member column leaves the score unchanged") {
    RngStream rng(191);
    Eigen::MatrixXd C = center(oracles::random_matrix(10, 6, rng)).values;
    const GeneSetSequence seq = build_gene_sets(C);
    REQUIRE(!seq.sets.empty());
    const int member = seq.sets.front().members.front();
    const Eigen::VectorXd before = C * gene_set_weights(seq, C).columns.col(0);
    C.col(member) *= 8.0;
    const Eigen::VectorXd after = C * gene_set_weights(seq, C).columns.col(0);
    CHECK((before - after).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("weights are supported exactly on the member set") {
    RngStream rng(193);
    const Eigen::MatrixXd C = center(oracles::random_matrix(15, 40, rng)).values;
    const GeneSetSequence seq = build_gene_sets(C);
    const WeightMatrix W = gene_set_weights(seq, C);
    for (std::size_t h = 0; h < seq.sets.size(); ++h) {
      std::set<int> members(seq.sets[h].members.begin(), seq.sets[h].members.end());
      for (int i = 0; i < W.columns.rows(); ++i) {
        if (members.count(i))
          CHECK(W.columns(i, static_cast<int>(h)) > 0.0);
        else
          CHECK(W.columns(i, static_cast<int>(h)) == 0.0);
      }
    }
  }
}

TEST_CASE("run_sequential") {
  const auto design = std::make_shared<Design>(Design::one_group());
  const int n = 30;

  SUBCASE("simple procedure stops at the first non-significance") {
    std::vector<ScoreVector> scores;
    for (double p : {0.01, 0.2, 0.001}) scores.push_back(score_with_pvalue(p, n, design));
    const SequentialOutcome out = run_sequential(scores, 0.05, Procedure::Simple);
    CHECK(out.results.size() == 2);
    CHECK(out.significant_indices == std::vector<std::size_t>({1}));
    CHECK(out.stop_index == 3);
    CHECK(out.level_used == doctest::Approx(0.05));
  }
  SUBCASE("hommel-kropf runs at alpha/k and stops after the k-th non-significance") {
    std::vector<ScoreVector> scores;
    for (double p : {0.001, 0.2, 0.0005, 0.3, 0.4})
      scores.push_back(score_with_pvalue(p, n, design));
    const SequentialOutcome out = run_sequential(scores, 0.05, Procedure::HommelKropf, 2);
    CHECK(out.level_used == doctest::Approx(0.025));
    CHECK(out.results.size() == 4);
    CHECK(out.significant_indices == std::vector<std::size_t>({1, 3}));
    CHECK(out.stop_index == 5);
  }
  SUBCASE("an immediate non-significance stops the simple procedure") {
    std::vector<ScoreVector> scores = {score_with_pvalue(0.2, n, design),
                                       score_with_pvalue(0.001, n, design)};
    const SequentialOutcome out = run_sequential(scores, 0.05, Procedure::Simple);
    CHECK(out.results.size() == 1);
    CHECK(out.significant_indices.empty());
    CHECK(out.stop_index == 2);
  }
  SUBCASE("significant indices of the simple procedure form a prefix") {
    RngStream rng(197);
    for (int t = 0; t < 25; ++t) {
      std::vector<ScoreVector> scores;
      for (int h = 0; h < 6; ++h)
        scores.push_back(score_with_pvalue(0.001 + 0.3 * rng.uniform01(), n, design));
      const SequentialOutcome out = run_sequential(scores, 0.05, Procedure::Simple);
      for (std::size_t i = 0; i < out.significant_indices.size(); ++i)
        CHECK(out.significant_indices[i] == i + 1);
    }
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(run_sequential({}, 0.05, Procedure::Simple), EmptyInputError);
  }
}
