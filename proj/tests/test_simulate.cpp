#include "scoretest/simulate.hpp"

#include "scoretest/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace scoretest;

namespace {

SimConfig one_group_config(long runs, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n = 10;
  cfg.p = 5;
  cfg.runs = runs;
  cfg.alpha = 0.05;
  cfg.seed = seed;
  cfg.scenario.design = std::make_shared<Design>(Design::one_group());
  cfg.scenario.rule = WeightRule::Pca;
  cfg.scenario.num_scores = 1;
  return cfg;
}

}  // namespace

TEST_CASE("simulate_null_level") {
  SUBCASE("a single run rejects or not") {
    const SimReport rep = simulate_null_level(one_group_config(1, 5));
    REQUIRE(rep.rejection_frequency.size() == 1);
    const double f = rep.rejection_frequency[0];
    CHECK((f == 0.0 || f == 1.0));
  }
  SUBCASE("identical seed and config reproduce the report bit for bit") {
    const SimReport a = simulate_null_level(one_group_config(2000, 77));
    const SimReport b = simulate_null_level(one_group_config(2000, 77));
    CHECK(a.to_json().dump() == b.to_json().dump());
  }
  SUBCASE("results do not depend on the worker count") {
    SimConfig cfg = one_group_config(4000, 99);
    cfg.threads = 1;
    const SimReport serial = simulate_null_level(cfg);
    cfg.threads = 4;
    const SimReport parallel = simulate_null_level(cfg);
    CHECK(serial.to_json().dump() == parallel.to_json().dump());
  }
  SUBCASE("null frequency lands near the level") {
    const SimReport rep = simulate_null_level(one_group_config(20000, 123));
    CHECK(std::abs(rep.rejection_frequency[0] - 0.05) <= rep.half_width_3sigma[0]);
    CHECK(rep.ks_distance <= rep.ks_critical_0001);
    CHECK(rep.null_params.a == doctest::Approx(0.5));
    CHECK(rep.null_params.b == doctest::Approx(4.5));
  }
  SUBCASE("half width follows the binomial formula") {
    const SimReport rep = simulate_null_level(one_group_config(5000, 7));
    const double f = rep.rejection_frequency[0];
    CHECK(rep.half_width_3sigma[0] ==
          doctest::Approx(3.0 * std::sqrt(f * (1.0 - f) / 5000.0)));
  }
  SUBCASE("a non-null mean is rejected for the one-group design") {
    SimConfig cfg = one_group_config(100, 1);
    cfg.mean = Eigen::VectorXd::Constant(5, 1.0);
    CHECK_THROWS_AS(simulate_null_level(cfg), ConfigError);
  }
  SUBCASE("an indefinite covariance is rejected") {
    SimConfig cfg = one_group_config(100, 1);
    cfg.covariance = -Eigen::MatrixXd::Identity(5, 5);
    CHECK_THROWS_AS(simulate_null_level(cfg), ConfigError);
  }
  SUBCASE("singular covariances are accepted through the symmetric square root") {
    SimConfig cfg = one_group_config(500, 11);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(5, 5);
    cov(0, 0) = 1.0;
    cov(1, 1) = 1.0;  // rank 2
    cfg.covariance = cov;
    const SimReport rep = simulate_null_level(cfg);
    CHECK(rep.rejection_frequency.size() == 1);
  }
}

TEST_CASE("simulate_example2") {
  SUBCASE("requires a six-figure run budget") {
    CHECK_THROWS_AS(simulate_example2(1000, 1), ConfigError);
  }
  SUBCASE("first score dominates, second exceeds the level") {
    const SimReport rep = simulate_example2(100000, 31);
    REQUIRE(rep.rejection_frequency.size() == 2);
    CHECK(rep.rejection_frequency[0] >= 0.999);
    CHECK(rep.rejection_frequency[1] == doctest::Approx(0.0834).epsilon(0.12));
    CHECK(rep.rejection_frequency[1] > 0.05);
  }
  SUBCASE("the null mean restores the exact level for the second score") {
    const SimReport rep =
        simulate_example2_at(20000, 37, Eigen::VectorXd::Zero(3), 0, 1000);
    CHECK(rep.rejection_frequency[1] <= 0.05 + rep.half_width_3sigma[1]);
  }
  SUBCASE("doubling the runs shrinks the interval by sqrt(2)") {
    Eigen::VectorXd mean(3);
    mean << 0.0, 0.0, 3.0;
    const SimReport a = simulate_example2_at(10000, 41, mean, 0, 1000);
    const SimReport b = simulate_example2_at(20000, 41, mean, 0, 1000);
    CHECK(b.half_width_3sigma[1] ==
          doctest::Approx(a.half_width_3sigma[1] / std::sqrt(2.0)).epsilon(0.1));
  }
}

TEST_CASE("sequential scenarios track any-significance") {
  SimConfig cfg = one_group_config(5000, 53);
  cfg.p = 4;
  cfg.scenario.sequential = true;
  cfg.scenario.procedure = Procedure::Simple;
  const SimReport rep = simulate_null_level(cfg);
  CHECK(rep.any_significant_frequency >= 0.0);
  // under the full null the first test alone decides any-significance
  CHECK(rep.any_significant_frequency ==
        doctest::Approx(rep.rejection_frequency[0]).epsilon(1e-12));
}

TEST_CASE("random rotations satisfy the orthogonality invariants") {
  RngStream rng(59);
  for (int n : {2, 5, 9}) {
    const RotationMatrix rot = random_rotation(n, rng);
    CHECK((rot.C.transpose() * rot.C - Eigen::MatrixXd::Identity(n, n))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
    CHECK(std::abs(rot.C.determinant()) == doctest::Approx(1.0).epsilon(1e-8));
  }
  RotationMatrix bad{Eigen::MatrixXd::Constant(3, 3, 0.5)};
  CHECK_THROWS_AS(bad.validate(), EigenError);
}

TEST_CASE("rotation_invariance_check") {
  SUBCASE("spherical draws pass") {
    const RotationCheckReport rep = rotation_invariance_check(
        [](RngStream& rng) {
          Eigen::VectorXd z(8);
          for (int i = 0; i < 8; ++i) z[i] = rng.normal();
          return z;
        },
        3000, 61);
    CHECK(rep.spherical_consistent);
    CHECK(rep.ks_two_sample <= rep.ks_critical);
  }
  SUBCASE("a constant generator is flagged") {
    const RotationCheckReport rep = rotation_invariance_check(
        [](RngStream&) { return Eigen::VectorXd::Ones(8).eval(); }, 1000, 67);
    CHECK_FALSE(rep.spherical_consistent);
  }
  SUBCASE("repeatable for a fixed seed") {
    auto gen = [](RngStream& rng) {
      Eigen::VectorXd z(6);
      for (int i = 0; i < 6; ++i) z[i] = rng.normal();
      return z;
    };
    const RotationCheckReport a = rotation_invariance_check(gen, 500, 71);
    const RotationCheckReport b = rotation_invariance_check(gen, 500, 71);
    CHECK(a.ks_two_sample == b.ks_two_sample);
  }
}

TEST_CASE("thread count resolution") {
  CHECK(effective_thread_count(3) == 3);
  CHECK(effective_thread_count(0) >= 1);
  setenv("SCORETEST_THREADS", "2", 1);
  CHECK(effective_thread_count(0) == 2);
  CHECK(effective_thread_count(5) == 5);  // explicit request wins
  unsetenv("SCORETEST_THREADS");
}

TEST_CASE("ks helpers") {
  SUBCASE("uniform sample against the uniform cdf") {
    RngStream rng(83);
    std::vector<double> sample(5000);
    for (double& v : sample) v = rng.uniform01();
    const double d = ks_statistic(sample, [](double x) { return x; });
    CHECK(d <= ks_critical_value(0.001, 5000.0));
  }
  SUBCASE("a shifted sample fails") {
    RngStream rng(89);
    std::vector<double> sample(5000);
    for (double& v : sample) v = 0.5 * rng.uniform01();
    const double d = ks_statistic(sample, [](double x) { return x; });
    CHECK(d > ks_critical_value(0.001, 5000.0));
  }
  SUBCASE("two-sample distance separates distinct laws") {
    RngStream rng(97);
    std::vector<double> a(2000), b(2000);
    for (double& v : a) v = rng.uniform01();
    for (double& v : b) v = rng.uniform01() + 0.2;
    CHECK(ks_two_sample_statistic(a, a) == 0.0);
    CHECK(ks_two_sample_statistic(a, b) > ks_critical_value(0.001, 1000.0));
  }
  SUBCASE("critical value formula") {
    CHECK(ks_critical_value(0.001, 1.0) ==
          doctest::Approx(std::sqrt(-0.5 * std::log(0.0005))));
  }
}
