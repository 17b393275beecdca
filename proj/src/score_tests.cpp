#include "scoretest/score_tests.hpp"

#include "scoretest/errors.hpp"
#include "scoretest/linalg.hpp"

#include <cmath>
#include <limits>

namespace scoretest {

namespace {

BetaTestResult finish(double B, BetaParams params, double alpha, Interpretation tag) {
  if (B < 0.0) B = 0.0;  // quadratic-form ratios can round slightly below 0
  if (B > 1.0) B = 1.0;
  BetaTestResult r;
  r.statistic = B;
  r.params = params;
  r.p_value = beta_pvalue(B, params, &r.p_clamped);
  r.alpha = alpha;
  r.significant = r.p_value <= alpha;
  r.interpretation = tag;
  return r;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

}  // namespace

ClassicalOneGroupResult classical_one_group(const DataMatrix& X, double alpha) {
  X.validate();
  check_alpha(alpha);
  const int n = X.n();
  const int p = X.p();
  if (n - 1 < p)
    throw DimensionError("classical test needs n - 1 >= p (n=" + std::to_string(n) +
                         ", p=" + std::to_string(p) + ")");

  const Eigen::VectorXd xbar = X.values.colwise().mean();
  const Eigen::MatrixXd W = sums_of_products(X.values).values;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(W);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(W.trace(), 1e-300))
    throw SingularError("X'X is singular");

  const double B = n * xbar.dot(ldlt.solve(xbar));
  ClassicalOneGroupResult out;
  out.beta = finish(B, BetaParams{p / 2.0, (n - p) / 2.0}, alpha, Interpretation::MeanValue);

  const double Bc = out.beta.statistic;
  if (1.0 - Bc <= 1e-14) {
    out.f_statistic = std::numeric_limits<double>::infinity();
  } else {
    out.f_statistic = (static_cast<double>(n - p) / p) * Bc / (1.0 - Bc);
    // Same statistic through the residual matrix G; both routes must agree.
    const Eigen::MatrixXd G = sums_of_products(center(X.values).values).values;
    Eigen::LDLT<Eigen::MatrixXd> gldlt(G);
    if (gldlt.info() == Eigen::Success && gldlt.isPositive() &&
        gldlt.vectorD().minCoeff() > 1e-12 * std::max(G.trace(), 1e-300)) {
      const double f_via_g = (static_cast<double>(n - p) / p) * n * xbar.dot(gldlt.solve(xbar));
      if (std::abs(f_via_g - out.f_statistic) > 1e-6 * std::max(1.0, std::abs(out.f_statistic)))
        throw SingularError("beta and residual F routes disagree; X'X is ill-conditioned");
    }
  }
  out.f_pvalue = out.beta.p_value;
  return out;
}

WilksResult wilks_test(const Eigen::MatrixXd& Z, const ProjectionPair& proj, double alpha) {
  check_alpha(alpha);
  const int n = static_cast<int>(Z.rows());
  const int q = static_cast<int>(Z.cols());
  if (n != proj.Q.rows()) throw ShapeError("score matrix rows do not match the projections");
  if (q < 1) throw ShapeError("score matrix needs at least one column");
  if (q > proj.f - proj.f_H)
    throw DimensionError("Wilks test needs q <= f - f_H");

  const Eigen::MatrixXd T = sums_of_products(Z).values;
  const Eigen::MatrixXd E = Z.transpose() * (proj.Q - proj.Q_H) * Z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes(T);
  if (tes.info() != Eigen::Success ||
      tes.eigenvalues().minCoeff() <= 1e-12 * std::max(tes.eigenvalues().maxCoeff(), 1e-300))
    throw SingularError("Z'Z is singular");
  const double detT = T.determinant();

  double lambda = E.determinant() / detT;
  lambda = std::min(std::max(lambda, std::numeric_limits<double>::min()), 1.0);

  WilksResult out;
  out.lambda = lambda;
  out.q = q;
  out.f_H = proj.f_H;
  out.f_err = proj.f - proj.f_H;
  // Bartlett: -(nu_E - (q - f_H + 1)/2) log(Lambda) ~ chi^2(q * f_H).
  const double mult = out.f_err - (q - proj.f_H + 1) / 2.0;
  const double stat = -mult * std::log(lambda);
  out.p_value = 1.0 - chi_square_cdf(stat, static_cast<double>(q) * proj.f_H);
  out.approximate_p = true;
  out.alpha = alpha;
  out.significant = out.p_value <= alpha;
  return out;
}

BetaTestResult spherical_mean_test(const Eigen::MatrixXd& Z, double alpha, Interpretation tag) {
  check_alpha(alpha);
  const int n = static_cast<int>(Z.rows());
  const int q = static_cast<int>(Z.cols());
  if (n - 1 < q) throw DimensionError("spherical mean test needs n - 1 >= q");
  const Eigen::VectorXd zbar = Z.colwise().mean();
  const Eigen::MatrixXd T = sums_of_products(Z).values;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(T);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(T.trace(), 1e-300))
    throw SingularError("score matrix is rank deficient");
  const double B = n * zbar.dot(ldlt.solve(zbar));
  return finish(B, BetaParams{q / 2.0, (n - q) / 2.0}, alpha, tag);
}

BetaTestResult score_test_one_group(const ScoreVector& z, double alpha) {
  check_alpha(alpha);
  const int n = z.n();
  const double total = z.values.squaredNorm();
  if (total <= 0.0) throw DegenerateScoreError("score is identically zero");
  const double zbar = z.values.mean();
  const double B = n * zbar * zbar / total;
  return finish(B, BetaParams{0.5, (n - 1) / 2.0}, alpha, Interpretation::NonSphericity);
}

BetaTestResult score_test_two_group(const ScoreVector& z, std::pair<int, int> sizes,
                                    double alpha) {
  check_alpha(alpha);
  const int n1 = sizes.first;
  const int n2 = sizes.second;
  if (n1 < 1 || n2 < 1) throw DesignError("two-group test needs both groups non-empty");
  const int n = z.n();
  if (n1 + n2 != n) throw DesignError("group sizes must sum to the score length");

  const double scale = z.values.cwiseAbs().maxCoeff();
  if (std::abs(z.values.sum()) > 1e-9 * n * std::max(scale, 1e-300))
    throw InvalidScoreError("two-group score is not centered");
  const double total = z.values.squaredNorm();
  if (total <= 0.0) throw DegenerateScoreError("score is identically zero");

  const double m1 = z.values.head(n1).mean();
  const double m2 = z.values.tail(n2).mean();
  const double diff = m1 - m2;
  const double B = (static_cast<double>(n1) * n2 / n) * diff * diff / total;
  return finish(B, BetaParams{0.5, (n - 2) / 2.0}, alpha, Interpretation::NonSphericity);
}

BetaTestResult score_test_correlation(const ScoreVector& z, const TargetVector& y,
                                      double alpha) {
  check_alpha(alpha);
  const int n = z.n();
  if (static_cast<int>(y.values.size()) != n)
    throw ShapeError("target length does not match the score");
  const double yy = y.values.squaredNorm();
  if (yy <= 0.0) throw DegenerateTargetError("target vector is zero");
  const double yscale = y.values.cwiseAbs().maxCoeff();
  if (!y.centered || std::abs(y.values.sum()) > 1e-10 * n * std::max(yscale, 1e-300))
    throw DegenerateTargetError("target vector is not centered");
  const double total = z.values.squaredNorm();
  if (total <= 0.0) throw DegenerateScoreError("score is identically zero");

  const double zy = z.values.dot(y.values);
  const double B = zy * zy / (total * yy);
  return finish(B, BetaParams{0.5, (n - 2) / 2.0}, alpha, Interpretation::NonSphericity);
}

BetaTestResult score_test_general(const ScoreVector& z, const ProjectionPair& proj,
                                  double alpha) {
  check_alpha(alpha);
  const int n = z.n();
  if (proj.Q.rows() != n) throw ShapeError("projection size does not match the score");
  const double total = z.values.squaredNorm();
  if (total <= 0.0) throw DegenerateScoreError("score is identically zero");
  const double outside = (z.values - proj.Q * z.values).norm();
  if (outside > 1e-9 * std::sqrt(total))
    throw InvalidScoreError("score does not lie in the range of Q");

  const double B = z.values.dot(proj.Q_H * z.values) / total;
  return finish(B, BetaParams{proj.f_H / 2.0, (proj.f - proj.f_H) / 2.0}, alpha,
                Interpretation::NonSphericity);
}

Eigen::VectorXd regression_score(const Eigen::VectorXd& x_target, const Eigen::MatrixXd& X1) {
  if (X1.rows() != x_target.size())
    throw ShapeError("regressor rows do not match the target length");
  const Eigen::MatrixXd G = X1.transpose() * X1;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(G.trace(), 1e-300))
    throw SingularError("X1'X1 is singular");
  return x_target - X1 * ldlt.solve(X1.transpose() * x_target);
}

BetaTestResult test_score(const ScoreVector& z, double alpha) {
  if (!z.design) throw DesignError("score has no design attached");
  switch (z.design->kind()) {
    case Design::Kind::OneGroup:
      return score_test_one_group(z, alpha);
    case Design::Kind::TwoGroup:
      return score_test_two_group(
          z, {z.design->group1_size(), z.design->group2_size()}, alpha);
    case Design::Kind::Correlation:
      return score_test_correlation(z, z.design->target(), alpha);
    case Design::Kind::General:
      return score_test_general(z, z.design->projections(), alpha);
  }
  throw DesignError("unknown design kind");
}

}  // namespace scoretest
