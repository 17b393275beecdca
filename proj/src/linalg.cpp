#include "scoretest/linalg.hpp"

#include "scoretest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace scoretest {

namespace {

// First entry with magnitude above tol decides the sign; falls back to the
// largest-magnitude entry for near-zero leading elements.
void fix_sign(Eigen::VectorXd& v, double tol = 1e-12) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > tol) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0) v = -v;
}

int argmax_abs(const Eigen::VectorXd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  return static_cast<int>(imax);
}

bool values_tied(double a, double b) {
  return std::abs(a - b) <= kEigenTieRelTol * std::max(std::abs(a), std::abs(b));
}

// Descending sort with the tie rule, then the sign convention.
void order_and_orient(std::vector<EigenPair>& pairs) {
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const EigenPair& x, const EigenPair& y) { return x.value > y.value; });
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t j = i + 1;
    while (j < pairs.size() && values_tied(pairs[i].value, pairs[j].value)) ++j;
    if (j - i > 1) {
      std::stable_sort(pairs.begin() + i, pairs.begin() + j,
                       [](const EigenPair& x, const EigenPair& y) {
                         return argmax_abs(x.vector) < argmax_abs(y.vector);
                       });
    }
    i = j;
  }
  for (auto& pr : pairs) fix_sign(pr.vector);
}

}  // namespace

CenteredMatrix center(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) throw InvalidDataError("centering needs at least 2 rows");
  if (!X.allFinite()) throw InvalidDataError("non-finite entry in data matrix");
  CenteredMatrix out;
  out.column_means = X.colwise().mean();
  out.values = X.rowwise() - out.column_means.transpose();
  return out;
}

CenteredMatrix center(const DataMatrix& X) {
  X.validate();
  return center(X.values);
}

SumsOfProducts sums_of_products(const Eigen::MatrixXd& M,
                                const std::optional<Eigen::MatrixXd>& Q) {
  SumsOfProducts out;
  if (Q) {
    if (Q->rows() != Q->cols() || Q->rows() != M.rows())
      throw ShapeError("projection is " + std::to_string(Q->rows()) + "x" +
                       std::to_string(Q->cols()) + " but data has " +
                       std::to_string(M.rows()) + " rows");
    out.values = M.transpose() * (*Q) * M;
    out.kind = SspKind::Projected;
  } else {
    out.values = M.transpose() * M;
    out.kind = SspKind::Total;
  }
  out.values = ((out.values + out.values.transpose()) * 0.5).eval();
  return out;
}

SumsOfProducts sums_of_products(const CenteredMatrix& C) {
  SumsOfProducts out = sums_of_products(C.values);
  out.kind = SspKind::Residual;
  return out;
}

std::vector<EigenPair> symmetric_eigen(const Eigen::MatrixXd& S, int count) {
  const int m = static_cast<int>(S.rows());
  if (S.cols() != m) throw ShapeError("eigendecomposition needs a square matrix");
  if (count < 1 || count > m) throw DomainError("eigenpair count out of range");
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(S.cwiseAbs().maxCoeff(), 1e-300);
  if (asym > 1e-10 * scale) throw ShapeError("matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      ((S + S.transpose()) * 0.5).eval());
  if (solver.info() != Eigen::Success) throw EigenError("symmetric eigensolver failed");

  std::vector<EigenPair> pairs(m);
  for (int i = 0; i < m; ++i) {
    pairs[i].value = solver.eigenvalues()[i];
    pairs[i].vector = solver.eigenvectors().col(i);
  }
  order_and_orient(pairs);
  pairs.resize(count);
  return pairs;
}

DualEigenResult dual_eigen_scores(const Eigen::MatrixXd& M, int count, double rank_tol) {
  const int n = static_cast<int>(M.rows());
  const int p = static_cast<int>(M.cols());
  if (count < 1 || count > std::min(n, p))
    throw DomainError("dual score count must be in [1, min(n, p)]");

  Eigen::MatrixXd gram = M * M.transpose();
  gram = ((gram + gram.transpose()) * 0.5).eval();
  std::vector<EigenPair> pairs = symmetric_eigen(gram, n);

  const double lambda1 = pairs.empty() ? 0.0 : std::max(pairs.front().value, 0.0);
  int rank = 0;
  for (const auto& pr : pairs) {
    if (pr.value > rank_tol * lambda1 && pr.value > 0.0) ++rank;
  }

  DualEigenResult out;
  out.truncated = rank < count;
  const int keep = std::min(count, rank);
  out.pairs.reserve(keep);
  for (int i = 0; i < keep; ++i) {
    EigenPair pr = pairs[i];
    pr.vector *= std::sqrt(pr.value);  // z'z = lambda
    out.pairs.push_back(std::move(pr));
  }
  return out;
}

Eigen::VectorXd primal_from_dual(const Eigen::MatrixXd& M, const EigenPair& dual) {
  if (dual.value <= 0.0) throw DomainError("primal recovery needs a positive eigenvalue");
  Eigen::VectorXd d = M.transpose() * dual.vector / dual.value;
  const double norm = d.norm();
  if (norm <= 0.0) throw EigenError("primal recovery produced a zero vector");
  d /= norm;
  fix_sign(d);
  return d;
}

namespace {

int checked_rank(const Eigen::MatrixXd& P, const char* name) {
  const double tr = P.trace();
  const int r = static_cast<int>(std::lround(tr));
  if (std::abs(tr - r) > 1e-8)
    throw DesignError(std::string(name) + " trace " + std::to_string(tr) +
                      " is not close to an integer rank");
  return r;
}

void check_projection(const Eigen::MatrixXd& P, const char* name) {
  if (P.rows() != P.cols()) throw DesignError(std::string(name) + " must be square");
  if (!P.allFinite()) throw DesignError(std::string(name) + " has non-finite entries");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw DesignError(std::string(name) + " is not symmetric");
  if ((P * P - P).cwiseAbs().maxCoeff() > 1e-10)
    throw DesignError(std::string(name) + " is not idempotent");
}

}  // namespace

ProjectionPair validate_projection_pair(Eigen::MatrixXd Q, Eigen::MatrixXd Q_H) {
  check_projection(Q, "Q");
  check_projection(Q_H, "Q_H");
  if (Q.rows() != Q_H.rows()) throw DesignError("Q and Q_H sizes differ");
  const int n = static_cast<int>(Q.rows());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff(
      ((Q - Q_H + (Q - Q_H).transpose()) * 0.5).eval());
  if (diff.info() != Eigen::Success) throw EigenError("eigensolve of Q - Q_H failed");
  if (diff.eigenvalues().minCoeff() < -1e-10)
    throw DesignError("Q - Q_H is not positive semidefinite");

  ProjectionPair pair;
  pair.f = checked_rank(Q, "Q");
  pair.f_H = checked_rank(Q_H, "Q_H");
  if (!(1 <= pair.f_H && pair.f_H < pair.f && pair.f <= n))
    throw DesignError("ranks must satisfy 1 <= f_H < f <= n (got f_H=" +
                      std::to_string(pair.f_H) + ", f=" + std::to_string(pair.f) +
                      ", n=" + std::to_string(n) + ")");
  pair.Q = std::move(Q);
  pair.Q_H = std::move(Q_H);
  return pair;
}

ProjectionPair make_design_projections(const Design& design, int n) {
  if (n < 2) throw DesignError("designs need n >= 2");
  const int want = design.implied_n();
  if (want > 0 && want != n)
    throw DesignError("design implies n=" + std::to_string(want) + " but got n=" +
                      std::to_string(n));

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd Jn = Eigen::MatrixXd::Constant(n, n, 1.0 / n);

  switch (design.kind()) {
    case Design::Kind::OneGroup:
      return validate_projection_pair(I, Jn);
    case Design::Kind::TwoGroup: {
      const int n1 = design.group1_size();
      // Centered group-1 indicator; its rank-1 projection reproduces the
      // two-group mean-difference statistic for centered scores.
      Eigen::VectorXd c = Eigen::VectorXd::Constant(n, -static_cast<double>(n1) / n);
      c.head(n1).array() += 1.0;
      return validate_projection_pair(I - Jn, (c * c.transpose()) / c.squaredNorm());
    }
    case Design::Kind::Correlation: {
      const Eigen::VectorXd& y = design.target().values;
      if (static_cast<int>(y.size()) != n)
        throw DesignError("correlation target length does not match n");
      return validate_projection_pair(I - Jn, (y * y.transpose()) / y.squaredNorm());
    }
    case Design::Kind::General:
      return validate_projection_pair(design.projections().Q, design.projections().Q_H);
  }
  throw DesignError("unknown design kind");
}

std::uint64_t matrix_fingerprint(const Eigen::MatrixXd& M) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (word >> (8 * byte)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(M.rows()));
  mix(static_cast<std::uint64_t>(M.cols()));
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      std::uint64_t bits;
      const double v = M(i, j);
      std::memcpy(&bits, &v, sizeof(bits));
      mix(bits);
    }
  }
  return h;
}

}  // namespace scoretest
