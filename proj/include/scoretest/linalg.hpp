#pragma once

#include "scoretest/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace scoretest {

// Eigenvalues below kRankRelTol * lambda_1 count as zero when usable
// components are counted. Overridable wherever a rank decision is made.
inline constexpr double kRankRelTol = 1e-10;

// Relative gap below which two eigenvalues are treated as tied and ordered
// by the index of the largest-magnitude vector entry.
inline constexpr double kEigenTieRelTol = 1e-12;

CenteredMatrix center(const DataMatrix& X);
CenteredMatrix center(const Eigen::MatrixXd& X);

// M'M (kind Total), or M'QM (kind Projected) when a projection is supplied.
// Symmetry is enforced by averaging with the transpose.
SumsOfProducts sums_of_products(const Eigen::MatrixXd& M,
                                const std::optional<Eigen::MatrixXd>& Q = std::nullopt);
SumsOfProducts sums_of_products(const CenteredMatrix& C);  // kind Residual

// Top `count` eigenpairs of a symmetric matrix, sorted by descending value.
// Ties (relative gap <= kEigenTieRelTol) are ordered by the index of the
// largest-magnitude vector entry; each vector's first element larger than
// 1e-12 in magnitude is made positive. Unit-norm vectors.
std::vector<EigenPair> symmetric_eigen(const Eigen::MatrixXd& S, int count);

struct DualEigenResult {
  std::vector<EigenPair> pairs;  // dual vectors z_h with z_h'z_h = lambda_h
  bool truncated = false;        // requested count exceeded the numerical rank
};

// Solves (M M') z = z lambda on the n x n Gram matrix; the nonzero eigenvalues
// equal those of M'M and z_h = +-(M d_h) for the unit primal eigenvectors d_h.
// Eigenvalues at or below rank_tol * lambda_1 are dropped.
DualEigenResult dual_eigen_scores(const Eigen::MatrixXd& M, int count,
                                  double rank_tol = kRankRelTol);

// Recovers the unit primal vector d = M'z / lambda from a dual pair.
Eigen::VectorXd primal_from_dual(const Eigen::MatrixXd& M, const EigenPair& dual);

// Validates symmetry, idempotence (1e-10), Q - Q_H PSD (1e-10) and the rank
// conditions 1 <= f_H < f <= n; fills f, f_H from the rounded traces.
// Throws DesignError on violation.
ProjectionPair validate_projection_pair(Eigen::MatrixXd Q, Eigen::MatrixXd Q_H);

// One-group: (I, J/n). Two-group: (I - J/n, projection onto the centered
// group contrast). Correlation: (I - J/n, y(y'y)^-1 y'). General: validated
// pass-through of the design's pair.
ProjectionPair make_design_projections(const Design& design, int n);

// FNV-1a over dimensions and raw column-major doubles; identifies the matrix
// a data-driven weight rule was derived from.
std::uint64_t matrix_fingerprint(const Eigen::MatrixXd& M);

}  // namespace scoretest
