#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace scoretest {

// Observations: n individuals (rows) by p variables (columns).
struct DataMatrix {
  Eigen::MatrixXd values;            // n x p
  std::vector<std::string> row_ids;  // n, unique
  std::vector<std::string> col_ids;  // p, unique

  int n() const { return static_cast<int>(values.rows()); }
  int p() const { return static_cast<int>(values.cols()); }

  // Throws InvalidDataError unless n >= 2, p >= 1, all entries finite,
  // and row/column ids are unique (when present) and sized consistently.
  void validate() const;
};

// Column-centered data together with the removed column means.
struct CenteredMatrix {
  Eigen::MatrixXd values;        // X - X_bar; each column sums to ~0
  Eigen::VectorXd column_means;  // p
};

enum class SspKind { Total, Residual, Projected };

// Symmetric positive semidefinite p x p matrix M'M, (X-X_bar)'(X-X_bar) or X'QX.
struct SumsOfProducts {
  Eigen::MatrixXd values;
  SspKind kind = SspKind::Total;
};

// Symmetric idempotent Q (rank f) and Q_H (rank f_H) with Q - Q_H PSD and
// 1 <= f_H < f <= n. Q spans the decision subspace, Q_H the hypothesis subspace.
struct ProjectionPair {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Q_H;
  int f = 0;
  int f_H = 0;
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

// Target vector of the correlation design; must be centered before testing.
struct TargetVector {
  Eigen::VectorXd values;
  bool centered = false;
};

// Testing design: one-group, two-group (contiguous blocks, group 1 first),
// correlation against a centered target, or an explicit projection pair.
class Design {
 public:
  enum class Kind { OneGroup, TwoGroup, Correlation, General };

  static Design one_group();
  static Design two_group(int n1, int n2);
  static Design correlation(TargetVector target);
  static Design general(ProjectionPair proj);

  Kind kind() const { return kind_; }
  int group1_size() const { return n1_; }
  int group2_size() const { return n2_; }
  const TargetVector& target() const { return target_; }
  const ProjectionPair& projections() const { return proj_; }

  // n pinned by the design parameters; -1 for one-group (any n >= 2).
  int implied_n() const;

  std::string describe() const;

 private:
  explicit Design(Kind kind) : kind_(kind) {}

  Kind kind_;
  int n1_ = 0;
  int n2_ = 0;
  TargetVector target_;
  ProjectionPair proj_;
};

using DesignPtr = std::shared_ptr<const Design>;

// Linear score z = (projected/centered data) * d with its provenance.
struct ScoreVector {
  Eigen::VectorXd values;
  DesignPtr design;
  std::string weight_id;

  int n() const { return static_cast<int>(values.size()); }
};

// Validates length against the design and, for two-group/correlation designs,
// that the score is centered within 1e-9 * n * max|z|. Throws InvalidScoreError.
ScoreVector make_score(Eigen::VectorXd values, DesignPtr design, std::string weight_id);

}  // namespace scoretest
