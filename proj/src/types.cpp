#include "scoretest/types.hpp"

#include "scoretest/errors.hpp"
#include "scoretest/linalg.hpp"

#include <cmath>
#include <unordered_set>

namespace scoretest {

namespace {

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second)
      throw InvalidDataError(std::string("duplicate ") + what + " id: " + id);
  }
}

}  // namespace

void DataMatrix::validate() const {
  if (values.rows() < 2) throw InvalidDataError("need at least 2 individuals");
  if (values.cols() < 1) throw InvalidDataError("need at least 1 variable");
  if (!values.allFinite()) throw InvalidDataError("non-finite entry in data matrix");
  if (!row_ids.empty() && static_cast<int>(row_ids.size()) != n())
    throw InvalidDataError("row id count does not match rows");
  if (!col_ids.empty() && static_cast<int>(col_ids.size()) != p())
    throw InvalidDataError("column id count does not match columns");
  check_unique(row_ids, "row");
  check_unique(col_ids, "column");
}

Design Design::one_group() { return Design(Kind::OneGroup); }

Design Design::two_group(int n1, int n2) {
  if (n1 < 1 || n2 < 1) throw DesignError("two-group design needs both group sizes >= 1");
  Design d(Kind::TwoGroup);
  d.n1_ = n1;
  d.n2_ = n2;
  return d;
}

Design Design::correlation(TargetVector target) {
  if (target.values.size() < 2) throw DesignError("correlation target needs length >= 2");
  if (!target.values.allFinite()) throw DesignError("non-finite correlation target");
  const double scale = target.values.cwiseAbs().maxCoeff();
  if (!target.centered ||
      std::abs(target.values.sum()) > 1e-10 * target.values.size() * std::max(scale, 1.0))
    throw DesignError("correlation target must be centered");
  if (target.values.squaredNorm() == 0.0) throw DesignError("correlation target is zero");
  Design d(Kind::Correlation);
  d.target_ = std::move(target);
  return d;
}

Design Design::general(ProjectionPair proj) {
  Design d(Kind::General);
  d.proj_ = validate_projection_pair(std::move(proj.Q), std::move(proj.Q_H));
  return d;
}

int Design::implied_n() const {
  switch (kind_) {
    case Kind::OneGroup: return -1;
    case Kind::TwoGroup: return n1_ + n2_;
    case Kind::Correlation: return static_cast<int>(target_.values.size());
    case Kind::General: return static_cast<int>(proj_.Q.rows());
  }
  return -1;
}

std::string Design::describe() const {
  switch (kind_) {
    case Kind::OneGroup: return "one-group";
    case Kind::TwoGroup:
      return "two-group(" + std::to_string(n1_) + "," + std::to_string(n2_) + ")";
    case Kind::Correlation: return "correlation";
    case Kind::General:
      return "general(f=" + std::to_string(proj_.f) + ",f_H=" + std::to_string(proj_.f_H) + ")";
  }
  return "?";
}

ScoreVector make_score(Eigen::VectorXd values, DesignPtr design, std::string weight_id) {
  if (!design) throw DesignError("score needs a design");
  const int n = static_cast<int>(values.size());
  const int want = design->implied_n();
  if (want > 0 && n != want)
    throw InvalidScoreError("score length " + std::to_string(n) + " does not match design n=" +
                            std::to_string(want));
  if (n < 2) throw InvalidScoreError("score needs length >= 2");
  if (!values.allFinite()) throw InvalidScoreError("non-finite score entry");
  if (design->kind() == Design::Kind::TwoGroup || design->kind() == Design::Kind::Correlation) {
    const double scale = values.cwiseAbs().maxCoeff();
    if (std::abs(values.sum()) > 1e-9 * n * std::max(scale, 1e-300))
      throw InvalidScoreError("score for a centered design is not centered");
  }
  return ScoreVector{std::move(values), std::move(design), std::move(weight_id)};
}

}  // namespace scoretest
