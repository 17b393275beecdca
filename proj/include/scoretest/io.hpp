#pragma once

#include "scoretest/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace scoretest {

struct IngestOptions {
  // Two-group label column: must hold exactly 2 distinct values; group 1 is
  // the first value encountered, and rows are reordered group 1 first.
  std::string labels_column;
  // Named target column. With center_target (correlation design) it is
  // removed from the data and centered; without (regression method) it stays
  // a data column and only its index is reported.
  std::string target_column;
  bool center_target = true;
};

struct IngestResult {
  DataMatrix data;
  bool has_groups = false;
  std::pair<int, int> group_sizes{0, 0};
  std::vector<std::string> group_values;  // the two labels, first-seen order
  bool has_target = false;
  TargetVector target;     // centered on load
  double target_mean = 0;  // mean removed from the target
  int target_index = -1;   // regression mode: column index within data
};

// UTF-8 CSV/TSV with a header row of variable ids and a leading column of
// individual ids. The delimiter is a tab when the header contains one, a
// comma otherwise; CRLF and LF files parse identically. Decimal point only.
IngestResult ingest(const std::string& path, const IngestOptions& opts = {});

// Headerless numeric matrix (same delimiter rules); used for the general
// design's Q / Q_H files.
Eigen::MatrixXd read_matrix_file(const std::string& path);

}  // namespace scoretest
