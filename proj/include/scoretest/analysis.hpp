#pragma once

#include "scoretest/io.hpp"
#include "scoretest/model_choice.hpp"
#include "scoretest/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace scoretest {

struct AnalysisConfig {
  std::string input_path;
  std::string design = "one-group";  // one-group | two-group | correlation | general
  std::string labels_column;         // two-group
  std::string target_column;         // correlation target / regression variable
  std::string q_path;                // general design: Q matrix file
  std::string qh_path;               // general design: Q_H matrix file
  std::string method = "pca";  // pca | gene-sets | column-order | diagonal-order | regression
  double alpha = 0.05;
  std::string procedure = "simple";  // simple | hommel-kropf
  int k = 1;
  std::uint64_t seed = 0;  // echoed into the report provenance
  int max_scores = 0;      // 0 = all available
  int threads = 0;

  void validate() const;  // throws ConfigError
};

struct ResultRow {
  int score_num = 0;  // 1-based position in the tested order
  std::string label;  // PC label, variable id, or gene-set center id
  int size = 1;       // gene-set member count; p for PCA scores; 1 otherwise
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

struct AnalysisResult {
  std::vector<ResultRow> rows;  // tested scores only, in procedure order
  SequentialOutcome outcome;
  nlohmann::ordered_json report;  // deterministic machine-readable report
};

AnalysisResult run_analysis(const AnalysisConfig& config);

// CSV with the label folded into the row-id column so the emitted table
// re-ingests through the standard reader; numbers carry 12 significant
// digits, p-values additionally in scientific notation.
std::string result_table_csv(const AnalysisResult& result);
std::string result_table_text(const AnalysisResult& result);

std::string format_g12(double value);

}  // namespace scoretest
