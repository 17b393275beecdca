#include "scoretest/analysis.hpp"

#include "scoretest/errors.hpp"
#include "scoretest/linalg.hpp"
#include "scoretest/score_tests.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

namespace scoretest {

namespace {

bool one_of(const std::string& value, std::initializer_list<const char*> options) {
  for (const char* opt : options)
    if (value == opt) return true;
  return false;
}

struct Pipeline {
  DesignPtr design;
  Eigen::MatrixXd M;  // score-generating matrix (raw, centered or projected)
  WeightMatrix weights;
  std::vector<int> sizes;           // per score
  std::vector<std::string> labels;  // per score
  nlohmann::ordered_json extras;    // method-specific report entries
  std::optional<Eigen::VectorXd> direct_score;  // regression method
};

}  // namespace

void AnalysisConfig::validate() const {
  if (input_path.empty()) throw ConfigError("missing input path");
  if (!one_of(design, {"one-group", "two-group", "correlation", "general"}))
    throw ConfigError("unknown design '" + design + "'");
  if (!one_of(method, {"pca", "gene-sets", "column-order", "diagonal-order", "regression"}))
    throw ConfigError("unknown method '" + method + "'");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!one_of(procedure, {"simple", "hommel-kropf"}))
    throw ConfigError("unknown procedure '" + procedure + "'");
  if (procedure == "hommel-kropf" && k < 1) throw ConfigError("hommel-kropf needs k >= 1");
  if (design == "two-group" && labels_column.empty())
    throw ConfigError("two-group design needs --labels");
  if (design == "correlation" && target_column.empty())
    throw ConfigError("correlation design needs --target");
  if (design == "general" && (q_path.empty() || qh_path.empty()))
    throw ConfigError("general design needs --q-matrix and --qh-matrix files");
  if (method == "regression" && target_column.empty())
    throw ConfigError("regression method needs --target naming the tested variable");
  if (method == "regression" && design != "one-group")
    throw ConfigError("regression method is defined for the one-group design");
  if (method == "gene-sets" && design == "one-group")
    throw ConfigError(
        "gene-set scores are centered and carry no one-group mean signal; "
        "use a two-group, correlation or general design");
  if (max_scores < 0) throw ConfigError("max-scores must be >= 0");
}

namespace {

Pipeline build_pipeline(const AnalysisConfig& config, const IngestResult& in) {
  Pipeline pl;
  const int n = in.data.n();
  const int p = in.data.p();

  ProjectionPair pair;
  if (config.design == "one-group") {
    pl.design = std::make_shared<Design>(Design::one_group());
    pl.M = in.data.values;
  } else if (config.design == "two-group") {
    pl.design = std::make_shared<Design>(
        Design::two_group(in.group_sizes.first, in.group_sizes.second));
    pl.M = center(in.data).values;
  } else if (config.design == "correlation") {
    pl.design = std::make_shared<Design>(Design::correlation(in.target));
    pl.M = center(in.data).values;
  } else {
    Eigen::MatrixXd Q = read_matrix_file(config.q_path);
    Eigen::MatrixXd Q_H = read_matrix_file(config.qh_path);
    if (Q.rows() != n)
      throw DesignError("Q is " + std::to_string(Q.rows()) + "x" +
                        std::to_string(Q.cols()) + " but the data has " + std::to_string(n) +
                        " rows");
    pair = validate_projection_pair(std::move(Q), std::move(Q_H));
    pl.design = std::make_shared<Design>(Design::general(pair));
    pl.M = pair.Q * in.data.values;
  }

  const int cap = config.max_scores > 0 ? config.max_scores : p;

  if (config.method == "pca") {
    const int q = std::min({cap, n, p});
    pl.weights = pca_weights(pl.M, q);
    pl.extras["eigenvalues"] = pl.weights.eigenvalues;
    for (std::size_t h = 0; h < pl.weights.labels.size(); ++h) {
      pl.labels.push_back(pl.weights.labels[h]);
      pl.sizes.push_back(p);
    }
  } else if (config.method == "column-order" || config.method == "diagonal-order") {
    const SumsOfProducts W = sums_of_products(pl.M);
    OrderingKey key = config.method == "column-order" ? column_sum_order(W)
                                                      : kropf_diagonal_order(W);
    nlohmann::ordered_json keys = nlohmann::ordered_json::array();
    for (int idx : key.order)
      keys.push_back({{"variable", in.data.col_ids[idx]}, {"key", key.keys[idx]}});
    pl.extras["ordering"] = std::move(keys);
    if (static_cast<int>(key.order.size()) > cap) key.order.resize(cap);
    pl.weights = indicator_weights(key, p, matrix_fingerprint(W.values));
    for (int idx : key.order) {
      pl.labels.push_back(in.data.col_ids[idx]);
      pl.sizes.push_back(1);
    }
  } else if (config.method == "gene-sets") {
    GeneSetOptions gopts;
    gopts.threads = config.threads;
    GeneSetSequence seq = build_gene_sets(pl.M, gopts);
    if (!seq.skipped_columns.empty()) {
      nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
      for (int idx : seq.skipped_columns) skipped.push_back(in.data.col_ids[idx]);
      pl.extras["skipped_zero_variance"] = std::move(skipped);
    }
    if (static_cast<int>(seq.sets.size()) > cap) seq.sets.resize(cap);
    nlohmann::ordered_json sets = nlohmann::ordered_json::array();
    for (const GeneSet& set : seq.sets) {
      nlohmann::ordered_json members = nlohmann::ordered_json::array();
      for (int i : set.members) members.push_back(in.data.col_ids[i]);
      sets.push_back({{"center", in.data.col_ids[set.center]},
                      {"size", set.members.size()},
                      {"measure", set.measure},
                      {"members", std::move(members)}});
      pl.labels.push_back(in.data.col_ids[set.center]);
      pl.sizes.push_back(static_cast<int>(set.members.size()));
    }
    pl.extras["gene_sets"] = std::move(sets);
    pl.weights = gene_set_weights(seq, pl.M);
  } else {  // regression
    if (in.target_index < 0) throw ConfigError("regression target column was not resolved");
    const int t = in.target_index;
    Eigen::MatrixXd X1(n, p - 1);
    for (int c = 0, w = 0; c < p; ++c)
      if (c != t) X1.col(w++) = pl.M.col(c);
    pl.direct_score = regression_score(pl.M.col(t), X1);
    pl.weights.source = WeightSource::Regression;
    pl.weights.derived_from = matrix_fingerprint(pl.M);
    pl.weights.columns = Eigen::MatrixXd::Zero(p, 0);  // score provided directly
    pl.extras["regression_target"] = in.data.col_ids[t];
    pl.labels.push_back(in.data.col_ids[t]);
    pl.sizes.push_back(1);
  }
  return pl;
}

}  // namespace

AnalysisResult run_analysis(const AnalysisConfig& config) {
  config.validate();

  IngestOptions iopts;
  if (config.design == "two-group") iopts.labels_column = config.labels_column;
  if (config.design == "correlation") {
    iopts.target_column = config.target_column;
    iopts.center_target = true;
  } else if (config.method == "regression") {
    iopts.target_column = config.target_column;
    iopts.center_target = false;
  }
  const IngestResult in = ingest(config.input_path, iopts);

  Pipeline pl = build_pipeline(config, in);

  std::vector<ScoreVector> scores;
  if (pl.direct_score) {
    scores.push_back(make_score(std::move(*pl.direct_score), pl.design, pl.labels.front()));
  } else {
    scores = make_scores(pl.M, pl.weights, pl.design);
  }
  if (scores.empty()) throw EmptyInputError("no usable scores for this configuration");

  const Procedure procedure =
      config.procedure == "hommel-kropf" ? Procedure::HommelKropf : Procedure::Simple;

  AnalysisResult result;
  result.outcome = run_sequential(scores, config.alpha, procedure, config.k);
  for (std::size_t h = 0; h < result.outcome.results.size(); ++h) {
    const BetaTestResult& r = result.outcome.results[h];
    ResultRow row;
    row.score_num = static_cast<int>(h) + 1;
    row.label = h < pl.labels.size() ? pl.labels[h] : "score" + std::to_string(h + 1);
    row.size = h < pl.sizes.size() ? pl.sizes[h] : 1;
    row.statistic = r.statistic;
    row.p_value = r.p_value;
    row.significant = r.significant;
    result.rows.push_back(std::move(row));
  }

  nlohmann::ordered_json& rep = result.report;
  rep["input"] = config.input_path;
  rep["design"] = config.design;
  rep["method"] = config.method;
  rep["alpha"] = config.alpha;
  rep["procedure"] = config.procedure;
  if (procedure == Procedure::HommelKropf) rep["k"] = config.k;
  rep["level_used"] = result.outcome.level_used;
  rep["seed"] = config.seed;
  rep["n"] = in.data.n();
  rep["p"] = in.data.p();
  if (in.has_groups) {
    rep["groups"] = {{"label_column", config.labels_column},
                     {"group1", in.group_values[0]},
                     {"group2", in.group_values[1]},
                     {"n1", in.group_sizes.first},
                     {"n2", in.group_sizes.second}};
  }
  if (config.design == "correlation") {
    rep["target"] = {{"column", config.target_column}, {"removed_mean", in.target_mean}};
  }
  rep["weights_fingerprint"] = pl.weights.derived_from;
  for (auto& [key, value] : pl.extras.items()) rep[key] = value;

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const ResultRow& row : result.rows) {
    rows.push_back({{"score", row.score_num},
                    {"label", row.label},
                    {"size", row.size},
                    {"B", row.statistic},
                    {"p_value", row.p_value},
                    {"significant", row.significant}});
  }
  rep["scores"] = std::move(rows);
  rep["stop_index"] = result.outcome.stop_index;
  rep["significant_scores"] = result.outcome.significant_indices;
  return result;
}

std::string format_g12(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return std::string(buf);
}

std::string result_table_csv(const AnalysisResult& result) {
  std::ostringstream os;
  os << "score,size,B,p_value,p_sci,significant\n";
  for (const ResultRow& row : result.rows) {
    char sci[24];
    std::snprintf(sci, sizeof(sci), "%.2E", row.p_value);
    os << row.score_num << "_" << row.label << "," << row.size << ","
       << format_g12(row.statistic) << "," << format_g12(row.p_value) << "," << sci << ","
       << (row.significant ? 1 : 0) << "\n";
  }
  return os.str();
}

std::string result_table_text(const AnalysisResult& result) {
  std::ostringstream os;
  os << "score  label                 size      B                 p-value        sig\n";
  for (const ResultRow& row : result.rows) {
    char line[200];
    char sci[24];
    std::snprintf(sci, sizeof(sci), "%.2E", row.p_value);
    std::snprintf(line, sizeof(line), "%-6d %-21s %-9d %-17.12g %-14s %s\n", row.score_num,
                  row.label.c_str(), row.size, row.statistic, sci,
                  row.significant ? "yes" : "no");
    os << line;
  }
  os << "stop index: " << result.outcome.stop_index
     << "  level used: " << format_g12(result.outcome.level_used) << "\n";
  return os.str();
}

}  // namespace scoretest
