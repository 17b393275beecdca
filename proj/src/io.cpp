#include "scoretest/io.hpp"

#include "scoretest/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace scoretest {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

char detect_delimiter(const std::string& header) {
  return header.find('\t') != std::string::npos ? '\t' : ',';
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    std::string cell = line.substr(start, pos == std::string::npos ? pos : pos - start);
    // trim ASCII blanks
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t");
    cells.push_back(first == std::string::npos ? std::string()
                                               : cell.substr(first, last - first + 1));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, long row, long col) {
  if (cell.empty()) throw ParseError("empty cell", row, col);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError("cell '" + cell + "' is not numeric", row, col);
  return value;
}

}  // namespace

IngestResult ingest(const std::string& path, const IngestOptions& opts) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.size() < 2) throw ParseError("file has no data rows: " + path);

  const char delim = detect_delimiter(lines.front());
  const std::vector<std::string> header = split(lines.front(), delim);
  if (header.size() < 2) throw ParseError("header needs an id column and a variable", 1, 1);

  int label_col = -1;
  int target_col = -1;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (!opts.labels_column.empty() && header[c] == opts.labels_column)
      label_col = static_cast<int>(c);
    if (!opts.target_column.empty() && header[c] == opts.target_column)
      target_col = static_cast<int>(c);
  }
  if (!opts.labels_column.empty() && label_col < 0)
    throw ParseError("label column '" + opts.labels_column + "' not found in header", 1);
  if (!opts.target_column.empty() && target_col < 0)
    throw ParseError("target column '" + opts.target_column + "' not found in header", 1);
  if (label_col >= 0 && label_col == target_col)
    throw ParseError("label and target name the same column", 1, label_col + 1);

  const bool drop_target = target_col >= 0 && opts.center_target;
  const std::size_t n_rows = lines.size() - 1;
  if (n_rows < 2) throw ParseError("fewer than 2 individuals in " + path);

  IngestResult out;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (static_cast<int>(c) == label_col) continue;
    if (static_cast<int>(c) == target_col && drop_target) continue;
    out.data.col_ids.push_back(header[c]);
  }
  const std::size_t n_vars = out.data.col_ids.size();
  if (n_vars < 1) throw ParseError("no data variables remain after design columns", 1);

  out.data.values.resize(n_rows, n_vars);
  out.data.row_ids.resize(n_rows);
  std::vector<std::string> labels(label_col >= 0 ? n_rows : 0);
  Eigen::VectorXd target(target_col >= 0 ? n_rows : 0);

  for (std::size_t r = 0; r < n_rows; ++r) {
    const long file_row = static_cast<long>(r) + 2;  // 1-based, after the header
    const std::vector<std::string> cells = split(lines[r + 1], delim);
    if (cells.size() != header.size())
      throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()),
                       file_row);
    out.data.row_ids[r] = cells[0];
    std::size_t v = 0;
    for (std::size_t c = 1; c < header.size(); ++c) {
      if (static_cast<int>(c) == label_col) {
        labels[r] = cells[c];
        continue;
      }
      const double value = parse_cell(cells[c], file_row, static_cast<long>(c) + 1);
      if (static_cast<int>(c) == target_col) {
        target[static_cast<Eigen::Index>(r)] = value;
        if (drop_target) continue;
        out.target_index = static_cast<int>(v);
      }
      out.data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(v)) = value;
      ++v;
    }
  }

  if (label_col >= 0) {
    std::vector<std::string> distinct;
    for (const auto& l : labels)
      if (std::find(distinct.begin(), distinct.end(), l) == distinct.end())
        distinct.push_back(l);
    if (distinct.size() != 2) {
      std::string msg = "two-group label column must have exactly 2 distinct values, got " +
                        std::to_string(distinct.size()) + ": ";
      for (std::size_t i = 0; i < distinct.size(); ++i)
        msg += (i ? ", '" : "'") + distinct[i] + "'";
      throw DesignError(msg);
    }
    // Stable reorder: group 1 (first value encountered) first.
    std::vector<int> order;
    order.reserve(n_rows);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t r = 0; r < n_rows; ++r)
        if (labels[r] == distinct[pass]) order.push_back(static_cast<int>(r));
    Eigen::MatrixXd reordered(n_rows, n_vars);
    std::vector<std::string> row_ids(n_rows);
    Eigen::VectorXd reordered_target(target.size());
    for (std::size_t r = 0; r < n_rows; ++r) {
      reordered.row(r) = out.data.values.row(order[r]);
      row_ids[r] = out.data.row_ids[order[r]];
      if (target.size() > 0) reordered_target[r] = target[order[r]];
    }
    out.data.values = std::move(reordered);
    out.data.row_ids = std::move(row_ids);
    target = std::move(reordered_target);
    out.has_groups = true;
    out.group_values = distinct;
    out.group_sizes.first =
        static_cast<int>(std::count(labels.begin(), labels.end(), distinct[0]));
    out.group_sizes.second = static_cast<int>(n_rows) - out.group_sizes.first;
  }

  if (target_col >= 0 && drop_target) {
    out.has_target = true;
    out.target_mean = target.mean();
    out.target.values = target.array() - out.target_mean;
    out.target.centered = true;
  } else if (target_col >= 0) {
    out.has_target = true;
    out.target.values = target;
    out.target.centered = false;
  }

  out.data.validate();
  return out;
}

Eigen::MatrixXd read_matrix_file(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError("matrix file is empty: " + path);
  const char delim = detect_delimiter(lines.front());
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const std::vector<std::string> cells = split(lines[r], delim);
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row.push_back(parse_cell(cells[c], static_cast<long>(r) + 1, static_cast<long>(c) + 1));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged matrix row", static_cast<long>(r) + 1);
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) M(r, c) = rows[r][c];
  return M;
}

}  // namespace scoretest
