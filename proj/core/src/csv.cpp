#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "suffice/dataset.hpp"
#include "suffice/errors.hpp"

namespace suffice {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const std::size_t a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size() && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_col,
                 const std::string& group_col) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("csv file is empty: " + path);
  const std::vector<std::string> header = split_line(line);

  std::size_t label_idx = header.size(), group_idx = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_col) label_idx = c;
    if (header[c] == group_col) group_idx = c;
  }
  if (label_idx == header.size()) {
    throw SchemaError("csv is missing the label column '" + label_col + "'");
  }
  if (group_idx == header.size()) {
    throw SchemaError("csv is missing the group column '" + group_col + "'");
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError("csv row " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    }
    rows.push_back(std::move(cells));
  }
  const std::size_t n = rows.size();
  if (n == 0) throw ValidationError("csv has a header but no data rows: " + path);

  // Labels: must be exactly 0 or 1.
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    if (!parse_double(rows[i][label_idx], v) || (v != 0.0 && v != 1.0)) {
      throw ValidationError("row " + std::to_string(i) + ": label value '" +
                            rows[i][label_idx] + "' is not 0/1");
    }
    labels[i] = static_cast<int>(v);
  }

  // Groups: ids by sorted distinct raw value.
  std::set<std::string> distinct_groups;
  for (std::size_t i = 0; i < n; ++i) distinct_groups.insert(rows[i][group_idx]);
  std::vector<std::string> group_names(distinct_groups.begin(), distinct_groups.end());
  std::map<std::string, int> group_id;
  for (std::size_t g = 0; g < group_names.size(); ++g) {
    group_id[group_names[g]] = static_cast<int>(g);
  }
  std::vector<int> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[i] = group_id[rows[i][group_idx]];

  // Feature columns, in file order. The first data cell decides a column's
  // kind: numeric columns are z-scored, string columns one-hot encoded with
  // categories in first-appearance order.
  struct FeatureColumn {
    std::string name;
    bool numeric = false;
    std::vector<double> values;              // numeric only
    std::vector<std::string> categories;     // categorical only
    std::vector<std::size_t> category_of;    // categorical only, per row
  };
  std::vector<FeatureColumn> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_idx || c == group_idx) continue;
    FeatureColumn col;
    col.name = header[c];
    double probe = 0.0;
    col.numeric = parse_double(rows[0][c], probe);
    if (col.numeric) {
      col.values.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!parse_double(rows[i][c], col.values[i])) {
          throw ValidationError("row " + std::to_string(i) + ", column '" + col.name +
                                "': cannot parse '" + rows[i][c] + "' as a number");
        }
      }
    } else {
      std::map<std::string, std::size_t> seen;
      col.category_of.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& v = rows[i][c];
        auto it = seen.find(v);
        if (it == seen.end()) {
          it = seen.emplace(v, col.categories.size()).first;
          col.categories.push_back(v);
        }
        col.category_of[i] = it->second;
      }
    }
    columns.push_back(std::move(col));
  }

  std::size_t d = 0;
  for (const auto& col : columns) d += col.numeric ? 1 : col.categories.size();

  Dataset ds;
  ds.features = Matrix(n, d);
  ds.labels = std::move(labels);
  ds.groups = std::move(groups);
  ds.group_names = std::move(group_names);

  std::size_t j = 0;
  for (const auto& col : columns) {
    if (col.numeric) {
      // z-score with the file's own statistics; a constant column stays 0.
      double mean = 0.0;
      for (double v : col.values) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : col.values) var += (v - mean) * (v - mean);
      var /= static_cast<double>(n);
      const double sd = std::sqrt(var);
      const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        ds.features.at(i, j) = (col.values[i] - mean) * scale;
      }
      ds.feature_names.push_back(col.name);
      ++j;
    } else {
      for (std::size_t k = 0; k < col.categories.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
          ds.features.at(i, j) = col.category_of[i] == k ? 1.0 : 0.0;
        }
        ds.feature_names.push_back(col.name + "=" + col.categories[k]);
        ++j;
      }
    }
  }

  validate(ds);
  return ds;
}

}  // namespace suffice
