#include "padr/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "padr/errors.hpp"

namespace padr {

namespace {

constexpr const char* kInterceptName = "(intercept)";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + " contains non-finite values");
}

}  // namespace

void TwoSampleData::validate() const {
  if (n() < 1) throw ValidationError("source sample is empty");
  if (N() < 1) throw ValidationError("target sample is empty");
  if (target_x.cols() != d()) throw ValidationError("source and target covariate dimensions differ");
  if (source_y.size() != n()) throw ValidationError("outcome count does not match source sample size");
  if (d() < 1) throw ValidationError("no covariates");
  if (n() < d()) {
    throw ValidationError("source sample size " + std::to_string(n()) +
                          " is smaller than the covariate dimension " + std::to_string(d()));
  }
  if (!covariate_names.empty() && static_cast<Eigen::Index>(covariate_names.size()) != d()) {
    throw ValidationError("covariate name count does not match dimension");
  }
  check_finite(source_x, "source covariates");
  check_finite(target_x, "target covariates");
  check_finite(source_y, "source outcomes");
  if (has_intercept) {
    if ((source_x.col(0).array() != 1.0).any() || (target_x.col(0).array() != 1.0).any()) {
      throw ValidationError("intercept column is not identically 1");
    }
  }
}

TwoSampleData make_two_sample(const Eigen::MatrixXd& source_raw, const Eigen::VectorXd& source_y,
                              const Eigen::MatrixXd& target_raw, bool add_intercept,
                              std::vector<std::string> names) {
  if (source_raw.cols() != target_raw.cols()) {
    throw ValidationError("source and target covariate dimensions differ");
  }
  const Eigen::Index raw = source_raw.cols();
  if (names.empty()) {
    for (Eigen::Index j = 1; j <= raw; ++j) names.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names.size()) != raw) {
    throw ValidationError("covariate name count does not match dimension");
  }
  TwoSampleData data;
  data.has_intercept = add_intercept;
  const Eigen::Index off = add_intercept ? 1 : 0;
  data.source_x.resize(source_raw.rows(), raw + off);
  data.target_x.resize(target_raw.rows(), raw + off);
  if (add_intercept) {
    data.source_x.col(0).setOnes();
    data.target_x.col(0).setOnes();
    data.covariate_names.push_back(kInterceptName);
  }
  data.source_x.rightCols(raw) = source_raw;
  data.target_x.rightCols(raw) = target_raw;
  data.source_y = source_y;
  for (auto& nm : names) data.covariate_names.push_back(std::move(nm));
  data.validate();
  return data;
}

TwoSampleData load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      lines.push_back(rest.substr(0, nl));
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  if (lines.empty() || trim(lines.front()).empty()) throw ValidationError("data file has no header row");

  const auto header = split_fields(lines.front());
  auto find_column = [&](const std::string& name) -> std::size_t {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    throw ValidationError("missing column '" + name + "'");
  };
  const std::size_t y_col = find_column(schema.outcome_column);
  const std::size_t delta_col = find_column(schema.indicator_column);
  std::vector<std::size_t> x_cols;
  std::vector<std::string> x_names;
  for (const auto& c : schema.covariate_columns) {
    x_cols.push_back(find_column(c));
    x_names.push_back(c);
  }
  if (x_cols.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (k == y_col || k == delta_col) continue;
      x_cols.push_back(k);
      x_names.emplace_back(header[k]);
    }
  }
  if (x_cols.empty()) throw ValidationError("no covariate columns in data file");

  std::vector<std::vector<double>> src_rows, tgt_rows;
  std::vector<double> src_y;
  std::size_t row_index = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    ++row_index;
    const auto fields = split_fields(lines[li]);
    if (fields.size() < header.size()) throw ParseError(row_index, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));

    double delta = 0.0;
    if (!parse_number(fields[delta_col], delta) || (delta != 0.0 && delta != 1.0)) {
      throw ParseError(row_index, "indicator '" + std::string(fields[delta_col]) + "' is not 0 or 1");
    }
    std::vector<double> x(x_cols.size());
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      const auto cell = fields[x_cols[k]];
      if (cell.empty()) throw ParseError(row_index, "missing value in column '" + x_names[k] + "'");
      if (!parse_number(cell, x[k])) {
        throw ParseError(row_index, "non-numeric value '" + std::string(cell) + "' in column '" + x_names[k] + "'");
      }
    }
    if (delta == 1.0) {
      const auto cell = fields[y_col];
      if (cell.empty()) throw ValidationError("row " + std::to_string(row_index) + ": outcome missing on a source row");
      double y = 0.0;
      if (!parse_number(cell, y)) throw ParseError(row_index, "non-numeric outcome '" + std::string(cell) + "'");
      src_rows.push_back(std::move(x));
      src_y.push_back(y);
    } else {
      tgt_rows.push_back(std::move(x));
    }
  }
  if (src_rows.empty()) throw ValidationError("no source rows (indicator 1)");
  if (tgt_rows.empty()) throw ValidationError("no target rows (indicator 0)");

  const auto to_matrix = [](const std::vector<std::vector<double>>& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return m;
  };
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(src_y.data(), static_cast<Eigen::Index>(src_y.size()));
  return make_two_sample(to_matrix(src_rows), y, to_matrix(tgt_rows), schema.add_intercept,
                         x_names);
}

void save_csv(const TwoSampleData& data, const std::filesystem::path& path,
              const std::string& outcome_column, const std::string& indicator_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  const Eigen::Index off = data.has_intercept ? 1 : 0;
  out << outcome_column << ',' << indicator_column;
  for (Eigen::Index j = off; j < data.d(); ++j) {
    out << ',' << (data.covariate_names.empty() ? "x" + std::to_string(j - off + 1) : data.covariate_names[j]);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_number(data.source_y(i)) << ",1";
    for (Eigen::Index j = off; j < data.d(); ++j) out << ',' << format_number(data.source_x(i, j));
    out << '\n';
  }
  for (Eigen::Index i = 0; i < data.N(); ++i) {
    out << ",0";
    for (Eigen::Index j = off; j < data.d(); ++j) out << ',' << format_number(data.target_x(i, j));
    out << '\n';
  }
}

TwoSampleData standardize(const TwoSampleData& data) {
  TwoSampleData out = data;
  const double total = static_cast<double>(data.n() + data.N());
  for (Eigen::Index j = data.has_intercept ? 1 : 0; j < data.d(); ++j) {
    const double mu = (data.source_x.col(j).sum() + data.target_x.col(j).sum()) / total;
    const double ss = (data.source_x.col(j).array() - mu).square().sum() +
                      (data.target_x.col(j).array() - mu).square().sum();
    const double sd = std::sqrt(ss / total);
    const double scale = sd > 0.0 ? sd : 1.0;
    out.source_x.col(j) = (data.source_x.col(j).array() - mu) / scale;
    out.target_x.col(j) = (data.target_x.col(j).array() - mu) / scale;
  }
  return out;
}

TwoSampleData subsample(const TwoSampleData& data, std::span<const Eigen::Index> source_rows,
                        std::span<const Eigen::Index> target_rows) {
  TwoSampleData out;
  out.has_intercept = data.has_intercept;
  out.covariate_names = data.covariate_names;
  out.source_x.resize(static_cast<Eigen::Index>(source_rows.size()), data.d());
  out.source_y.resize(static_cast<Eigen::Index>(source_rows.size()));
  out.target_x.resize(static_cast<Eigen::Index>(target_rows.size()), data.d());
  for (std::size_t i = 0; i < source_rows.size(); ++i) {
    out.source_x.row(static_cast<Eigen::Index>(i)) = data.source_x.row(source_rows[i]);
    out.source_y(static_cast<Eigen::Index>(i)) = data.source_y(source_rows[i]);
  }
  for (std::size_t i = 0; i < target_rows.size(); ++i) {
    out.target_x.row(static_cast<Eigen::Index>(i)) = data.target_x.row(target_rows[i]);
  }
  return out;
}

}  // namespace padr
