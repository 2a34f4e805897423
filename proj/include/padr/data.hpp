#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "padr/kernels.hpp"

namespace padr {

/// Labeled source sample (Y_i, X_i) and unlabeled target sample X_j.
///
/// Rows of `source_x` / `target_x` are the covariate vectors, one per sample.
/// When `has_intercept` is set, column 0 is the constant 1 and
/// `covariate_names[0]` is "(intercept)". Immutable once validated.
struct TwoSampleData {
  Eigen::MatrixXd source_x;  // n x d
  Eigen::VectorXd source_y;  // n
  Eigen::MatrixXd target_x;  // N x d
  bool has_intercept = true;
  std::vector<std::string> covariate_names;  // length d

  Eigen::Index n() const { return source_x.rows(); }
  Eigen::Index N() const { return target_x.rows(); }
  Eigen::Index d() const { return source_x.cols(); }

  /// Number of covariates excluding the intercept column.
  Eigen::Index raw_dim() const { return d() - (has_intercept ? 1 : 0); }

  /// Column holding the 1-based raw covariate `j` (intercept skipped).
  Eigen::Index column_of(int j) const { return (j - 1) + (has_intercept ? 1 : 0); }

  /// Throws ValidationError describing the first broken invariant.
  void validate() const;
};

/// Builds a validated dataset from raw covariates, prepending an intercept
/// column when `add_intercept` is set. `names` may be empty (x1, x2, ...).
TwoSampleData make_two_sample(const Eigen::MatrixXd& source_raw, const Eigen::VectorXd& source_y,
                              const Eigen::MatrixXd& target_raw, bool add_intercept,
                              std::vector<std::string> names = {});

struct CsvSchema {
  std::string outcome_column;
  std::string indicator_column;
  std::vector<std::string> covariate_columns;
  bool add_intercept = true;
};

/// Reads a header-first, comma-separated file. An empty covariate list selects
/// every column other than the outcome and indicator. Rows with indicator 1 become
/// source samples and rows with indicator 0 target samples; target outcome
/// cells are ignored and may be empty.
TwoSampleData load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes `data` with columns outcome, indicator, covariates (intercept
/// omitted). Values use the shortest round-trip decimal form.
void save_csv(const TwoSampleData& data, const std::filesystem::path& path,
              const std::string& outcome_column = "y", const std::string& indicator_column = "delta");

/// Copy of `data` with each non-intercept covariate centred and scaled by the
/// pooled (source + target) mean and standard deviation. Constant columns are
/// left centred but unscaled.
TwoSampleData standardize(const TwoSampleData& data);

/// Dataset built from the given source and target row indices (repeats allowed).
TwoSampleData subsample(const TwoSampleData& data, std::span<const Eigen::Index> source_rows,
                        std::span<const Eigen::Index> target_rows);

/// Empirical mean over source samples of f(x_i, y_i), where f returns a vector
/// of fixed length.
template <class F>
Eigen::VectorXd empirical_mean_source(const TwoSampleData& data, F&& f) {
  const Eigen::Index n = data.n();
  Eigen::VectorXd first = f(Eigen::VectorXd(data.source_x.row(0).transpose()), data.source_y(0));
  Eigen::MatrixXd values(n, first.size());
  values.row(0) = first.transpose();
  for (Eigen::Index i = 1; i < n; ++i) {
    values.row(i) = f(Eigen::VectorXd(data.source_x.row(i).transpose()), data.source_y(i)).transpose();
  }
  return kernels::column_mean(values);
}

/// Empirical mean over target samples of f(x_j).
template <class F>
Eigen::VectorXd empirical_mean_target(const TwoSampleData& data, F&& f) {
  const Eigen::Index m = data.N();
  Eigen::VectorXd first = f(Eigen::VectorXd(data.target_x.row(0).transpose()));
  Eigen::MatrixXd values(m, first.size());
  values.row(0) = first.transpose();
  for (Eigen::Index j = 1; j < m; ++j) {
    values.row(j) = f(Eigen::VectorXd(data.target_x.row(j).transpose())).transpose();
  }
  return kernels::column_mean(values);
}

}  // namespace padr
