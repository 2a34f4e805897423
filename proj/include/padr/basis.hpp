#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "padr/data.hpp"

namespace padr {

enum class TransformKind { identity, exp_scaled, abs, square, exp_negsum };

/// One augmentation basis column. Covariate indices are 1-based and count
/// only non-intercept covariates, so j = 1 is the first real covariate.
struct Transform {
  TransformKind kind = TransformKind::identity;
  std::vector<int> js;  // exactly one index except for exp_negsum
  double c = 1.0;       // exp_scaled only: exp(c * x_j)

  bool operator==(const Transform&) const = default;
};

Transform identity(int j);
Transform exp_scaled(double c, int j);
Transform abs_of(int j);
Transform square(int j);
Transform exp_negsum(std::vector<int> js);

/// Ordered list of transforms producing the raw basis Phi.
struct BasisSpec {
  std::vector<Transform> transforms;
  Eigen::Index dim() const { return static_cast<Eigen::Index>(transforms.size()); }
};

/// `{"transforms":[{"kind":"identity","j":1},{"kind":"exp_scaled","c":-0.3,"j":2}, ...]}`
/// Throws ValidationError on malformed documents.
BasisSpec parse_basis_json(std::string_view text);
BasisSpec load_basis_spec(const std::filesystem::path& path);
std::string to_json(const BasisSpec& spec);

/// x_j, exp(x_j), |x_j| for each j; exp(-x_a - x_b) for each pair a < b; and
/// exp(-x_1 - ... - x_k) over all covariates when k >= 3.
BasisSpec preset_sim(int raw_dim);

/// x_j for every covariate, then exp(-0.3 x_j), |x_j|, x_j^2 for each listed
/// non-binary covariate.
BasisSpec preset_k401(int raw_dim, const std::vector<int>& nonbinary);

/// Phi evaluated on both samples.
struct RawBasis {
  Eigen::MatrixXd source;  // n x p
  Eigen::MatrixXd target;  // N x p
  std::vector<std::string> names;
  std::vector<std::string> warnings;  // e.g. columns constant across the pooled sample
};

/// Throws ValidationError for out-of-range or intercept indices, duplicate
/// transforms, p <= d, or non-finite basis values.
RawBasis build_basis(const BasisSpec& spec, const TwoSampleData& data);

/// Evaluates the basis without the p > d requirement (used by tests and by
/// callers that assemble their own problems).
RawBasis evaluate_basis(const BasisSpec& spec, const TwoSampleData& data);

}  // namespace padr
