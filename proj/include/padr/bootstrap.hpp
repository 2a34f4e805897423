#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "padr/data.hpp"

namespace padr {

enum class CiKind { normal, percentile };

CiKind parse_ci_kind(std::string_view name);

struct BootstrapConfig {
  int replicates = 500;
  double ci_level = 0.95;
  CiKind ci_kind = CiKind::normal;
  std::uint64_t seed = 0;
  double max_failure_fraction = 0.10;

  /// Throws UsageError unless replicates >= 2 and 0 < ci_level < 1.
  void validate() const;
};

struct BootstrapResult {
  double point = 0.0;  // estimate on the original data
  double se = 0.0;     // sd of successful replicates, divisor (count - 1)
  std::pair<double, double> ci{0.0, 0.0};
  std::vector<double> replicate_values;  // successful replicates, in replicate order
  int failures = 0;
};

/// Any estimator returning one value per method; it must throw padr::Error
/// when it cannot produce a result.
using MultiPipeline = std::function<std::vector<double>(const TwoSampleData&)>;
using Pipeline = std::function<double(const TwoSampleData&)>;

/// Row indices of bootstrap replicate `replicate`: n source rows and N target
/// rows, each drawn with replacement from its own sample.
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> resample_indices(Eigen::Index n, Eigen::Index N,
                                                                                 std::uint64_t seed, int replicate);

/// Two-stratum nonparametric bootstrap. All methods share the same resamples;
/// a replicate in which the pipeline throws counts as one failure for every
/// method. Replicates run in parallel; results do not depend on thread count.
///
/// Throws the pipeline's own error if it fails on the original data, and
/// SolverError when failures exceed the configured fraction or fewer than two
/// replicates succeed.
std::vector<BootstrapResult> bootstrap_many(const TwoSampleData& data, const MultiPipeline& pipeline,
                                            const BootstrapConfig& config);

BootstrapResult bootstrap(const TwoSampleData& data, const Pipeline& pipeline, const BootstrapConfig& config);

/// Interval for `point` from replicate values under `config`.
std::pair<double, double> confidence_interval(double point, double se, std::vector<double> replicates,
                                              const BootstrapConfig& config);

/// Two-sided standard normal critical value for the given coverage level.
double normal_critical_value(double level);

}  // namespace padr
