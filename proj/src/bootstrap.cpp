#include "padr/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "padr/errors.hpp"
#include "padr/rng.hpp"

namespace padr {

namespace {

double quantile_type7(const std::vector<double>& sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Shifted-data variance: exactly zero when every value is identical.
double sample_sd(const std::vector<double>& v) {
  const double shift = v.front();
  double s1 = 0.0;
  double s2 = 0.0;
  for (double x : v) {
    s1 += x - shift;
    s2 += (x - shift) * (x - shift);
  }
  const double m = static_cast<double>(v.size());
  return std::sqrt(std::max(0.0, (s2 - s1 * s1 / m) / (m - 1.0)));
}

}  // namespace

CiKind parse_ci_kind(std::string_view name) {
  if (name == "normal") return CiKind::normal;
  if (name == "percentile") return CiKind::percentile;
  throw UsageError("unknown CI kind '" + std::string(name) + "' (expected normal|percentile)");
}

void BootstrapConfig::validate() const {
  if (replicates < 2) throw UsageError("bootstrap needs at least 2 replicates");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw UsageError("CI level must lie strictly between 0 and 1");
}

double normal_critical_value(double level) {
  return boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + level));
}

std::pair<double, double> confidence_interval(double point, double se, std::vector<double> replicates,
                                              const BootstrapConfig& config) {
  if (config.ci_kind == CiKind::normal) {
    const double half = normal_critical_value(config.ci_level) * se;
    return {point - half, point + half};
  }
  std::sort(replicates.begin(), replicates.end());
  const double tail = 0.5 * (1.0 - config.ci_level);
  return {quantile_type7(replicates, tail), quantile_type7(replicates, 1.0 - tail)};
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> resample_indices(Eigen::Index n, Eigen::Index N,
                                                                                 std::uint64_t seed, int replicate) {
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(replicate)));
  std::uniform_int_distribution<Eigen::Index> src(0, n - 1);
  std::uniform_int_distribution<Eigen::Index> tgt(0, N - 1);
  std::vector<Eigen::Index> s(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> t(static_cast<std::size_t>(N));
  for (auto& i : s) i = src(rng);
  for (auto& i : t) i = tgt(rng);
  return {std::move(s), std::move(t)};
}

std::vector<BootstrapResult> bootstrap_many(const TwoSampleData& data, const MultiPipeline& pipeline,
                                            const BootstrapConfig& config) {
  config.validate();
  const std::vector<double> points = pipeline(data);
  const std::size_t k = points.size();
  const int B = config.replicates;

  std::vector<std::vector<double>> values(static_cast<std::size_t>(B));
  std::vector<char> ok(static_cast<std::size_t>(B), 0);
  std::exception_ptr fatal;

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < B; ++b) {
    try {
      const auto [s, t] = resample_indices(data.n(), data.N(), config.seed, b);
      const TwoSampleData rep = subsample(data, s, t);
      auto v = pipeline(rep);
      if (v.size() == k && std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
        values[static_cast<std::size_t>(b)] = std::move(v);
        ok[static_cast<std::size_t>(b)] = 1;
      }
    } catch (const Error&) {
      // counted below
    } catch (...) {
#pragma omp critical(padr_bootstrap_fatal)
      if (!fatal) fatal = std::current_exception();
    }
  }
  if (fatal) std::rethrow_exception(fatal);

  const int successes = static_cast<int>(std::count(ok.begin(), ok.end(), 1));
  const int failures = B - successes;
  if (static_cast<double>(failures) > config.max_failure_fraction * B) {
    std::ostringstream msg;
    msg << "unstable bootstrap: " << failures << " of " << B << " replicates failed";
    throw SolverError(msg.str());
  }
  if (successes < 2) throw SolverError("bootstrap: fewer than two successful replicates");

  std::vector<BootstrapResult> out(k);
  for (std::size_t m = 0; m < k; ++m) {
    BootstrapResult& r = out[m];
    r.point = points[m];
    r.failures = failures;
    for (int b = 0; b < B; ++b) {
      if (ok[static_cast<std::size_t>(b)]) r.replicate_values.push_back(values[static_cast<std::size_t>(b)][m]);
    }
    r.se = sample_sd(r.replicate_values);
    r.ci = confidence_interval(r.point, r.se, r.replicate_values, config);
  }
  return out;
}

BootstrapResult bootstrap(const TwoSampleData& data, const Pipeline& pipeline, const BootstrapConfig& config) {
  return bootstrap_many(
             data, [&](const TwoSampleData& d) { return std::vector<double>{pipeline(d)}; }, config)
      .front();
}

}  // namespace padr
