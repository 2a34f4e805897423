#include "padr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include "padr/errors.hpp"
#include "padr/rng.hpp"

namespace padr {

namespace {

constexpr long kMaxDraws = 10'000'000;
constexpr long kTruthChunk = 1L << 16;

double expit(double a) { return link_eval(LinkFamily::logistic, a).g; }

bool correct_ps(SettingId id) {
  return id == SettingId::G1 || id == SettingId::G2 || id == SettingId::L1 || id == SettingId::L2;
}

bool gaussian(SettingId id) { return id == SettingId::G1 || id == SettingId::G2 || id == SettingId::G3; }

bool sine_outcome(SettingId id) { return id == SettingId::G2 || id == SettingId::L2; }

double linear_predictor(SettingId id, const Eigen::Vector3d& x) {
  if (sine_outcome(id)) return 0.5 * x(0) + 0.5 * x(1) + std::sin(x(1) + 0.5 * x(2));
  return 0.5 * x(0) + 0.5 * x(1) + x(2);
}

thread_local double t_last_source_fraction = 0.0;

double sample_variance(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

std::string to_string(SettingId id) { return setting_names()[static_cast<std::size_t>(id)]; }

const std::vector<std::string>& setting_names() {
  static const std::vector<std::string> names{"G1", "G2", "G3", "L1", "L2", "L3"};
  return names;
}

SettingId parse_setting(std::string_view name) {
  const auto& names = setting_names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return static_cast<SettingId>(k);
  }
  throw UsageError("unknown setting '" + std::string(name) + "' (valid: G1, G2, G3, L1, L2, L3)");
}

LinkFamily family_of(SettingId id) { return gaussian(id) ? LinkFamily::linear : LinkFamily::logistic; }

double source_probability(SettingId id, const Eigen::Vector3d& x) {
  if (correct_ps(id)) return expit(x(0) - 2.0 * x(1) + x(2));
  return expit(4.0 + x(0) + x(1) + x(2) - 1.5 * std::abs(x(0)) - 1.5 * std::abs(x(1)) - std::abs(x(2)));
}

double true_regression(SettingId id, const Eigen::Vector3d& x) {
  const double eta = linear_predictor(id, x);
  return gaussian(id) ? eta : expit(eta);
}

Eigen::Matrix3d covariate_cholesky() {
  Eigen::Matrix3d s;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) s(i, j) = std::pow(0.3, std::abs(i - j));
  }
  return s.llt().matrixL();
}

double last_source_fraction() { return t_last_source_fraction; }

TwoSampleData generate_dataset(const SimulationSetting& setting, std::uint64_t replicate_seed) {
  const Eigen::Matrix3d chol = covariate_cholesky();
  std::mt19937_64 rng(replicate_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::MatrixXd src(setting.n, 3), tgt(setting.N, 3);
  Eigen::VectorXd y(setting.n);
  int ns = 0, nt = 0;
  long draws = 0, source_draws = 0;
  while (ns < setting.n || nt < setting.N) {
    if (++draws > kMaxDraws) throw SolverError("data generation exceeded 1e7 draws");
    Eigen::Vector3d z;
    for (int k = 0; k < 3; ++k) z(k) = normal(rng);
    const Eigen::Vector3d x = chol * z;
    const bool is_source = unif(rng) < source_probability(setting.id, x);
    double outcome;
    if (gaussian(setting.id)) {
      outcome = linear_predictor(setting.id, x) + normal(rng);
    } else {
      outcome = unif(rng) < expit(linear_predictor(setting.id, x)) ? 1.0 : 0.0;
    }
    if (is_source) {
      ++source_draws;
      if (ns < setting.n) {
        src.row(ns) = x.transpose();
        y(ns++) = outcome;
      }
    } else if (nt < setting.N) {
      tgt.row(nt++) = x.transpose();
    }
  }
  t_last_source_fraction = static_cast<double>(source_draws) / static_cast<double>(draws);
  return make_two_sample(src, y, tgt, true);
}

TruthEstimate weighted_truth(const std::function<double(const Eigen::Vector3d&)>& source_prob,
                             const std::function<double(const Eigen::Vector3d&)>& regression, long draws,
                             std::uint64_t seed) {
  struct Sums {
    double w = 0, wm = 0, w2 = 0, w2m = 0, w2m2 = 0;
  };
  const Eigen::Matrix3d chol = covariate_cholesky();
  const long chunks = (draws + kTruthChunk - 1) / kTruthChunk;
  std::vector<Sums> parts(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(static)
  for (long c = 0; c < chunks; ++c) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const long len = std::min(kTruthChunk, draws - c * kTruthChunk);
    Sums s;
    for (long i = 0; i < len; ++i) {
      Eigen::Vector3d z;
      for (int k = 0; k < 3; ++k) z(k) = normal(rng);
      const Eigen::Vector3d x = chol * z;
      const double w = 1.0 - source_prob(x);
      const double m = regression(x);
      s.w += w;
      s.wm += w * m;
      s.w2 += w * w;
      s.w2m += w * w * m;
      s.w2m2 += w * w * m * m;
    }
    parts[static_cast<std::size_t>(c)] = s;
  }
  Sums t;
  for (const auto& s : parts) {
    t.w += s.w;
    t.wm += s.wm;
    t.w2 += s.w2;
    t.w2m += s.w2m;
    t.w2m2 += s.w2m2;
  }
  TruthEstimate out;
  out.draws = draws;
  out.mu0 = t.wm / t.w;
  const double resid_ss = t.w2m2 - 2.0 * out.mu0 * t.w2m + out.mu0 * out.mu0 * t.w2;
  out.mc_se = std::sqrt(std::max(0.0, resid_ss)) / t.w;
  return out;
}

TruthEstimate true_mu0(SettingId id, long draws, std::uint64_t seed) {
  return weighted_truth([id](const Eigen::Vector3d& x) { return source_probability(id, x); },
                        [id](const Eigen::Vector3d& x) { return true_regression(id, x); }, draws, seed);
}

SimulationReport run_study(const SimulationSetting& setting) {
  return run_study(setting, true_mu0(setting.id, setting.mu0_draws, setting.mu0_seed));
}

SimulationReport run_study(const SimulationSetting& setting, const TruthEstimate& truth) {
  if (setting.reps < 2) throw UsageError("a study needs at least 2 replicates");
  if (setting.n < 4 || setting.N < 1) throw UsageError("sample sizes too small for a 4-coefficient model");
  if (setting.bootstrap) setting.bootstrap->validate();

  EstimatorOptions options;
  options.family = family_of(setting.id);
  options.basis = setting.basis;
  const auto& methods = setting.methods;
  const std::size_t k = methods.size();
  const int reps = setting.reps;

  struct Replicate {
    bool ok = false;
    std::vector<double> points;
    std::vector<char> covered;
    std::vector<double> boot_se;
    double pad_beta = std::numeric_limits<double>::quiet_NaN();
    double oad_beta = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<Replicate> results(static_cast<std::size_t>(reps));
  std::exception_ptr fatal;

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < reps; ++r) {
    Replicate& rep = results[static_cast<std::size_t>(r)];
    try {
      const std::uint64_t rep_seed = derive_seed(setting.seed, static_cast<std::uint64_t>(r));
      const TwoSampleData data = generate_dataset(setting, rep_seed);
      const NuisanceFits fits = fit_nuisances(data, options);
      for (Method m : methods) {
        const EstimateResult est = estimate(m, data, fits, options);
        rep.points.push_back(est.point);
        if (m == Method::pad) rep.pad_beta = est.diagnostics.at("beta_norm");
        if (m == Method::oad) rep.oad_beta = est.diagnostics.at("beta_norm");
      }
      if (setting.bootstrap) {
        BootstrapConfig cfg = *setting.bootstrap;
        cfg.seed = derive_seed(rep_seed, 0xB007);
        const auto boot = bootstrap_many(
            data, [&](const TwoSampleData& d) { return estimate_points(methods, d, options); }, cfg);
        for (std::size_t m = 0; m < k; ++m) {
          const auto [lo, hi] = confidence_interval(rep.points[m], boot[m].se, boot[m].replicate_values, cfg);
          rep.covered.push_back(lo <= truth.mu0 && truth.mu0 <= hi);
          rep.boot_se.push_back(boot[m].se);
        }
      }
      rep.ok = true;
    } catch (const Error&) {
      rep.ok = false;
    } catch (...) {
#pragma omp critical(padr_study_fatal)
      if (!fatal) fatal = std::current_exception();
    }
  }
  if (fatal) std::rethrow_exception(fatal);

  SimulationReport report;
  report.setting = setting;
  report.truth = truth;
  for (const auto& rep : results) {
    if (rep.ok) {
      ++report.reps_completed;
    } else {
      ++report.failures;
    }
  }
  if (static_cast<double>(report.failures) > setting.max_failure_fraction * reps) {
    throw SolverError("study " + to_string(setting.id) + ": " + std::to_string(report.failures) + " of " +
                      std::to_string(reps) + " replicates failed");
  }
  if (report.reps_completed < 2) throw SolverError("study: fewer than two replicates completed");

  for (std::size_t m = 0; m < k; ++m) {
    MethodSummary s;
    double cover = 0.0, boot_se = 0.0;
    for (const auto& rep : results) {
      if (!rep.ok) continue;
      s.points.push_back(rep.points[m]);
      if (setting.bootstrap) {
        cover += rep.covered[m] ? 1.0 : 0.0;
        boot_se += rep.boot_se[m];
      }
    }
    const double count = static_cast<double>(s.points.size());
    double total = 0.0;
    for (double x : s.points) total += x;
    s.mean = total / count;
    s.bias = std::abs(s.mean - truth.mu0);
    s.se = std::sqrt(sample_variance(s.points, s.mean));
    if (setting.bootstrap) {
      s.cp = cover / count;
      s.mean_bootstrap_se = boot_se / count;
    }
    report.methods[methods[m]] = std::move(s);
  }
  for (const auto& rep : results) {
    if (!rep.ok) continue;
    if (!std::isnan(rep.pad_beta)) report.pad_beta_norms.push_back(rep.pad_beta);
    if (!std::isnan(rep.oad_beta)) report.oad_beta_norms.push_back(rep.oad_beta);
  }
  if (report.methods.count(Method::dr) && report.methods.count(Method::pad)) {
    const double v_dr = report.methods[Method::dr].se;
    const double v_pad = report.methods[Method::pad].se;
    report.re = (v_dr * v_dr) / (v_pad * v_pad);
  }
  return report;
}

}  // namespace padr
