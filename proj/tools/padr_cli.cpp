#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "padr/basis.hpp"
#include "padr/bootstrap.hpp"
#include "padr/data.hpp"
#include "padr/errors.hpp"
#include "padr/estimators.hpp"
#include "padr/kernels.hpp"
#include "padr/report.hpp"
#include "padr/simulation.hpp"

using nlohmann::json;

namespace {

struct SharedArgs {
  std::uint64_t seed = 0;
  std::string out;
  int threads = -1;
  int bootstrap = 0;
  double ci_level = 0.95;
  std::string ci_kind = "normal";
};

struct EstimateArgs {
  std::string data;
  std::string outcome = "y";
  std::string indicator = "delta";
  std::vector<std::string> covariates;
  bool no_intercept = false;
  std::string outcome_model = "linear";
  std::string method = "dr,pad";
  std::string basis;
  std::string basis_preset = "sim";
  std::vector<std::string> nonbinary;
  bool standardize = false;
  double ps_tol = 1e-9;
  int ps_max_iter = 100;
  double or_tol = 1e-9;
  int or_max_iter = 100;
  double rwls_ridge = 0.0;
};

struct SimulateArgs {
  std::string setting;
  int n = 1000;
  int N = -1;
  int reps = 1000;
  std::string methods = "dr,pad";
  long mu0_draws = 10'000'000;
  bool points = false;
};

int exit_code(padr::ErrorKind kind) {
  switch (kind) {
    case padr::ErrorKind::usage: return 2;
    case padr::ErrorKind::validation: return 3;
    case padr::ErrorKind::solver: return 4;
  }
  return 1;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw padr::ValidationError("cannot open data file '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int resolve_threads(int flag) {
  if (flag >= 0) return flag;
  if (const char* env = std::getenv("PAD_DR_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 0) return t;
    } catch (const std::exception&) {
    }
    throw padr::UsageError(std::string("PAD_DR_THREADS must be a non-negative integer, got '") + env + "'");
  }
  return 0;
}

json make_manifest(int argc, char** argv, const json& config, const SharedArgs& shared, int threads) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  json m;
  m["command_line"] = cmd;
  m["config"] = config;
  m["seeds"] = {{"master", shared.seed}};
  m["version"] = PADR_VERSION;
  m["threads"] = threads;
  m["timestamp_utc"] = utc_timestamp();
  return m;
}

std::optional<padr::BootstrapConfig> bootstrap_config(const SharedArgs& a) {
  if (a.bootstrap <= 0) return std::nullopt;
  padr::BootstrapConfig cfg;
  cfg.replicates = a.bootstrap;
  cfg.ci_level = a.ci_level;
  cfg.ci_kind = padr::parse_ci_kind(a.ci_kind);
  cfg.seed = a.seed;
  cfg.validate();
  return cfg;
}

void emit(const std::string& path, const std::string& document, const std::string& table) {
  if (path.empty()) {
    std::cout << document << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw padr::UsageError("cannot write '" + path + "'");
  out << document << "\n";
  std::cout << table;
}

std::vector<int> nonbinary_indices(const padr::TwoSampleData& data, const std::vector<std::string>& names) {
  std::vector<int> idx;
  const int offset = data.has_intercept ? 1 : 0;
  if (names.empty()) {
    for (int j = 1; j <= data.raw_dim(); ++j) idx.push_back(j);
    return idx;
  }
  for (const auto& nm : names) {
    int found = 0;
    for (int j = 1; j <= data.raw_dim(); ++j) {
      if (data.covariate_names[static_cast<std::size_t>(j - 1 + offset)] == nm) found = j;
    }
    if (!found) throw padr::UsageError("--nonbinary: '" + nm + "' is not a covariate");
    idx.push_back(found);
  }
  return idx;
}

int run_estimate(const EstimateArgs& a, const SharedArgs& shared, int argc, char** argv) {
  const int threads = resolve_threads(shared.threads);
  padr::kernels::set_thread_count(threads);

  padr::CsvSchema schema{a.outcome, a.indicator, a.covariates, !a.no_intercept};
  padr::TwoSampleData data = padr::load_csv(a.data, schema);
  if (a.standardize) data = padr::standardize(data);

  padr::EstimatorOptions options;
  options.family = padr::parse_link_family(a.outcome_model);
  options.ps_solver = {a.ps_tol, a.ps_max_iter};
  options.or_solver = {a.or_tol, a.or_max_iter};
  options.rwls_ridge = a.rwls_ridge;
  std::string basis_label;
  if (!a.basis.empty()) {
    options.basis = padr::load_basis_spec(a.basis);
    basis_label = a.basis;
  } else if (a.basis_preset == "sim") {
    options.basis = padr::preset_sim(static_cast<int>(data.raw_dim()));
    basis_label = "sim";
  } else if (a.basis_preset == "k401") {
    options.basis = padr::preset_k401(static_cast<int>(data.raw_dim()), nonbinary_indices(data, a.nonbinary));
    basis_label = "k401";
  } else {
    throw padr::UsageError("unknown basis preset '" + a.basis_preset + "' (expected sim|k401)");
  }
  const auto methods = padr::parse_methods(a.method);
  const auto boot = bootstrap_config(shared);

  const padr::NuisanceFits fits = padr::fit_nuisances(data, options);
  std::vector<padr::EstimateResult> results;
  for (auto m : methods) results.push_back(padr::estimate(m, data, fits, options));

  json doc;
  if (boot) {
    const auto reps = padr::bootstrap_many(
        data, [&](const padr::TwoSampleData& d) { return padr::estimate_points(methods, d, options); }, *boot);
    for (std::size_t k = 0; k < results.size(); ++k) {
      results[k].se = reps[k].se;
      results[k].ci = reps[k].ci;
      results[k].diagnostics["bootstrap_failures"] = reps[k].failures;
    }
    std::optional<double> se_dr, se_pad;
    for (const auto& r : results) {
      if (r.method == padr::Method::dr) se_dr = r.se;
      if (r.method == padr::Method::pad) se_pad = r.se;
    }
    if (se_dr && se_pad && *se_pad > 0.0) doc["bootstrap_re"] = (*se_dr * *se_dr) / (*se_pad * *se_pad);
  }

  json config = {{"data", a.data},
                 {"outcome", a.outcome},
                 {"indicator", a.indicator},
                 {"covariates", std::vector<std::string>(data.covariate_names.begin() + (data.has_intercept ? 1 : 0),
                                                         data.covariate_names.end())},
                 {"intercept", data.has_intercept},
                 {"outcome_model", padr::to_string(options.family)},
                 {"methods", a.method},
                 {"basis", basis_label},
                 {"basis_spec", json::parse(padr::to_json(options.basis))},
                 {"standardize", a.standardize},
                 {"ps_tol", a.ps_tol},
                 {"ps_max_iter", a.ps_max_iter},
                 {"or_tol", a.or_tol},
                 {"or_max_iter", a.or_max_iter},
                 {"rwls_ridge", a.rwls_ridge},
                 {"bootstrap", shared.bootstrap},
                 {"ci_level", shared.ci_level},
                 {"ci_kind", shared.ci_kind},
                 {"n", data.n()},
                 {"N", data.N()}};
  json manifest = make_manifest(argc, argv, config, shared, threads);
  manifest["input_sha256"] = sha256_file(a.data);

  doc["results"] = json::array();
  for (const auto& r : results) doc["results"].push_back(padr::to_json(r));
  doc["manifest"] = manifest;
  emit(shared.out, doc.dump(2), padr::format_estimates(results));
  return 0;
}

int run_simulate(const SimulateArgs& a, const SharedArgs& shared, int argc, char** argv) {
  const int threads = resolve_threads(shared.threads);
  padr::kernels::set_thread_count(threads);

  padr::SimulationSetting s;
  s.id = padr::parse_setting(a.setting);
  s.n = a.n;
  s.N = a.N < 0 ? a.n : a.N;
  s.reps = a.reps;
  s.seed = shared.seed;
  s.methods = padr::parse_methods(a.methods);
  s.mu0_draws = a.mu0_draws;
  s.bootstrap = bootstrap_config(shared);
  if (s.mu0_draws < 1000) throw padr::UsageError("--mu0-draws must be at least 1000");

  const padr::SimulationReport report = padr::run_study(s);
  json doc = padr::to_json(report, a.points);
  json config = {{"setting", a.setting}, {"n", s.n},          {"N", s.N},
                 {"reps", s.reps},       {"methods", a.methods}, {"mu0_draws", s.mu0_draws},
                 {"bootstrap", shared.bootstrap}, {"ci_level", shared.ci_level}, {"ci_kind", shared.ci_kind}};
  doc["manifest"] = make_manifest(argc, argv, config, shared, threads);
  emit(shared.out, doc.dump(2), padr::format_table(report));
  return 0;
}

void add_shared(CLI::App* cmd, SharedArgs& s) {
  cmd->add_option("--seed", s.seed, "Master seed for bootstrap and simulation streams");
  cmd->add_option("--out", s.out, "Write the JSON document here (a table goes to stdout)");
  cmd->add_option("--threads", s.threads, "Worker threads, 0 = auto (overrides PAD_DR_THREADS)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--bootstrap", s.bootstrap, "Bootstrap replicates B (0 = no bootstrap)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--ci-level", s.ci_level, "Confidence level in (0, 1)");
  cmd->add_option("--ci-kind", s.ci_kind, "Interval type")->check(CLI::IsMember({"normal", "percentile"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sample target-mean estimation (PS, OR, DR, PAD, OAD) and simulation studies", "padr"};
  app.set_version_flag("--version", PADR_VERSION);
  app.require_subcommand(1);

  SharedArgs shared;
  EstimateArgs est;
  SimulateArgs sim;

  auto* estimate = app.add_subcommand("estimate", "Estimate the target outcome mean from a CSV file");
  estimate->add_option("--data", est.data, "CSV with header; indicator 1 = labeled source, 0 = target")->required();
  estimate->add_option("--outcome", est.outcome, "Outcome column")->capture_default_str();
  estimate->add_option("--indicator", est.indicator, "0/1 sample indicator column")->capture_default_str();
  estimate->add_option("--covariates", est.covariates, "Covariate columns (default: all others)")->delimiter(',');
  estimate->add_flag("--no-intercept", est.no_intercept, "Do not prepend an intercept column");
  estimate->add_option("--outcome-model", est.outcome_model, "linear|logistic|poisson")->capture_default_str();
  estimate->add_option("--method", est.method, "Comma list of ps,or,dr,pad,oad")->capture_default_str();
  estimate->add_option("--basis", est.basis, "Basis spec JSON file (overrides --basis-preset)");
  estimate->add_option("--basis-preset", est.basis_preset, "sim|k401")->capture_default_str();
  estimate->add_option("--nonbinary", est.nonbinary, "Non-binary covariates for the k401 preset")->delimiter(',');
  estimate->add_flag("--standardize", est.standardize, "Z-score covariates on the pooled sample before fitting");
  estimate->add_option("--ps-tol", est.ps_tol, "Balancing solver tolerance")->capture_default_str();
  estimate->add_option("--ps-max-iter", est.ps_max_iter, "Balancing solver iteration cap")->capture_default_str();
  estimate->add_option("--or-tol", est.or_tol, "Outcome solver tolerance")->capture_default_str();
  estimate->add_option("--or-max-iter", est.or_max_iter, "Outcome solver iteration cap")->capture_default_str();
  estimate->add_option("--rwls-ridge", est.rwls_ridge, "Ridge added to the RWLS covariance")->capture_default_str();
  add_shared(estimate, shared);

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study under one of the built-in settings");
  simulate->add_option("--setting", sim.setting, "G1|G2|G3|L1|L2|L3")->required();
  simulate->add_option("--n", sim.n, "Source sample size")->capture_default_str();
  simulate->add_option("--N", sim.N, "Target sample size (default: n)");
  simulate->add_option("--reps", sim.reps, "Replicates")->capture_default_str();
  simulate->add_option("--methods", sim.methods, "Comma list of ps,or,dr,pad,oad")->capture_default_str();
  simulate->add_option("--mu0-draws", sim.mu0_draws, "Monte Carlo draws for the true target mean")
      ->capture_default_str();
  simulate->add_flag("--points", sim.points, "Include per-replicate estimates in the JSON");
  add_shared(simulate, shared);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (estimate->parsed()) return run_estimate(est, shared, argc, argv);
    return run_simulate(sim, shared, argc, argv);
  } catch (const padr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
