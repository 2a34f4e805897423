#include "padr/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace padr {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

nlohmann::json to_json(const EstimateResult& result) {
  nlohmann::json j;
  j["method"] = to_string(result.method);
  j["point"] = result.point;
  j["se"] = result.se ? nlohmann::json(*result.se) : nlohmann::json(nullptr);
  if (result.ci) {
    j["ci"] = {result.ci->first, result.ci->second};
  } else {
    j["ci"] = nullptr;
  }
  j["diagnostics"] = result.diagnostics;
  if (!result.beta.empty()) j["beta"] = result.beta;
  return j;
}

nlohmann::json to_json(const SimulationReport& report, bool with_points) {
  const SimulationSetting& s = report.setting;
  nlohmann::json j;
  j["setting"] = to_string(s.id);
  j["outcome_model"] = to_string(family_of(s.id));
  j["n"] = s.n;
  j["N"] = s.N;
  j["reps"] = s.reps;
  j["reps_completed"] = report.reps_completed;
  j["failures"] = report.failures;
  j["mu0"] = report.truth.mu0;
  j["mu0_mc_se"] = report.truth.mc_se;

  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [m, sum] : report.methods) {
    nlohmann::json e;
    e["mean"] = sum.mean;
    e["bias"] = sum.bias;
    e["se"] = sum.se;
    e["cp"] = sum.cp ? nlohmann::json(*sum.cp) : nlohmann::json(nullptr);
    e["mean_bootstrap_se"] = sum.mean_bootstrap_se ? nlohmann::json(*sum.mean_bootstrap_se) : nlohmann::json(nullptr);
    if (with_points) e["points"] = sum.points;
    methods[to_string(m)] = e;
  }
  j["methods"] = methods;
  j["re"] = report.re ? nlohmann::json(*report.re) : nlohmann::json(nullptr);
  if (!report.pad_beta_norms.empty()) j["pad_beta_norm_median"] = median(report.pad_beta_norms);
  if (!report.oad_beta_norms.empty()) j["oad_beta_norm_median"] = median(report.oad_beta_norms);

  nlohmann::json prov;
  prov["basis_preset"] = s.basis_label;
  prov["basis"] = nlohmann::json::parse(to_json(s.basis));
  prov["seed"] = s.seed;
  prov["mu0_seed"] = s.mu0_seed;
  prov["mu0_draws"] = report.truth.draws;
  if (s.bootstrap) {
    prov["bootstrap_replicates"] = s.bootstrap->replicates;
    prov["ci_level"] = s.bootstrap->ci_level;
    prov["ci_kind"] = s.bootstrap->ci_kind == CiKind::normal ? "normal" : "percentile";
  } else {
    prov["bootstrap_replicates"] = nullptr;
  }
  j["provenance"] = prov;
  return j;
}

std::string format_table(const SimulationReport& report) {
  const SimulationSetting& s = report.setting;
  std::ostringstream out;
  out << "Setting " << to_string(s.id) << "  n=" << s.n << "  N=" << s.N << "  reps=" << report.reps_completed << "/"
      << s.reps << "  mu0=" << fixed(report.truth.mu0, 4);
  if (s.bootstrap) out << "  B=" << s.bootstrap->replicates;
  out << "\n";
  out << pad_right("Method", 8) << pad_left("Bias", 9) << pad_left("SE", 9) << pad_left("CP", 9) << "\n";
  for (const auto& [m, sum] : report.methods) {
    out << pad_right(to_string(m), 8) << pad_left(fixed(sum.bias, 3), 9) << pad_left(fixed(sum.se, 3), 9)
        << pad_left(sum.cp ? fixed(*sum.cp, 3) : "-", 9) << "\n";
  }
  if (report.re) out << "RE (DR/PAD) " << fixed(*report.re, 2) << "\n";
  if (report.failures > 0) out << "failed replicates: " << report.failures << "\n";
  return out.str();
}

std::string format_estimates(const std::vector<EstimateResult>& results) {
  std::ostringstream out;
  out << pad_right("Method", 8) << pad_left("Estimate", 12) << pad_left("SE", 10) << "  CI\n";
  for (const auto& r : results) {
    out << pad_right(to_string(r.method), 8) << pad_left(fixed(r.point, 5), 12)
        << pad_left(r.se ? fixed(*r.se, 5) : "-", 10) << "  ";
    if (r.ci) {
      out << "[" << fixed(r.ci->first, 5) << ", " << fixed(r.ci->second, 5) << "]";
    } else {
      out << "-";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace padr
