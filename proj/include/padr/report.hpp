#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "padr/estimators.hpp"
#include "padr/simulation.hpp"

namespace padr {

nlohmann::json to_json(const EstimateResult& result);

/// Aggregates, per-method summaries and provenance; replicate points are
/// included only when `with_points` is set.
nlohmann::json to_json(const SimulationReport& report, bool with_points = false);

/// Bias / SE / CP per method followed by the RE line.
std::string format_table(const SimulationReport& report);

/// One line per method: point, se, ci.
std::string format_estimates(const std::vector<EstimateResult>& results);

double median(std::vector<double> values);

}  // namespace padr
