#pragma once

#include <string>

#include <json.hpp>

#include "mmrac/scenario.hpp"

namespace mmrac {

/// Scenario files are JSON documents whose keys mirror the ScenarioConfig
/// fields one-for-one; see README for the schema and defaults.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario(const std::string& path);

/// One header row plus one row per sample: t, plant and reference states,
/// tracking error, input, true and estimated parameters, weight estimates,
/// and per-model states, printed with enough digits to round-trip exactly.
void export_csv(const Trajectory& traj, const std::string& path);

/// Flat key = value text file.
void write_metrics_report(const MetricsReport& report, const std::string& path);

/// Small gnuplot script plotting tracking error and parameter estimates from
/// an exported CSV.
void write_gnuplot_script(const Trajectory& traj, const std::string& csv_path,
                          const std::string& script_path);

}  // namespace mmrac
