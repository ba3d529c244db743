#pragma once

#include "data/epi_data.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace mepo::data {

/// Knobs of the synthetic study area. Rates are per day.
struct ScenarioConfig
{
    std::size_t regions = 8;
    std::size_t days = 336;
    std::string start = "2020-04-01";

    double population_min = 5e5;
    double population_max = 5e6;
    // centroid box, degrees
    double lat_min = 31.0, lat_max = 43.0;
    double lon_min = 130.0, lon_max = 142.0;

    // gravity flows
    double alpha = 1e-6;
    double decay = 1.5;
    double eps = 9.0;
    double flow_noise = 0.1; // lognormal sigma of daily flow noise

    // mobility panel
    double stay_base = 0.25;
    double sample_min = 0.02, sample_max = 0.08;

    // transmission
    double gamma_min = 0.07, gamma_max = 0.14;
    double gamma_shift = 0.1; // relative change of gamma after the midpoint
    double r_base = 1.0;
    double wave_amplitude = 0.35;
    double wave_period = 70.0;
    double movement_amplitude = 0.25;
    double movement_effect = 0.8;
    std::size_t movement_lag = 7;
    double weekday_amplitude = 0.15;
    double beta_noise = 0.1; // lognormal sigma of daily beta noise

    // last wave: beta multiplied by surge_factor from surge_start (fraction of days) to the end
    double surge_factor = 2.0;
    double surge_start = 0.875;

    double seed_infected = 500.0;      // extra active cases in region 0 on day 0
    double infected_per_capita = 1e-4; // active cases everywhere on day 0
};

void validate(const ScenarioConfig& cfg);

nlohmann::json to_json(const ScenarioConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ScenarioConfig scenario_from_json(const nlohmann::json& j);

struct Scenario
{
    Dataset dataset;    // flows_dynamic holds the normalized flows
    Array raw_flows;    // [T, N, N] as observed by the sampled panel
    Array true_flows;   // [T, N, N] flows that drove the epidemic
};

/// Deterministic per (cfg, seed).
Scenario synth_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Writes the dataset files plus flows_raw.csv.
void save_scenario(const Scenario& sc, const std::filesystem::path& dir);

} // namespace mepo::data
