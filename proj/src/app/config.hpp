#pragma once

#include "data/dataset_io.hpp"
#include "data/synth.hpp"
#include "mobility/gravity.hpp"
#include "network/st_network.hpp"
#include "train/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mepo::app {

using nlohmann::json;

json to_json(const net::NetworkConfig& c);
json to_json(const train::TrainConfig& c);
json to_json(const mobility::GravityConfig& c);
json to_json(const data::FeatureOptions& c);
json to_json(const data::FeatureStats& c);
json to_json(const data::DataPaths& c);

// Readers start from defaults, overwrite present keys and reject unknown keys.
net::NetworkConfig network_from_json(const json& j);
train::TrainConfig train_from_json(const json& j);
mobility::GravityConfig gravity_from_json(const json& j);
data::FeatureOptions features_from_json(const json& j);
data::FeatureStats stats_from_json(const json& j);
data::DataPaths paths_from_json(const json& j);

/// Forward simulation from an observed state with constant rates.
struct SimulateConfig
{
    std::string model = "mepo"; // sir | metasir | mepo
    double beta = 0.3;
    double gamma = 0.1;
    std::size_t days = 28;
};

struct GradCheckConfig
{
    std::size_t regions = 3;
    std::size_t batch = 2;
    std::size_t max_entries = 0; // per parameter block; 0 checks every entry
};

json to_json(const SimulateConfig& c);
json to_json(const GradCheckConfig& c);
SimulateConfig simulate_from_json(const json& j);
GradCheckConfig grad_check_from_json(const json& j);

/// Everything a command needs. Paths are plain strings; empty means absent.
struct RunConfig
{
    std::string data_dir;    // standard file names are looked up here
    data::DataPaths paths;   // explicit paths win over data_dir
    std::string output_dir = "out";
    std::string mode = "adaptive";          // adaptive | dynamic
    std::string adaptive_init = "static_flow"; // static_flow | gravity
    net::NetworkConfig network;
    train::TrainConfig train;
    mobility::GravityConfig gravity;
    data::FeatureOptions features;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<std::string> models; // benchmark rows; empty means the standard six
    std::string checkpoint;          // forecast / evaluate input
    std::string origin;              // forecast origin date; empty means the last day
    std::string raw_flows;           // normalize-od input; empty means data_dir/flows_raw.csv
    std::string anchor_region;       // normalize-od; empty means the most populous region
    std::string anchor_date;         // normalize-od; empty means the first day
    data::ScenarioConfig scenario;
    std::uint64_t seed = 0;          // synth seed
    SimulateConfig simulate;
    GradCheckConfig grad_check;
};

json to_json(const RunConfig& c);
RunConfig run_config_from_json(const json& j);
RunConfig load_run_config(const std::string& path);

/// Paths with data_dir defaults filled in.
data::DataPaths resolve_paths(const RunConfig& c);

std::string raw_flows_path(const RunConfig& c);

/// Command-specific invariants (dynamic mode needs dynamic flows, gravity
/// initialisation needs distances, ...). Throws Config with an actionable message.
void validate(const RunConfig& c, const std::string& command);

} // namespace mepo::app
