#pragma once

#include "data/epi_data.hpp"
#include "mobility/gravity.hpp"
#include "model/mepognn.hpp"
#include "train/metrics.hpp"
#include "train/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mepo::train {

enum class AdaptiveInit { StaticFlow, Gravity };

std::string to_string(AdaptiveInit i);
AdaptiveInit parse_adaptive_init(const std::string& s);

struct ModelSpec
{
    model::GraphMode mode = model::GraphMode::Adaptive;
    AdaptiveInit init = AdaptiveInit::StaticFlow;
    mobility::GravityConfig gravity;
    net::NetworkConfig network;
    data::FeatureOptions features;
};

/// Dataset with derived states, features and split windows.
struct Prepared
{
    data::Dataset ds;
    std::vector<data::EpidemicState> states;
    data::FeatureStats stats;
    nc::Array features; // [N, T, C]
    data::WindowSets windows;
};

/// Derives states and features (statistics from the training range) and
/// cuts windows. Throws Config when the spec needs inputs the dataset lacks.
Prepared prepare(data::Dataset ds, const ModelSpec& spec);

/// Same, with previously fitted feature statistics.
Prepared prepare(data::Dataset ds, const ModelSpec& spec, const data::FeatureStats& stats);

/// Windows without flow stacks and without checking graph inputs.
Prepared prepare_for_baselines(data::Dataset ds, const ModelSpec& spec);

/// Initial adaptive graph: static flows or the gravity model.
nc::Array initial_graph(const data::Dataset& ds, const ModelSpec& spec);

/// Fresh model with head biases set from rates implied by the training range.
model::MepoGnn build_model(const Prepared& p, const ModelSpec& spec, std::uint64_t seed);

struct TrainedModel
{
    model::MepoGnn model;
    ModelSpec spec;
    data::FeatureStats stats;
    data::RegionTable regions;
    nlohmann::json info; // free-form training details stored with the checkpoint
};

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const TrainedModel& tm);
TrainedModel load_model(const std::filesystem::path& path);

/// Throws Config listing every field in which the checkpoint and dataset disagree.
void check_compatible(const TrainedModel& tm, const data::Dataset& ds);

struct TrainOutcome
{
    TrainedModel trained;
    TrainResult result;
};

TrainOutcome fit(const data::Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg, const EpochHook& hook = {});

struct Forecast
{
    std::size_t origin = 0;
    nc::Array cases; // [N, T_out]
    nc::Array beta;  // [N, T_out]
    nc::Array gamma; // [N, T_out]
    nc::Array r_hat; // [N, T_out]
    nc::Array A;     // [N, N]
    nc::Array H;     // [N, N] or [T_out, N, N]
    std::optional<nc::Array> actual;
    std::size_t clamped = 0;
};

/// Forecast from the window ending on day `origin` of ds.
Forecast forecast(TrainedModel& tm, const data::Dataset& ds, std::size_t origin);

void write_forecast(const std::filesystem::path& dir, const Forecast& f, const data::Dataset& ds);

/// Learned graph as origin,destination,flow plus a log1p variant for plotting.
void write_graph(const std::filesystem::path& dir, const Forecast& f, const data::Dataset& ds);

enum class Baseline { Sir, SirCopy, MetaSir, MetaSirCopy };

/// Baseline forecasts [W, N, T_out] for the given windows; the fit window is
/// the T_in input days of each window.
nc::Array baseline_predict(const Prepared& p, Baseline b, const std::vector<data::Window>& windows);

/// Mobility matrix used by the metapopulation baselines, scaled by 1 / mean(P).
nc::Array baseline_graph(const data::Dataset& ds, const mobility::GravityConfig& gravity);

struct Evaluation
{
    MetricReport report;
    Prediction prediction;
    nc::Array target;
};

Evaluation evaluate(TrainedModel& tm, const data::Dataset& ds);

inline const std::vector<std::string> kStandardModels{"SIR",    "SIR(Copy)", "MetaSIR", "MetaSIR(Copy)",
                                                      "MepoGNN(Adp)", "MepoGNN(Dyn)"};

struct BenchmarkConfig
{
    std::vector<std::string> models = kStandardModels;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    TrainConfig train;
    ModelSpec spec; // network, features and gravity settings shared by the neural rows
};

struct BenchmarkRow
{
    std::string model;
    std::vector<MetricReport> runs; // one per seed; a single entry for seed-free models
    std::optional<std::string> error;
};

using Progress = std::function<void(const std::string& model, std::uint64_t seed)>;

std::vector<BenchmarkRow> benchmark(const data::Dataset& ds, const BenchmarkConfig& cfg, const Progress& progress = {});

/// Table-layout CSV (one row per model, RMSE/MAE/MAPE/RAE per horizon and
/// overall, cells "mean±ci") plus a long-form CSV with one value per line.
void write_benchmark(const std::filesystem::path& dir, const std::vector<BenchmarkRow>& rows);

} // namespace mepo::train
