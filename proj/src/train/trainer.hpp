#pragma once

#include "model/mepognn.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace mepo::train {

struct TrainConfig
{
    std::size_t batch = 32;
    double lr = 1e-3;
    double weight_decay = 1e-8;
    std::size_t max_epochs = 300;
    std::size_t patience = 20;
    std::size_t curriculum_step = 2; // epochs per added horizon
    std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// Supervised horizon for a 1-based epoch: min(ceil(epoch / step), t_out).
std::size_t curriculum_horizon(std::size_t epoch, std::size_t t_out, std::size_t step = 2);

struct EpochLog
{
    std::size_t epoch = 0;
    std::size_t horizon = 0;
    double train_mae = 0.0;
    std::optional<double> val_mae; // full-horizon MAE; absent without validation windows
    double seconds = 0.0;
};

struct TrainResult
{
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    std::optional<double> best_val;
    bool early_stopped = false;
    std::size_t clamped = 0;
};

/// Called after every epoch; returning false ends training.
using EpochHook = std::function<bool(const EpochLog&, model::MepoGnn&)>;

/// Trains in place. On return the model holds the best-validation parameters
/// (the last epoch's when there are no validation windows).
TrainResult train(model::MepoGnn& m, const std::vector<data::Window>& train_set,
                  const std::vector<data::Window>& val_set, const TrainConfig& cfg, const EpochHook& hook = {});

struct Prediction
{
    nc::Array cases; // [W, N, T_out]
    nc::Array beta;  // [W, N, T_out]
    nc::Array gamma; // [W, N, T_out]
    std::size_t clamped = 0;
};

Prediction predict(model::MepoGnn& m, const std::vector<data::Window>& windows, std::size_t batch = 32);

/// MAE of the first `steps` forecast days over all windows.
double mae(model::MepoGnn& m, const std::vector<data::Window>& windows, std::size_t steps, std::size_t batch = 32);

/// Stacks window targets into [W, N, T_out].
nc::Array stack_targets(const std::vector<data::Window>& windows);

void write_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

} // namespace mepo::train
