#pragma once

#include "mechanistic/sir.hpp"

#include <string>

namespace mepo::mech {

enum class BaselineModel { Sir, MetaSir };

struct FitOptions
{
    double beta_max = 2.0;
    double gamma_max = 1.0;
    double grid_step = 0.01;
    // local refinement stops once the pattern step falls below this
    double refine_tol = 1e-7;
};

struct FitResult
{
    SirParams params;
    // one-step MAE (cases + removals) per region at the returned parameters
    std::vector<double> objective;
    bool degenerate = false;
};

/// Fits per-region (beta, gamma) to a window of consecutive observed states.
/// states[k] and states[k+1] form one transition; daily_cases[n][k] is the
/// observed confirmed count on the day of states[k+1]. The objective is the
/// one-step mean absolute error of daily cases plus daily removals, minimised
/// by a grid search followed by a shrinking pattern search. h is only used by
/// MetaSir.
FitResult fit_baseline(const std::vector<EpidemicState>& states, const Array& daily_cases, BaselineModel model,
                       const Array& h, const FitOptions& opts = {});

/// Exact single-transition inversion: the parameters that reproduce the
/// observed cases and removals from states[k] to states[k+1].
SirParams fit_daily(const EpidemicState& from, const EpidemicState& to, const std::vector<double>& daily_cases,
                    BaselineModel model, const Array& h);

/// Parameters for forecast days 1..horizon copied from the same weekday of
/// the most recent week. history holds fitted daily parameters, oldest first;
/// its last entry governs the last observed day.
std::vector<SirParams> copy_baseline(const std::vector<SirParams>& history, std::size_t horizon);

/// Runs the chosen model forward with per-day parameters; returns [N, steps].
Array baseline_rollout(const EpidemicState& s0, const std::vector<SirParams>& params, BaselineModel model,
                       const Array& h);

std::string to_string(BaselineModel m);

} // namespace mepo::mech
