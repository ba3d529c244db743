#pragma once

#include "data/epi_data.hpp"
#include "numeric/tape.hpp"

#include <cstddef>
#include <vector>

namespace mepo::mech {

using data::EpidemicState;
using nc::Array;

/// Counts steps in which new infections had to be capped at the remaining
/// susceptibles.
struct ClampCounter
{
    std::size_t clamped = 0;
};

/// Per-region rates; every vector has one entry per region.
struct SirParams
{
    std::vector<double> beta;
    std::vector<double> gamma;
};

struct StepResult
{
    EpidemicState state;
    std::vector<double> new_cases;
};

/// Classical SIR, unit-day forward Euler, applied independently per region.
StepResult sir_step(const EpidemicState& s, const SirParams& p, ClampCounter* clamp = nullptr);

/// Metapopulation SIR with susceptible factor: infections in n are
/// beta_n * S_n * sum_m (h_mn / P_m + h_nm / P_n) * I_m.
StepResult metasir_step_original(const EpidemicState& s, const SirParams& p, const Array& h,
                                 ClampCounter* clamp = nullptr);

/// Extended step without the susceptible factor; new_cases is the daily
/// confirmed-case prediction for the next day.
StepResult mepo_step(const EpidemicState& s, const std::vector<double>& beta, const std::vector<double>& gamma,
                     const Array& h, ClampCounter* clamp = nullptr);

/// beta, gamma [N, T_out]; h is [N, N] (reused every step) or [T_out, N, N].
/// Returns the predicted daily cases [N, T_out].
Array mepo_rollout(const EpidemicState& s0, const Array& beta, const Array& gamma, const Array& h,
                   ClampCounter* clamp = nullptr);

/// Coupling sum_m (h_mn / P_m + h_nm / P_n) * I_m for every region n.
std::vector<double> coupling(const EpidemicState& s, const Array& h);

// ---- differentiable versions -------------------------------------------

/// Batched compartments, each [B, N].
struct StateVars
{
    nc::Var S, I, R;
};

StateVars state_vars(nc::Tape& tape, const std::vector<const EpidemicState*>& batch);

struct RolloutVars
{
    nc::Var cases; // [B, N, steps]
    StateVars final_state;
    std::size_t clamped = 0;
};

/// Differentiable rollout. beta, gamma are [B, N, >= steps]. h is [N, N],
/// [B, N, N] (one graph reused every step) or [B, steps', N, N] with
/// steps' >= steps. inv_pop is the constant [N] array of 1 / P_n.
RolloutVars mepo_rollout(StateVars s0, nc::Var beta, nc::Var gamma, nc::Var h, nc::Var inv_pop, std::size_t steps);

} // namespace mepo::mech
