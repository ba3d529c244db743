#include "mechanistic/baselines.hpp"

#include "util/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace mepo::mech {

namespace {

// Infection pressure per unit beta for region n, given the observed state.
std::vector<double> pressure(const EpidemicState& s, BaselineModel model, const Array& h)
{
    const auto n = s.regions();
    std::vector<double> out(n);
    if (model == BaselineModel::Sir) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = s.S[i] * s.I[i] / s.P[i];
        }
        return out;
    }
    out = coupling(s, h);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] *= s.S[i];
    }
    return out;
}

struct RegionSeries
{
    std::vector<double> pressure, cases, active, removed;

    double objective(double beta, double gamma) const
    {
        double err = 0.0;
        for (std::size_t k = 0; k < cases.size(); ++k) {
            err += std::abs(beta * pressure[k] - cases[k]) + std::abs(gamma * active[k] - removed[k]);
        }
        return err / static_cast<double>(cases.size());
    }
};

} // namespace

std::string to_string(BaselineModel m) { return m == BaselineModel::Sir ? "SIR" : "MetaSIR"; }

FitResult fit_baseline(const std::vector<EpidemicState>& states, const Array& daily_cases, BaselineModel model,
                       const Array& h, const FitOptions& opts)
{
    require(states.size() >= 2, "fit_baseline: need at least two states");
    const auto transitions = states.size() - 1;
    const auto n = states[0].regions();
    require(daily_cases.rank() == 2 && daily_cases.dim(0) == n && daily_cases.dim(1) == transitions,
            "fit_baseline: daily cases must be [N, transitions]");
    if (transitions + 1 < 7) {
        fail(ErrorKind::Contract, "fit_baseline: window must cover at least 7 days of history");
    }

    std::vector<RegionSeries> series(n);
    for (std::size_t k = 0; k < transitions; ++k) {
        const auto p = pressure(states[k], model, h);
        for (std::size_t i = 0; i < n; ++i) {
            series[i].pressure.push_back(p[i]);
            series[i].cases.push_back(daily_cases.at(i, k));
            series[i].active.push_back(states[k].I[i]);
            series[i].removed.push_back(states[k + 1].R[i] - states[k].R[i]);
        }
    }

    FitResult res;
    res.params.beta.assign(n, 0.0);
    res.params.gamma.assign(n, 0.0);
    res.objective.assign(n, 0.0);

    bool all_zero = true;
    for (const auto& st : states) {
        for (double v : st.I) {
            all_zero = all_zero && v == 0.0;
        }
    }
    if (all_zero) {
        std::cerr << "warning: fit_baseline: no active infections in the window; returning beta = gamma = 0\n";
        res.degenerate = true;
        return res;
    }

    const auto nb = static_cast<std::size_t>(std::llround(opts.beta_max / opts.grid_step));
    const auto ng = static_cast<std::size_t>(std::llround(opts.gamma_max / opts.grid_step));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rs = series[i];
        double best = std::numeric_limits<double>::infinity();
        double bb = 0.0, bg = 0.0;
        for (std::size_t a = 0; a <= nb; ++a) {
            const double beta = double(a) * opts.grid_step;
            for (std::size_t c = 0; c <= ng; ++c) {
                const double gamma = double(c) * opts.grid_step;
                const double f = rs.objective(beta, gamma);
                if (f < best) {
                    best = f;
                    bb = beta;
                    bg = gamma;
                }
            }
        }
        // pattern search; beta may leave the grid box upward, gamma stays in [0, 1]
        double step = opts.grid_step / 2;
        while (step > opts.refine_tol) {
            bool improved = false;
            const double cand[4][2] = {{bb + step, bg}, {bb - step, bg}, {bb, bg + step}, {bb, bg - step}};
            for (const auto& c : cand) {
                if (c[0] < 0.0 || c[1] < 0.0 || c[1] > 1.0) {
                    continue;
                }
                const double f = rs.objective(c[0], c[1]);
                if (f < best) {
                    best = f;
                    bb = c[0];
                    bg = c[1];
                    improved = true;
                }
            }
            if (!improved) {
                step /= 2;
            }
        }
        res.params.beta[i] = bb;
        res.params.gamma[i] = bg;
        res.objective[i] = best;
    }
    return res;
}

SirParams fit_daily(const EpidemicState& from, const EpidemicState& to, const std::vector<double>& daily_cases,
                    BaselineModel model, const Array& h)
{
    const auto n = from.regions();
    require(daily_cases.size() == n, "fit_daily: one case count per region required");
    const auto p = pressure(from, model, h);
    SirParams out;
    out.beta.assign(n, 0.0);
    out.gamma.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] > 0.0) {
            out.beta[i] = std::max(0.0, daily_cases[i] / p[i]);
        }
        if (from.I[i] > 0.0) {
            out.gamma[i] = std::clamp((to.R[i] - from.R[i]) / from.I[i], 0.0, 1.0);
        }
    }
    return out;
}

std::vector<SirParams> copy_baseline(const std::vector<SirParams>& history, std::size_t horizon)
{
    if (history.size() < 7) {
        fail(ErrorKind::Contract, "copy_baseline: need at least 7 days of fitted parameters, got " +
                                      std::to_string(history.size()));
    }
    std::vector<SirParams> out;
    out.reserve(horizon);
    const auto last = history.size() - 1;
    for (std::size_t j = 1; j <= horizon; ++j) {
        const std::size_t weeks = (j + 6) / 7;
        // forecast day last + j copies day last + j - 7 * weeks
        out.push_back(history[last + j - 7 * weeks]);
    }
    return out;
}

Array baseline_rollout(const EpidemicState& s0, const std::vector<SirParams>& params, BaselineModel model,
                       const Array& h)
{
    const auto n = s0.regions();
    Array out(nc::Shape{n, params.size()});
    EpidemicState s = s0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto r = model == BaselineModel::Sir ? sir_step(s, params[t]) : metasir_step_original(s, params[t], h);
        for (std::size_t i = 0; i < n; ++i) {
            out.at(i, t) = r.new_cases[i];
        }
        s = std::move(r.state);
    }
    return out;
}

} // namespace mepo::mech
