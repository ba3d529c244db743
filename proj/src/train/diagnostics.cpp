#include "train/diagnostics.hpp"

#include "numeric/ops.hpp"
#include "util/errors.hpp"

#include <random>

namespace mepo::train {

nc::GradCheckReport model_grad_check(const net::NetworkConfig& cfg, const ModelGradCheck& check)
{
    const auto n = check.regions;
    const auto b = check.batch;
    require(n >= 1 && b >= 1, "model_grad_check: need at least one region and one batch item");
    std::mt19937_64 rng(check.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    nc::Array g0(nc::Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            g0.at(i, j) = i == j ? 200.0 + 100.0 * unit(rng) : 10.0 + 40.0 * unit(rng);
        }
    }
    auto m = check.mode == model::GraphMode::Adaptive ? model::MepoGnn::adaptive(cfg, g0, check.seed)
                                                      : model::MepoGnn::dynamic(cfg, check.seed);
    if (check.mode == model::GraphMode::Dynamic) {
        for (auto& v : m.dynamic_graph().weights().value.data()) {
            v = unit(rng) - 0.5;
        }
    }
    m.network().set_output_bias(0.3, 0.1);

    std::vector<data::EpidemicState> states(b);
    model::Batch batch;
    batch.features = nc::Array(nc::Shape{b, n, cfg.t_in, cfg.in_channels});
    for (auto& v : batch.features.data()) {
        v = 2.0 * unit(rng) - 1.0;
    }
    if (check.mode == model::GraphMode::Dynamic) {
        batch.flows = nc::Array(nc::Shape{b, cfg.t_in, n, n});
        for (auto& v : batch.flows->data()) {
            v = 10.0 + 90.0 * unit(rng);
        }
    }
    batch.inv_pop = nc::Array(nc::Shape{n});
    for (std::size_t k = 0; k < b; ++k) {
        auto& s = states[k];
        for (std::size_t i = 0; i < n; ++i) {
            const double p = 5000.0 + 5000.0 * unit(rng);
            const double inf = 20.0 + 80.0 * unit(rng);
            const double rem = 50.0 * unit(rng);
            s.P.push_back(p);
            s.I.push_back(inf);
            s.R.push_back(rem);
            s.S.push_back(p - inf - rem);
        }
        batch.states.push_back(&s);
    }
    for (std::size_t i = 0; i < n; ++i) {
        batch.inv_pop[i] = 1.0 / states[0].P[i];
        for (std::size_t k = 1; k < b; ++k) {
            states[k].P[i] = states[0].P[i];
            states[k].S[i] = states[k].P[i] - states[k].I[i] - states[k].R[i];
        }
    }
    batch.target = nc::Array(nc::Shape{b, n, cfg.t_out}, 0.0);
    nc::Array weights(nc::Shape{b, n, cfg.t_out});
    for (auto& v : weights.data()) {
        v = 2.0 * unit(rng) - 1.0;
    }

    auto forward = [&](nc::Tape& tape) {
        auto out = m.forward(tape, batch, cfg.t_out);
        return nc::sum_all(nc::mul(out.cases, tape.constant(weights)));
    };
    return nc::grad_check(forward, m.parameters(), check.options);
}

} // namespace mepo::train
