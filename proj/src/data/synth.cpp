#include "data/synth.hpp"

#include "data/dataset_io.hpp"
#include "mechanistic/sir.hpp"
#include "mobility/gravity.hpp"
#include "util/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mepo::data {

#define MEPO_SCENARIO_FIELDS(X)                                                                                      \
    X(regions)                                                                                                       \
    X(days)                                                                                                          \
    X(start)                                                                                                         \
    X(population_min)                                                                                                \
    X(population_max)                                                                                                \
    X(lat_min)                                                                                                       \
    X(lat_max)                                                                                                       \
    X(lon_min)                                                                                                       \
    X(lon_max)                                                                                                       \
    X(alpha)                                                                                                         \
    X(decay)                                                                                                         \
    X(eps)                                                                                                           \
    X(flow_noise)                                                                                                    \
    X(stay_base)                                                                                                     \
    X(sample_min)                                                                                                    \
    X(sample_max)                                                                                                    \
    X(gamma_min)                                                                                                     \
    X(gamma_max)                                                                                                     \
    X(gamma_shift)                                                                                                   \
    X(r_base)                                                                                                        \
    X(wave_amplitude)                                                                                                \
    X(wave_period)                                                                                                   \
    X(movement_amplitude)                                                                                            \
    X(movement_effect)                                                                                               \
    X(movement_lag)                                                                                                  \
    X(weekday_amplitude)                                                                                             \
    X(beta_noise)                                                                                                    \
    X(surge_factor)                                                                                                  \
    X(surge_start)                                                                                                   \
    X(seed_infected)                                                                                                 \
    X(infected_per_capita)

nlohmann::json to_json(const ScenarioConfig& cfg)
{
    nlohmann::json j;
#define X(f) j[#f] = cfg.f;
    MEPO_SCENARIO_FIELDS(X)
#undef X
    return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        fail(ErrorKind::Config, "scenario config must be a JSON object");
    }
    ScenarioConfig cfg;
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        try {
#define X(f)                                                                                                         \
    if (key == #f) {                                                                                                 \
        value.get_to(cfg.f);                                                                                         \
        known = true;                                                                                                \
    }
            MEPO_SCENARIO_FIELDS(X)
#undef X
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Config, "scenario config: bad value for '" + key + "': " + e.what());
        }
        if (!known) {
            fail(ErrorKind::Config, "scenario config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

void validate(const ScenarioConfig& cfg)
{
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, "scenario config: " + msg); };
    if (cfg.regions < 2) {
        bad("at least 2 regions are required");
    }
    if (cfg.days < 2) {
        bad("at least 2 days are required");
    }
    if (!Date::parse(cfg.start)) {
        bad("start '" + cfg.start + "' is not an ISO date");
    }
    if (!(cfg.population_min >= 1.0 && cfg.population_max >= cfg.population_min)) {
        bad("population range must satisfy 1 <= min <= max");
    }
    if (!(cfg.alpha > 0 && cfg.decay > 0 && cfg.eps > 0)) {
        bad("gravity parameters must be positive");
    }
    if (!(cfg.sample_min > 0 && cfg.sample_max >= cfg.sample_min && cfg.sample_max <= 1)) {
        bad("sample rates must satisfy 0 < min <= max <= 1");
    }
    if (!(cfg.gamma_min > 0 && cfg.gamma_max >= cfg.gamma_min && cfg.gamma_max * (1 + cfg.gamma_shift) <= 1)) {
        bad("gamma range must lie in (0, 1]");
    }
    if (!(cfg.stay_base >= 0 && cfg.stay_base < 1)) {
        bad("stay_base must lie in [0, 1)");
    }
    if (cfg.r_base < 0 || cfg.surge_factor < 0 || cfg.flow_noise < 0 || cfg.beta_noise < 0) {
        bad("rates, factors and noise levels must be nonnegative");
    }
    if (!(cfg.wave_period > 0)) {
        bad("wave_period must be positive");
    }
    if (cfg.seed_infected < 0 || cfg.infected_per_capita < 0 || cfg.infected_per_capita >= 1 ||
        cfg.seed_infected + cfg.infected_per_capita * cfg.population_min > cfg.population_min) {
        bad("initial infections must be nonnegative and below the smallest population");
    }
}

Scenario synth_scenario(const ScenarioConfig& cfg, std::uint64_t seed)
{
    validate(cfg);
    const auto n = cfg.regions;
    const auto days = cfg.days;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    Scenario sc;
    Dataset& ds = sc.dataset;
    ds.start = *Date::parse(cfg.start);

    std::vector<mobility::Centroid> centroids(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double logp = uniform(std::log(cfg.population_min), std::log(cfg.population_max));
        ds.regions.push_back({"R" + std::to_string(i), std::max(1.0, std::round(std::exp(logp)))});
        centroids[i] = {uniform(cfg.lat_min, cfg.lat_max), uniform(cfg.lon_min, cfg.lon_max)};
    }
    const auto pop = populations(ds.regions);
    ds.distances = mobility::distance_matrix(centroids);
    mobility::GravityConfig gc;
    gc.alpha = cfg.alpha;
    gc.decay = cfg.decay;
    gc.eps = cfg.eps;
    const Array base = mobility::generate(ds.regions, *ds.distances, gc);

    // mobility panel
    ds.movement_change = Array(nc::Shape{n, days});
    ds.stay_put = Array(nc::Shape{n, days});
    Array sample(nc::Shape{n, days});
    for (std::size_t i = 0; i < n; ++i) {
        const double phase = uniform(0.0, two_pi);
        const double rate = uniform(cfg.sample_min, cfg.sample_max);
        double ar = 0.0;
        for (std::size_t t = 0; t < days; ++t) {
            ar = 0.9 * ar + 0.1 * normal(rng);
            const int dow = ds.date(t).weekday();
            double m = cfg.movement_amplitude * (0.6 * std::sin(two_pi * double(t) / (1.3 * cfg.wave_period) + phase) +
                                                 0.3 * ar - (dow >= 5 ? 0.2 : 0.0));
            m = std::clamp(m, -0.9, 0.5);
            ds.movement_change.at(i, t) = m;
            ds.stay_put.at(i, t) = std::clamp(cfg.stay_base - 0.3 * m, 0.02, 0.95);
            sample.at(i, t) = std::min(1.0, rate * std::exp(0.05 * normal(rng)));
        }
    }

    // flows
    sc.true_flows = Array(nc::Shape{days, n, n});
    sc.raw_flows = Array(nc::Shape{days, n, n});
    Array nuid(nc::Shape{n, days});
    Array mean_flow(nc::Shape{n, n});
    const double fs = cfg.flow_noise;
    for (std::size_t t = 0; t < days; ++t) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                const double noise = fs > 0 ? std::exp(fs * normal(rng) - fs * fs / 2) : 1.0;
                const double f = base.at(a, b) * (1.0 + ds.movement_change.at(a, t)) * noise;
                sc.true_flows.at(t, a, b) = f;
                sc.raw_flows.at(t, a, b) = f * sample.at(a, t);
                mean_flow.at(a, b) += f / double(days);
            }
            nuid.at(a, t) = sample.at(a, t) * (1.0 - ds.stay_put.at(a, t)) * pop[a];
        }
    }
    ds.unique_users = nuid;
    ds.flows_static = mean_flow;
    const auto rates = sample_rates(ds.regions, ds.stay_put, nuid);
    ds.flows_dynamic = normalize_od(sc.raw_flows, rates, Anchor{largest_region(ds.regions), 0}, ds.start);

    // transmission parameters
    Array beta(nc::Shape{n, days}), gamma(nc::Shape{n, days});
    const auto surge_begin = static_cast<std::size_t>(std::floor(cfg.surge_start * double(days)));
    for (std::size_t i = 0; i < n; ++i) {
        const double g0 = uniform(cfg.gamma_min, cfg.gamma_max);
        const double self_coupling = 2.0 * mean_flow.at(i, i) / pop[i];
        const double b0 = g0 * cfg.r_base / self_coupling;
        const double phase = uniform(-0.5, 0.5);
        for (std::size_t t = 0; t < days; ++t) {
            const double wave = 1.0 + cfg.wave_amplitude * std::sin(two_pi * double(t) / cfg.wave_period + phase);
            const auto lagged = t >= cfg.movement_lag ? t - cfg.movement_lag : 0;
            const double mobility = std::max(0.0, 1.0 + cfg.movement_effect * ds.movement_change.at(i, lagged));
            const double weekday = 1.0 + cfg.weekday_amplitude * std::cos(two_pi * ds.date(t).weekday() / 7.0);
            const double bn = cfg.beta_noise;
            const double noise = bn > 0 ? std::exp(bn * normal(rng) - bn * bn / 2) : 1.0;
            const double surge = t >= surge_begin ? cfg.surge_factor : 1.0;
            beta.at(i, t) = b0 * wave * mobility * weekday * noise * surge;
            gamma.at(i, t) = g0 * (t >= days / 2 ? 1.0 + cfg.gamma_shift : 1.0);
        }
    }
    ds.true_beta = beta;
    ds.true_gamma = gamma;

    // epidemic rollout
    ds.cases.daily_confirmed = Array(nc::Shape{n, days});
    ds.cases.cum_removed = Array(nc::Shape{n, days});
    EpidemicState s;
    s.P = pop;
    s.I.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.I[i] = cfg.infected_per_capita * pop[i];
    }
    s.I[0] += cfg.seed_infected;
    s.R.assign(n, 0.0);
    s.S.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.S[i] = pop[i] - s.I[i];
        ds.cases.daily_confirmed.at(i, 0) = s.I[i];
    }
    Array h(nc::Shape{n, n});
    for (std::size_t t = 0; t + 1 < days; ++t) {
        std::copy_n(sc.true_flows.data().begin() + t * n * n, n * n, h.data().begin());
        const auto c = mech::coupling(s, h);
        for (std::size_t i = 0; i < n; ++i) {
            const double y = beta.at(i, t) * c[i];
            const double removed = gamma.at(i, t) * s.I[i];
            const double next_s = s.S[i] - y;
            const double next_i = s.I[i] + y - removed;
            if (next_s < 0.0 || next_i < 0.0) {
                fail(ErrorKind::Config, "synthetic scenario rejected: region " + ds.regions[i].id +
                                            " leaves the feasible compartments on " + ds.date(t + 1).iso());
            }
            ds.cases.daily_confirmed.at(i, t + 1) = y;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double y = ds.cases.daily_confirmed.at(i, t + 1);
            const double removed = gamma.at(i, t) * s.I[i];
            s.S[i] -= y;
            s.I[i] += y - removed;
            s.R[i] += removed;
            ds.cases.cum_removed.at(i, t + 1) = s.R[i];
        }
    }
    return sc;
}

void save_scenario(const Scenario& sc, const std::filesystem::path& dir)
{
    save_dataset(sc.dataset, dir);
    write_dynamic_flows(sc.raw_flows, sc.dataset.regions, sc.dataset.start, dir / "flows_raw.csv");
}

} // namespace mepo::data
