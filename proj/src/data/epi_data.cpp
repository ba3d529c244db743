#include "data/epi_data.hpp"

#include "util/errors.hpp"
#include "util/format.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mepo::data {

void validate_regions(const RegionTable& regions)
{
    if (regions.empty()) {
        fail(ErrorKind::DataIntegrity, "region table is empty");
    }
    std::set<std::string> seen;
    for (const auto& r : regions) {
        if (!seen.insert(r.id).second) {
            fail(ErrorKind::DataIntegrity, "duplicate region id '" + r.id + "'");
        }
        if (!(r.population > 0.0) || !std::isfinite(r.population)) {
            fail(ErrorKind::DataIntegrity, "region '" + r.id + "' has nonpositive population");
        }
    }
}

std::vector<double> populations(const RegionTable& regions)
{
    std::vector<double> p;
    p.reserve(regions.size());
    for (const auto& r : regions) {
        p.push_back(r.population);
    }
    return p;
}

std::size_t largest_region(const RegionTable& regions)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < regions.size(); ++i) {
        if (regions[i].population > regions[best].population) {
            best = i;
        }
    }
    return best;
}

double EpidemicState::conservation_error() const
{
    double worst = 0.0;
    for (std::size_t n = 0; n < P.size(); ++n) {
        worst = std::max(worst, std::abs(S[n] + I[n] + R[n] - P[n]) / P[n]);
    }
    return worst;
}

std::vector<EpidemicState> derive_states(const EpidemicSeries& series, const RegionTable& regions,
                                         const Date& start)
{
    const auto n_reg = series.regions();
    const auto days = series.days();
    require(n_reg == regions.size(), "derive_states: series has " + std::to_string(n_reg) + " regions, table has " +
                                         std::to_string(regions.size()));
    std::vector<EpidemicState> states(days);
    std::vector<double> cum(n_reg, 0.0);
    const auto pop = populations(regions);
    for (std::size_t t = 0; t < days; ++t) {
        auto& st = states[t];
        st.P = pop;
        st.S.resize(n_reg);
        st.I.resize(n_reg);
        st.R.resize(n_reg);
        for (std::size_t n = 0; n < n_reg; ++n) {
            cum[n] += series.daily_confirmed.at(n, t);
            const double removed = series.cum_removed.at(n, t);
            const double active = cum[n] - removed;
            if (active < 0.0) {
                fail(ErrorKind::DataIntegrity, "region '" + regions[n].id + "' on " + start.plus(long(t)).iso() +
                                                   ": cumulative removed " + fmt_double(removed) +
                                                   " exceeds cumulative confirmed " + fmt_double(cum[n]));
            }
            if (active + removed > pop[n]) {
                fail(ErrorKind::DataIntegrity, "region '" + regions[n].id + "' on " + start.plus(long(t)).iso() +
                                                   ": cumulative cases exceed population");
            }
            st.R[n] = removed;
            st.I[n] = active;
            st.S[n] = pop[n] - active - removed;
        }
    }
    return states;
}

std::vector<double> weighted_movement(std::span<const Subregion> subregions, std::size_t regions)
{
    std::vector<double> num(regions, 0.0), den(regions, 0.0);
    for (const auto& s : subregions) {
        require(s.region < regions, "weighted_movement: subregion maps to unknown region " + std::to_string(s.region));
        if (!(s.population > 0.0)) {
            fail(ErrorKind::DataIntegrity, "weighted_movement: subregion with nonpositive population");
        }
        num[s.region] += s.value * s.population;
        den[s.region] += s.population;
    }
    std::vector<double> out(regions);
    for (std::size_t r = 0; r < regions; ++r) {
        if (den[r] == 0.0) {
            fail(ErrorKind::DataIntegrity, "weighted_movement: region " + std::to_string(r) + " has no subregions");
        }
        out[r] = num[r] / den[r];
    }
    return out;
}

SampleRateTable sample_rates(const RegionTable& regions, const Array& stay_put, const Array& unique_users)
{
    const auto n_reg = regions.size();
    require(stay_put.rank() == 2 && stay_put.dim(0) == n_reg, "sample_rates: stay_put must be [N, T]");
    require(unique_users.shape() == stay_put.shape(), "sample_rates: unique_users must match stay_put shape");
    SampleRateTable t;
    t.stay_put = stay_put;
    t.unique_users = unique_users;
    t.active_population = Array(stay_put.shape());
    t.sample_rate = Array(stay_put.shape());
    for (std::size_t n = 0; n < n_reg; ++n) {
        for (std::size_t d = 0; d < stay_put.dim(1); ++d) {
            const double stay = stay_put.at(n, d);
            if (stay < 0.0 || stay > 1.0) {
                fail(ErrorKind::DataIntegrity, "stay-put ratio outside [0, 1] for region '" + regions[n].id + "'");
            }
            if (unique_users.at(n, d) < 0.0) {
                fail(ErrorKind::DataIntegrity, "negative unique-user count for region '" + regions[n].id + "'");
            }
            const double active = (1.0 - stay) * regions[n].population;
            t.active_population.at(n, d) = active;
            t.sample_rate.at(n, d) = active > 0.0 ? unique_users.at(n, d) / active : 0.0;
        }
    }
    return t;
}

Array normalize_od(const Array& raw, const SampleRateTable& rates, Anchor anchor, const Date& start)
{
    require(raw.rank() == 3 && raw.dim(1) == raw.dim(2), "normalize_od: raw flows must be [T, N, N]");
    const auto days = raw.dim(0);
    const auto n_reg = raw.dim(1);
    require(rates.sample_rate.dim(0) == n_reg && rates.sample_rate.dim(1) == days,
            "normalize_od: sample-rate table does not cover the flow stack");
    require(anchor.region < n_reg && anchor.day < days, "normalize_od: anchor outside the covered range");
    const double anchor_rate = rates.sample_rate.at(anchor.region, anchor.day);
    if (!(anchor_rate > 0.0)) {
        fail(ErrorKind::DataIntegrity, "normalize_od: zero sample rate at anchor (region " +
                                           std::to_string(anchor.region) + ", " +
                                           start.plus(long(anchor.day)).iso() + ")");
    }
    Array out(raw.shape());
    for (std::size_t d = 0; d < days; ++d) {
        for (std::size_t n = 0; n < n_reg; ++n) {
            const double rate = rates.sample_rate.at(n, d);
            for (std::size_t m = 0; m < n_reg; ++m) {
                const double v = raw.at(d, n, m);
                if (v < 0.0) {
                    fail(ErrorKind::DataIntegrity, "normalize_od: negative flow");
                }
                if (v == 0.0) {
                    continue;
                }
                if (!(rate > 0.0)) {
                    fail(ErrorKind::DataIntegrity, "normalize_od: zero sample rate with nonzero outflow at region " +
                                                       std::to_string(n) + ", " + start.plus(long(d)).iso());
                }
                out.at(d, n, m) = anchor_rate / rate * v;
            }
        }
    }
    return out;
}

namespace {

struct RunningStats
{
    double sum = 0.0;
    double sumsq = 0.0;
    std::size_t count = 0;

    void add(double v)
    {
        sum += v;
        sumsq += v * v;
        ++count;
    }
    double mean() const { return count ? sum / double(count) : 0.0; }
    double std_dev() const
    {
        if (count < 2) {
            return 1.0;
        }
        const double m = mean();
        const double var = std::max(sumsq / double(count) - m * m, 0.0);
        const double sd = std::sqrt(var);
        return sd > 1e-12 ? sd : 1.0;
    }
};

double case_ratio(double daily, double active) { return active > 0.0 ? daily / active : 0.0; }

} // namespace

Array build_features(const Dataset& ds, const std::vector<EpidemicState>& states, std::size_t stats_days,
                     const FeatureOptions& opts, FeatureStats& stats)
{
    RunningStats cs, rs;
    const auto limit = std::min(stats_days, ds.days());
    for (std::size_t n = 0; n < ds.regions_count(); ++n) {
        for (std::size_t t = 0; t < limit; ++t) {
            const double c = ds.cases.daily_confirmed.at(n, t);
            cs.add(opts.log_cases ? std::log1p(std::max(0.0, c)) : c);
            rs.add(case_ratio(ds.cases.daily_confirmed.at(n, t), states[t].I[n]));
        }
    }
    stats = FeatureStats{cs.mean(), cs.std_dev(), rs.mean(), rs.std_dev()};
    return build_features(ds, states, opts, stats);
}

Array build_features(const Dataset& ds, const std::vector<EpidemicState>& states, const FeatureOptions& opts,
                     const FeatureStats& stats)
{
    const auto n_reg = ds.regions_count();
    const auto days = ds.days();
    require(states.size() == days, "build_features: states do not cover the series");
    Array x(nc::Shape{n_reg, days, kFeatureChannels});
    for (std::size_t n = 0; n < n_reg; ++n) {
        for (std::size_t t = 0; t < days; ++t) {
            double cases = ds.cases.daily_confirmed.at(n, t);
            double ratio = case_ratio(cases, states[t].I[n]);
            if (opts.log_cases) {
                cases = std::log1p(std::max(0.0, cases));
            }
            if (opts.normalize) {
                cases = (cases - stats.cases_mean) / stats.cases_std;
                ratio = (ratio - stats.ratio_mean) / stats.ratio_std;
            }
            const auto base = (n * days + t) * kFeatureChannels;
            x[base + 0] = cases;
            x[base + 1] = ds.movement_change.at(n, t);
            x[base + 2] = ratio;
            const double dow = ds.date(t).weekday();
            x[base + 3] = opts.normalize ? dow / 6.0 : dow;
        }
    }
    return x;
}

SplitPlan plan_splits(std::size_t days, std::size_t t_in, std::size_t t_out)
{
    const auto need = t_in + t_out;
    if (days < need) {
        fail(ErrorKind::DataIntegrity, "series has " + std::to_string(days) + " days; at least " +
                                           std::to_string(need) + " are required (T_in + T_out)");
    }
    const auto b1 = days * 6 / 8;
    const auto b2 = days * 7 / 8;
    SplitPlan p;
    if (b2 - b1 < need || days - b2 < need) {
        p.train = {0, days};
        p.val = {days, days};
        p.test = {days, days};
        return p;
    }
    p.train = {0, b1};
    p.val = {b1, b2};
    p.test = {b2, days};
    return p;
}

Window make_window(const Array& features, const std::optional<Array>& flows,
                   const std::vector<EpidemicState>& states, const Array& daily_confirmed, std::size_t origin,
                   std::size_t t_in, std::size_t t_out)
{
    const auto n_reg = features.dim(0);
    const auto days = features.dim(1);
    const auto chans = features.dim(2);
    require(origin + 1 >= t_in && origin < days, "make_window: window out of range");
    Window w;
    w.origin = origin;
    const auto first = origin + 1 - t_in;
    w.features = Array(nc::Shape{n_reg, t_in, chans});
    for (std::size_t n = 0; n < n_reg; ++n) {
        std::copy_n(features.data().begin() + (n * days + first) * chans, t_in * chans,
                    w.features.data().begin() + n * t_in * chans);
    }
    if (flows) {
        const auto nn = n_reg * n_reg;
        w.flows = Array(nc::Shape{t_in, n_reg, n_reg});
        std::copy_n(flows->data().begin() + first * nn, t_in * nn, w.flows->data().begin());
    }
    w.state = states[origin];
    w.target = Array(nc::Shape{n_reg, t_out});
    w.has_target = origin + t_out < days;
    for (std::size_t n = 0; n < n_reg && w.has_target; ++n) {
        for (std::size_t j = 0; j < t_out; ++j) {
            w.target.at(n, j) = daily_confirmed.at(n, origin + 1 + j);
        }
    }
    return w;
}

WindowSets build_windows(const Array& features, const std::optional<Array>& flows,
                         const std::vector<EpidemicState>& states, const Array& daily_confirmed, std::size_t t_in,
                         std::size_t t_out)
{
    require(t_in >= 1 && t_out >= 1, "build_windows: T_in and T_out must be positive");
    const auto days = features.dim(1);
    require(states.size() == days && daily_confirmed.dim(1) == days, "build_windows: inputs cover different days");
    if (flows) {
        require(flows->dim(0) == days, "build_windows: flow stack covers " + std::to_string(flows->dim(0)) +
                                           " days, features cover " + std::to_string(days));
    }
    WindowSets sets;
    sets.plan = plan_splits(days, t_in, t_out);
    auto fill = [&](const SplitRange& r, std::vector<Window>& out) {
        if (r.end <= r.begin || r.end - r.begin < t_in + t_out) {
            return;
        }
        for (std::size_t origin = r.begin + t_in - 1; origin + t_out < r.end; ++origin) {
            out.push_back(make_window(features, flows, states, daily_confirmed, origin, t_in, t_out));
        }
    };
    fill(sets.plan.train, sets.train);
    fill(sets.plan.val, sets.val);
    fill(sets.plan.test, sets.test);
    return sets;
}

} // namespace mepo::data
