#include "mechanistic/baselines.hpp"
#include "mechanistic/sir.hpp"
#include "util/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace mepo;
using namespace mepo::mech;

namespace {

EpidemicState state(std::vector<double> S, std::vector<double> I, std::vector<double> R, std::vector<double> P)
{
    return EpidemicState{std::move(S), std::move(I), std::move(R), std::move(P)};
}

// Written out from the model definition, independent of the library code.
struct OracleStep
{
    std::vector<double> S, I, R, y;
};

OracleStep oracle_mepo(const EpidemicState& s, const std::vector<double>& beta, const std::vector<double>& gamma,
                       const nc::Array& h)
{
    const auto n = s.P.size();
    OracleStep o{s.S, s.I, s.R, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            acc += (h.at(m, i) / s.P[m] + h.at(i, m) / s.P[i]) * s.I[m];
        }
        const double y = std::min(beta[i] * acc, s.S[i]);
        const double rec = gamma[i] * s.I[i];
        o.y[i] = y;
        o.S[i] = s.S[i] - y;
        o.I[i] = s.I[i] + y - rec;
        o.R[i] = s.R[i] + rec;
    }
    return o;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace

TEST_CASE("sir_step: hand values")
{
    auto r = sir_step(state({900}, {100}, {0}, {1000}), {{0.3}, {0.1}});
    CHECK(r.state.S[0] == doctest::Approx(873.0).epsilon(1e-14));
    CHECK(r.state.I[0] == doctest::Approx(117.0).epsilon(1e-14));
    CHECK(r.state.R[0] == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(r.new_cases[0] == doctest::Approx(27.0).epsilon(1e-14));

    auto none = sir_step(state({1000}, {0}, {0}, {1000}), {{0.3}, {0.1}});
    CHECK(none.state.S[0] == 1000.0);
    CHECK(none.state.I[0] == 0.0);

    auto no_beta = sir_step(state({900}, {100}, {0}, {1000}), {{0.0}, {0.1}});
    CHECK(no_beta.state.S[0] == 900.0);
    CHECK(no_beta.state.I[0] == doctest::Approx(90.0).epsilon(1e-14));
}

TEST_CASE("metasir step: hand values")
{
    const auto h = nc::Array::from2d({{50.0}});
    auto r = metasir_step_original(state({900}, {100}, {0}, {1000}), {{0.002}, {0.1}}, h);
    CHECK(r.new_cases[0] == doctest::Approx(18.0).epsilon(1e-14));
    CHECK(r.state.I[0] == doctest::Approx(108.0).epsilon(1e-14));

    auto zero_h = metasir_step_original(state({900}, {100}, {0}, {1000}), {{0.002}, {0.1}}, nc::Array(nc::Shape{1, 1}));
    CHECK(zero_h.new_cases[0] == 0.0);
    CHECK(zero_h.state.I[0] == doctest::Approx(90.0).epsilon(1e-14));
}

TEST_CASE("mepo_step: two-region worked example")
{
    const auto s = state({990, 1000}, {10, 0}, {0, 0}, {1000, 1000});
    const auto h = nc::Array::from2d({{50, 20}, {30, 40}});
    auto r = mepo_step(s, {0.5, 0.4}, {0.1, 0.2}, h);
    const double y[2] = {0.5, 0.2}, S[2] = {989.5, 999.8}, I[2] = {9.5, 0.2}, R[2] = {1.0, 0.0};
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(r.new_cases[i] - y[i]) <= 1e-12);
        CHECK(std::abs(r.state.S[i] - S[i]) <= 1e-12);
        CHECK(std::abs(r.state.I[i] - I[i]) <= 1e-12);
        CHECK(std::abs(r.state.R[i] - R[i]) <= 1e-12);
    }

    auto quiet = mepo_step(state({1000, 1000}, {0, 0}, {0, 0}, {1000, 1000}), {0.5, 0.4}, {0.1, 0.2}, h);
    CHECK(quiet.new_cases == std::vector<double>{0.0, 0.0});
    CHECK(quiet.state.S == std::vector<double>{1000.0, 1000.0});
}

TEST_CASE("mepo_step: diagonal-only graph decouples regions")
{
    const auto s = state({800, 900, 700}, {40, 30, 20}, {10, 0, 5}, {850, 930, 725});
    const auto h = nc::Array::from2d({{60, 0, 0}, {0, 70, 0}, {0, 0, 80}});
    const std::vector<double> beta{0.3, 0.2, 0.1};
    auto r = mepo_step(s, beta, {0.1, 0.1, 0.1}, h);
    for (std::size_t i = 0; i < 3; ++i) {
        const double expected = beta[i] * 2.0 * h.at(i, i) * s.I[i] / s.P[i];
        CHECK(r.new_cases[i] == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("mepo_step: infections are capped by susceptibles")
{
    const auto s = state({5}, {500}, {0}, {505});
    ClampCounter clamp;
    auto r = mepo_step(s, {1.0}, {0.1}, nc::Array::from2d({{1000.0}}), &clamp);
    CHECK(r.new_cases[0] == 5.0);
    CHECK(r.state.S[0] == 0.0);
    CHECK(clamp.clamped == 1);
}

TEST_CASE("mepo_rollout matches iterated oracle steps")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 3, steps = 14;
    EpidemicState s0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = 1e5 * (1.0 + u(rng));
        const double inf = 100.0 + 900.0 * u(rng);
        const double rem = 500.0 * u(rng);
        s0.P.push_back(p);
        s0.I.push_back(inf);
        s0.R.push_back(rem);
        s0.S.push_back(p - inf - rem);
    }
    nc::Array h(nc::Shape{n, n}), beta(nc::Shape{n, steps}), gamma(nc::Shape{n, steps});
    for (auto& v : h.data()) {
        v = 1000.0 * u(rng);
    }
    for (std::size_t k = 0; k < beta.size(); ++k) {
        beta[k] = 5.0 * u(rng);
        gamma[k] = 0.05 + 0.2 * u(rng);
    }
    const auto y = mepo_rollout(s0, beta, gamma, h);
    REQUIRE(y.shape() == nc::Shape{n, steps});

    auto cur = s0;
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> b(n), g(n);
        for (std::size_t i = 0; i < n; ++i) {
            b[i] = beta.at(i, t);
            g[i] = gamma.at(i, t);
        }
        const auto o = oracle_mepo(cur, b, g, h);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(rel_diff(y.at(i, t), o.y[i]) <= 1e-12);
        }
        cur.S = o.S;
        cur.I = o.I;
        cur.R = o.R;
    }

    // one step equals mepo_step
    nc::Array b1(nc::Shape{n, 1}), g1(nc::Shape{n, 1});
    std::vector<double> bv(n), gv(n);
    for (std::size_t i = 0; i < n; ++i) {
        bv[i] = b1.at(i, 0) = beta.at(i, 0);
        gv[i] = g1.at(i, 0) = gamma.at(i, 0);
    }
    const auto one = mepo_rollout(s0, b1, g1, h);
    const auto step = mepo_step(s0, bv, gv, h);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(one.at(i, 0) == step.new_cases[i]);
    }
}

TEST_CASE("property: every step conserves population")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + trial % 5;
        EpidemicState s;
        std::vector<double> beta(n), gamma(n);
        nc::Array h(nc::Shape{n, n});
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::pow(10.0, 2.0 + 5.0 * u(rng));
            const double inf = p * 0.3 * u(rng);
            const double rem = (p - inf) * 0.5 * u(rng);
            s.P.push_back(p);
            s.I.push_back(inf);
            s.R.push_back(rem);
            s.S.push_back(p - inf - rem);
            beta[i] = 3.0 * u(rng);
            gamma[i] = u(rng);
        }
        for (auto& v : h.data()) {
            v = 1e4 * u(rng);
        }
        const double b0 = beta[0] * 1e-4;
        for (const auto& r : {sir_step(s, {beta, gamma}), metasir_step_original(s, {std::vector<double>(n, b0), gamma}, h),
                              mepo_step(s, beta, gamma, h)}) {
            for (std::size_t i = 0; i < n; ++i) {
                const double total = r.state.S[i] + r.state.I[i] + r.state.R[i];
                CHECK(std::abs(total - s.P[i]) <= 1e-9 * s.P[i]);
                CHECK(r.state.S[i] >= 0.0);
                CHECK(r.new_cases[i] >= 0.0);
            }
        }
    }
}

TEST_CASE("rollout with zero removal keeps R constant")
{
    const auto s0 = state({900, 800}, {50, 100}, {50, 100}, {1000, 1000});
    nc::Array beta(nc::Shape{2, 6}, 0.2), gamma(nc::Shape{2, 6}, 0.0);
    const auto h = nc::Array::from2d({{100, 10}, {10, 100}});
    auto cur = s0;
    for (std::size_t t = 0; t < 6; ++t) {
        cur = mepo_step(cur, {0.2, 0.2}, {0.0, 0.0}, h).state;
        CHECK(cur.R == s0.R);
    }
}

TEST_CASE("fit_baseline: recovers generating SIR rates")
{
    const std::size_t days = 15;
    std::vector<EpidemicState> states{state({99000, 49500}, {1000, 500}, {0, 0}, {100000, 50000})};
    nc::Array daily(nc::Shape{2, days - 1});
    for (std::size_t k = 0; k + 1 < days; ++k) {
        auto r = sir_step(states.back(), {{0.3, 0.3}, {0.1, 0.1}});
        for (std::size_t i = 0; i < 2; ++i) {
            daily.at(i, k) = r.new_cases[i];
        }
        states.push_back(r.state);
    }
    auto fit = fit_baseline(states, daily, BaselineModel::Sir, nc::Array(nc::Shape{2, 2}));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(fit.params.beta[i] - 0.3) <= 0.01);
        CHECK(std::abs(fit.params.gamma[i] - 0.1) <= 0.01);
    }

    std::vector<EpidemicState> flat(9, state({1000}, {0}, {0}, {1000}));
    auto zero = fit_baseline(flat, nc::Array(nc::Shape{1, 8}), BaselineModel::Sir, nc::Array(nc::Shape{1, 1}));
    CHECK(zero.params.beta[0] == 0.0);
    CHECK(zero.params.gamma[0] == 0.0);
}

TEST_CASE("copy baseline: weekday index arithmetic")
{
    std::vector<SirParams> history;
    for (std::size_t d = 0; d < 21; ++d) {
        history.push_back({{double(d)}, {double(d) / 100.0}});
    }
    const auto last = history.size() - 1; // day t
    auto out = copy_baseline(history, 14);
    REQUIRE(out.size() == 14);
    for (std::size_t h = 1; h <= 14; ++h) {
        const std::size_t weeks = (h + 6) / 7;
        const std::size_t source = last + h - 7 * weeks;
        CHECK(out[h - 1].beta[0] == double(source));
        CHECK(out[h - 1].gamma[0] == double(source) / 100.0);
    }
    CHECK(out[2].beta[0] == double(last + 3 - 7));

    std::vector<SirParams> constant(10, SirParams{{0.25}, {0.125}});
    for (const auto& p : copy_baseline(constant, 14)) {
        CHECK(p.beta[0] == 0.25);
        CHECK(p.gamma[0] == 0.125);
    }
}
