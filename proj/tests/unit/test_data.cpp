#include "data/dataset_io.hpp"
#include "data/epi_data.hpp"
#include "data/synth.hpp"
#include "util/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace mepo;
using namespace mepo::data;

namespace {

const Date kStart = *Date::parse("2021-01-04");

EpidemicSeries series_from_cumulative(const std::vector<std::vector<double>>& cum_conf,
                                      const std::vector<std::vector<double>>& cum_rem)
{
    const auto n = cum_conf.size(), t = cum_conf[0].size();
    EpidemicSeries s{Array(nc::Shape{n, t}), Array(nc::Shape{n, t})};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < t; ++d) {
            s.daily_confirmed.at(i, d) = cum_conf[i][d] - (d == 0 ? 0.0 : cum_conf[i][d - 1]);
            s.cum_removed.at(i, d) = cum_rem[i][d];
        }
    }
    return s;
}

std::filesystem::path scratch_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("mepognn_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("derive_states: compartments from cumulative counts")
{
    const RegionTable regions{{"A", 1000.0}};
    auto s = derive_states(series_from_cumulative({{100.0}}, {{40.0}}), regions, kStart);
    REQUIRE(s.size() == 1);
    CHECK(s[0].S[0] == 900.0);
    CHECK(s[0].I[0] == 60.0);
    CHECK(s[0].R[0] == 40.0);

    auto z = derive_states(series_from_cumulative({{0.0, 0.0}}, {{0.0, 0.0}}), regions, kStart);
    for (const auto& st : z) {
        CHECK(st.S[0] == 1000.0);
        CHECK(st.I[0] == 0.0);
        CHECK(st.R[0] == 0.0);
    }

    CHECK_THROWS_AS(derive_states(series_from_cumulative({{100.0}}, {{120.0}}), regions, kStart), Error);
}

TEST_CASE("derive_states: errors name the region and date")
{
    const RegionTable regions{{"Tokyo", 1000.0}};
    try {
        derive_states(series_from_cumulative({{10.0, 100.0}}, {{0.0, 120.0}}), regions, kStart);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DataIntegrity);
        const std::string msg = e.what();
        CHECK(msg.find("Tokyo") != std::string::npos);
        CHECK(msg.find("2021-01-05") != std::string::npos);
    }
}

TEST_CASE("weighted_movement")
{
    const std::vector<Subregion> two{{0, -0.2, 100.0}, {0, -0.4, 300.0}};
    CHECK(weighted_movement(two, 1)[0] == doctest::Approx(-0.35).epsilon(1e-14));
    const std::vector<Subregion> one{{0, 0.123, 55.0}};
    CHECK(weighted_movement(one, 1)[0] == 0.123);
    const std::vector<Subregion> eq{{0, 0.1, 7.0}, {0, 0.5, 7.0}, {1, 2.0, 3.0}};
    auto w = weighted_movement(eq, 2);
    CHECK(w[0] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(w[1] == 2.0);
}

TEST_CASE("normalize_od: anchor rescaling")
{
    const RegionTable regions{{"a", 1'000'000.0}, {"b", 1'000'000.0}};
    // stay-put fraction 0.3 in a, users 70,000 -> rate 0.1; b at rate 0.05
    Array stay(nc::Shape{2, 1});
    stay.at(0, 0) = 0.3;
    stay.at(1, 0) = 0.3;
    Array users(nc::Shape{2, 1});
    users.at(0, 0) = 70'000.0;
    users.at(1, 0) = 35'000.0;
    const auto rates = sample_rates(regions, stay, users);
    CHECK(rates.sample_rate.at(0, 0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(rates.sample_rate.at(1, 0) == doctest::Approx(0.05).epsilon(1e-14));

    Array raw(nc::Shape{1, 2, 2});
    raw.at(0, 0, 1) = 1000.0;
    raw.at(0, 1, 0) = 600.0;
    auto out = normalize_od(raw, rates, Anchor{1, 0}, kStart);
    CHECK(out.at(0, 0, 1) == doctest::Approx(500.0).epsilon(1e-14));
    CHECK(out.at(0, 1, 0) == doctest::Approx(600.0).epsilon(1e-14));
    CHECK(out.at(0, 0, 0) == 0.0);

    // self-anchoring leaves the anchor origin's flows as they are
    auto self = normalize_od(raw, rates, Anchor{0, 0}, kStart);
    CHECK(self.at(0, 0, 1) == doctest::Approx(1000.0).epsilon(1e-15));
}

TEST_CASE("plan_splits and windows")
{
    const auto plan = plan_splits(539, 14, 14);
    CHECK(plan.train.begin == 0);
    CHECK(plan.train.end == 539 * 6 / 8);
    CHECK(plan.val.begin == 539 * 6 / 8);
    CHECK(plan.val.end == 539 * 7 / 8);
    CHECK(plan.test.end == 539);

    const std::size_t n = 2, days = 539, t_in = 14, t_out = 14;
    Array feats(nc::Shape{n, days, kFeatureChannels}, 0.0);
    Array daily(nc::Shape{n, days}, 1.0);
    std::vector<EpidemicState> states(days, EpidemicState{{90, 90}, {10, 10}, {0, 0}, {100, 100}});
    auto ws = build_windows(feats, std::nullopt, states, daily, t_in, t_out);
    auto inside = [&](const std::vector<Window>& w, SplitRange r) {
        for (const auto& x : w) {
            CHECK(x.origin + 1 >= r.begin + t_in);
            CHECK(x.origin + t_out < r.end);
        }
    };
    CHECK_FALSE(ws.train.empty());
    CHECK_FALSE(ws.val.empty());
    CHECK_FALSE(ws.test.empty());
    inside(ws.train, ws.plan.train);
    inside(ws.val, ws.plan.val);
    inside(ws.test, ws.plan.test);

    std::vector<EpidemicState> exact(t_in + t_out, states[0]);
    Array f2(nc::Shape{n, t_in + t_out, kFeatureChannels}, 0.0);
    Array d2(nc::Shape{n, t_in + t_out}, 1.0);
    auto one = build_windows(f2, std::nullopt, exact, d2, t_in, t_out);
    CHECK(one.train.size() == 1);
    CHECK(one.val.empty());
    CHECK(one.test.empty());

    exact.pop_back();
    Array f3(nc::Shape{n, t_in + t_out - 1, kFeatureChannels}, 0.0);
    Array d3(nc::Shape{n, t_in + t_out - 1}, 1.0);
    CHECK_THROWS_AS(build_windows(f3, std::nullopt, exact, d3, t_in, t_out), Error);
}

TEST_CASE("synth: deterministic per seed")
{
    ScenarioConfig cfg;
    cfg.regions = 4;
    cfg.days = 60;
    auto a = synth_scenario(cfg, 0);
    auto b = synth_scenario(cfg, 0);
    auto c = synth_scenario(cfg, 1);
    CHECK(a.dataset.cases.daily_confirmed == b.dataset.cases.daily_confirmed);
    CHECK(a.dataset.cases.cum_removed == b.dataset.cases.cum_removed);
    CHECK(*a.dataset.flows_dynamic == *b.dataset.flows_dynamic);
    CHECK(a.raw_flows == b.raw_flows);
    CHECK_FALSE(a.dataset.cases.daily_confirmed == c.dataset.cases.daily_confirmed);
}

TEST_CASE("synth: zero transmission produces no cases after day 0")
{
    ScenarioConfig cfg;
    cfg.regions = 3;
    cfg.days = 40;
    cfg.r_base = 0.0;
    auto sc = synth_scenario(cfg, 4);
    const auto& d = sc.dataset.cases.daily_confirmed;
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(d.at(i, 0) > 0.0);
        for (std::size_t t = 1; t < 40; ++t) {
            CHECK(d.at(i, t) == 0.0);
        }
    }
}

TEST_CASE("property: synthetic states conserve population")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ScenarioConfig cfg;
        cfg.regions = 3 + seed;
        cfg.days = 120;
        auto sc = synth_scenario(cfg, seed);
        const auto states = derive_states(sc.dataset.cases, sc.dataset.regions, sc.dataset.start);
        for (const auto& s : states) {
            CHECK(s.conservation_error() <= 1e-9);
            for (std::size_t i = 0; i < s.regions(); ++i) {
                CHECK(s.S[i] >= 0.0);
                CHECK(s.I[i] >= 0.0);
            }
        }
    }
}

TEST_CASE("dataset files round-trip")
{
    ScenarioConfig cfg;
    cfg.regions = 3;
    cfg.days = 30;
    auto sc = synth_scenario(cfg, 2);
    const auto dir = scratch_dir("roundtrip");
    save_scenario(sc, dir);
    auto back = load_dataset(DataPaths::in_directory(dir));
    CHECK(back.regions.size() == 3);
    CHECK(back.days() == 30);
    CHECK(back.start == sc.dataset.start);
    REQUIRE(back.flows_dynamic.has_value());
    const auto& a = sc.dataset.cases.daily_confirmed;
    const auto& b = back.cases.daily_confirmed;
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(b[k] == doctest::Approx(a[k]).epsilon(1e-12));
    }
}

TEST_CASE("schema errors name file, line and column")
{
    const auto dir = scratch_dir("schema");
    {
        std::ofstream f(dir / "regions.csv");
        f << "region_id,population,lat,lon\n";
        f << "a,1000,35.0,139.0\n";
        f << "b,abc,34.0,135.0\n";
    }
    try {
        read_regions((dir / "regions.csv").string());
        FAIL("expected a schema error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Schema);
        const std::string msg = e.what();
        CHECK(msg.find("regions.csv:3:2") != std::string::npos);
    }
    CHECK_THROWS_AS(read_regions((dir / "missing.csv").string()), Error);
}
