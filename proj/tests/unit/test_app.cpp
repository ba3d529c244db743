#include "app/config.hpp"
#include "app/digest.hpp"
#include "app/runner.hpp"
#include "data/synth.hpp"
#include "util/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mepo;
using namespace mepo::app;

namespace {

std::filesystem::path scratch_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("mepognn_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("config round-trips through JSON")
{
    RunConfig c;
    c.mode = "dynamic";
    c.network.hidden = 16;
    c.network.dilations = {1, 1, 2};
    c.train.lr = 2.5e-4;
    c.gravity.decay = 1.3;
    c.features.log_cases = false;
    c.seeds = {7, 9};
    c.models = {"SIR", "MepoGNN(Dyn)"};
    c.scenario.regions = 11;
    c.scenario.surge_factor = 3.0;
    c.simulate.model = "sir";
    c.grad_check.max_entries = 5;
    const auto j = to_json(c);
    const auto back = run_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(run_config_from_json(nlohmann::json::parse(j.dump())).train.lr == 2.5e-4);
}

TEST_CASE("config rejects unknown keys and bad values")
{
    auto j = to_json(RunConfig{});
    j["trian"] = nlohmann::json::object();
    CHECK_THROWS_AS(run_config_from_json(j), Error);
    auto k = to_json(RunConfig{});
    k["network"]["hiden"] = 3;
    try {
        run_config_from_json(k);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        CHECK(std::string(e.what()).find("hiden") != std::string::npos);
    }
    RunConfig bad;
    bad.mode = "static";
    CHECK_THROWS_AS(validate(bad, "train"), Error);
}

TEST_CASE("train validation names missing graph inputs")
{
    const auto dir = scratch_dir("validate");
    data::ScenarioConfig sc;
    sc.regions = 3;
    sc.days = 40;
    data::save_scenario(data::synth_scenario(sc, 0), dir);
    std::filesystem::remove(dir / "flows_dynamic.csv");
    RunConfig c;
    c.data_dir = dir.string();
    c.mode = "dynamic";
    try {
        validate(c, "train");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("flows_dynamic.csv") != std::string::npos);
    }
    c.mode = "adaptive";
    CHECK_NOTHROW(validate(c, "train"));
    c.adaptive_init = "gravity";
    std::filesystem::remove(dir / "distances.csv");
    CHECK_THROWS_AS(validate(c, "train"), Error);
}

TEST_CASE("sha256 digests")
{
    CHECK(sha256_text("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_text("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const auto dir = scratch_dir("digest");
    {
        std::ofstream f(dir / "x.txt", std::ios::binary);
        f << "abc";
    }
    CHECK(sha256_file(dir / "x.txt") == sha256_text("abc"));
}

TEST_CASE("runner writes a manifest that lists every artifact")
{
    const auto dir = scratch_dir("runner");
    RunConfig c;
    c.output_dir = (dir / "gen").string();
    c.scenario.regions = 3;
    c.scenario.days = 30;
    std::ostringstream log;
    run("synth", c, log);
    std::ifstream mf(dir / "gen" / "manifest.json");
    const auto m = nlohmann::json::parse(mf);
    CHECK(m["tool"] == kToolName);
    CHECK(m["version"] == kToolVersion);
    CHECK(m["command"] == "synth");
    CHECK(m["seed"] == 0);
    CHECK(run_config_from_json(m["config"]).scenario.regions == 3);
    for (const auto& o : m["outputs"]) {
        const auto file = dir / "gen" / o["file"].get<std::string>();
        REQUIRE(std::filesystem::exists(file));
        CHECK(o["sha256"] == sha256_file(file));
    }
    CHECK_THROWS_AS(run("explode", c, log), Error);
}
