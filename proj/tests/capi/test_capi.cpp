#include "mepognn/mepognn.h"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("mepognn_capi_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

json default_config()
{
    char* raw = nullptr;
    REQUIRE(mepo_config_default(&raw) == MEPO_OK);
    auto j = json::parse(raw);
    mepo_string_free(raw);
    return j;
}

json small_config(const fs::path& out)
{
    auto j = default_config();
    j["output_dir"] = out.string();
    j["network"]["layers"] = 2;
    j["network"]["dilations"] = {1, 2};
    j["network"]["hidden"] = 8;
    j["network"]["skip"] = 8;
    j["network"]["t_in"] = 8;
    j["network"]["t_out"] = 7;
    j["train"]["max_epochs"] = 2;
    return j;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct Cli
{
    int status;
    std::string output;
};

Cli cli(const std::string& args)
{
    const auto log = fs::temp_directory_path() / "mepognn_capi_cli.log";
    const auto cmd = std::string(MEPOGNN_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(log)};
}

void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

} // namespace

TEST_CASE("version, status names, command list")
{
    CHECK(std::string(mepo_version()) == "0.1.0");
    CHECK(std::string(mepo_status_name(MEPO_ERR_SCHEMA)) == "schema");
    std::vector<std::string> cmds;
    for (auto p = mepo_commands(); *p != nullptr; ++p) {
        cmds.emplace_back(*p);
    }
    CHECK(cmds.size() == 9);
    CHECK(cmds.front() == "generate-mobility");
    CHECK(cmds.back() == "grad-check");
}

TEST_CASE("config normalisation and error codes")
{
    auto j = default_config();
    char* raw = nullptr;
    REQUIRE(mepo_config_normalize(j.dump().c_str(), &raw) == MEPO_OK);
    CHECK(json::parse(raw) == j);
    mepo_string_free(raw);

    REQUIRE(mepo_config_normalize("{\"train\": {\"lr\": 0.01}}", &raw) == MEPO_OK);
    auto filled = json::parse(raw);
    mepo_string_free(raw);
    CHECK(filled["train"]["lr"] == 0.01);
    CHECK(filled["network"]["t_in"] == 14);

    CHECK(mepo_config_normalize("{\"bogus\": 1}", &raw) == MEPO_ERR_CONFIG);
    CHECK(std::string(mepo_last_error()).find("bogus") != std::string::npos);
    CHECK(mepo_config_normalize("{not json", &raw) == MEPO_ERR_CONFIG);
    CHECK(mepo_config_normalize(nullptr, &raw) == MEPO_ERR_ARGUMENT);
    CHECK(mepo_config_load("/nonexistent/cfg.json", &raw) == MEPO_ERR_IO);
    CHECK(mepo_run("explode", j.dump().c_str(), nullptr, nullptr) != MEPO_OK);
    CHECK(mepo_config_default(&raw) == MEPO_OK);
    CHECK(std::string(mepo_last_error()).empty());
    mepo_string_free(raw);
}

TEST_CASE("mechanistic step through the C boundary")
{
    double S[2] = {990, 1000}, I[2] = {10, 0}, R[2] = {0, 0}, y[2];
    const double P[2] = {1000, 1000}, beta[2] = {0.5, 0.4}, gamma[2] = {0.1, 0.2};
    const double h[4] = {50, 20, 30, 40};
    REQUIRE(mepo_step(2, S, I, R, P, beta, gamma, h, y) == MEPO_OK);
    CHECK(std::abs(y[0] - 0.5) < 1e-12);
    CHECK(std::abs(y[1] - 0.2) < 1e-12);
    CHECK(std::abs(S[0] - 989.5) < 1e-12);
    CHECK(std::abs(I[1] - 0.2) < 1e-12);
    CHECK(std::abs(R[0] - 1.0) < 1e-12);
    CHECK(mepo_step(2, S, I, R, P, beta, gamma, nullptr, y) == MEPO_ERR_ARGUMENT);
    const double bad_beta[2] = {-1.0, 0.1};
    CHECK(mepo_step(2, S, I, R, P, bad_beta, gamma, h, y) != MEPO_OK);
}

TEST_CASE("datasets, training and forecasting through handles")
{
    mepo_dataset* ds = nullptr;
    REQUIRE(mepo_dataset_synth("{\"regions\": 4, \"days\": 120}", 3, &ds) == MEPO_OK);
    CHECK(mepo_dataset_regions(ds) == 4);
    CHECK(mepo_dataset_days(ds) == 120);
    std::vector<double> cases(4 * 120);
    CHECK(mepo_dataset_cases(ds, cases.data(), cases.size()) == MEPO_OK);
    CHECK(mepo_dataset_cases(ds, cases.data(), 3) == MEPO_ERR_ARGUMENT);
    CHECK(cases[0] > 0.0);

    const auto dir = scratch("train");
    auto gen = small_config(dir / "data");
    gen["scenario"]["regions"] = 4;
    gen["scenario"]["days"] = 120;
    gen["seed"] = 3;
    REQUIRE(mepo_run("synth", gen.dump().c_str(), nullptr, nullptr) == MEPO_OK);

    auto cfg = small_config(dir / "model");
    cfg["data_dir"] = (dir / "data").string();
    std::vector<std::string> lines;
    REQUIRE(mepo_run("train", cfg.dump().c_str(), collect, &lines) == MEPO_OK);
    CHECK_FALSE(lines.empty());

    mepo_dataset* loaded = nullptr;
    REQUIRE(mepo_dataset_load(cfg.dump().c_str(), &loaded) == MEPO_OK);
    std::vector<double> disk(4 * 120);
    REQUIRE(mepo_dataset_cases(loaded, disk.data(), disk.size()) == MEPO_OK);
    for (std::size_t k = 0; k < disk.size(); ++k) {
        CHECK(disk[k] == doctest::Approx(cases[k]).epsilon(1e-12));
    }

    mepo_model* m = nullptr;
    REQUIRE(mepo_model_load((dir / "model" / "model.ckpt").string().c_str(), &m) == MEPO_OK);
    CHECK(mepo_model_horizon(m) == 7);
    std::vector<double> f1(28), f2(28), beta(28), gamma(28);
    REQUIRE(mepo_model_forecast(m, loaded, 100, f1.data(), beta.data(), gamma.data(), 28) == MEPO_OK);
    REQUIRE(mepo_model_forecast(m, loaded, 100, f2.data(), nullptr, nullptr, 28) == MEPO_OK);
    CHECK(f1 == f2);
    for (std::size_t k = 0; k < 28; ++k) {
        CHECK(f1[k] >= 0.0);
        CHECK(beta[k] >= 0.0);
        CHECK(gamma[k] > 0.0);
        CHECK(gamma[k] < 1.0);
    }
    CHECK(mepo_model_forecast(m, loaded, 2, f1.data(), nullptr, nullptr, 28) == MEPO_ERR_CONFIG);
    CHECK(mepo_model_load((dir / "missing.ckpt").string().c_str(), &m) == MEPO_ERR_IO);
    CHECK(m == nullptr);

    mepo_model_free(m);
    mepo_dataset_free(loaded);
    mepo_dataset_free(ds);
}

TEST_CASE("cli: synth is reproducible")
{
    const auto dir = scratch("cli_synth");
    const auto a = cli("synth --regions 5 --days 200 --seed 0 -q -o " + (dir / "a").string());
    const auto b = cli("synth --regions 5 --days 200 --seed 0 -q -o " + (dir / "b").string());
    REQUIRE(a.status == 0);
    REQUIRE(b.status == 0);
    const auto ma = json::parse(slurp(dir / "a" / "manifest.json"));
    const auto mb = json::parse(slurp(dir / "b" / "manifest.json"));
    CHECK(ma["outputs"] == mb["outputs"]);
    CHECK(ma["config"]["scenario"]["regions"] == 5);
    CHECK(ma["config"]["scenario"]["days"] == 200);
}

TEST_CASE("cli: flags override the config file")
{
    const auto dir = scratch("cli_flags");
    auto cfg = default_config();
    cfg["scenario"]["regions"] = 3;
    cfg["scenario"]["days"] = 50;
    cfg["output_dir"] = (dir / "from_file").string();
    {
        std::ofstream f(dir / "cfg.json");
        f << cfg.dump(2);
    }
    const auto r = cli("synth -q -c " + (dir / "cfg.json").string() + " --days 40 -o " + (dir / "flag").string() +
                       " --set scenario/r_base=0.9");
    REQUIRE(r.status == 0);
    const auto m = json::parse(slurp(dir / "flag" / "manifest.json"));
    CHECK(m["config"]["scenario"]["regions"] == 3);
    CHECK(m["config"]["scenario"]["days"] == 40);
    CHECK(m["config"]["scenario"]["r_base"] == 0.9);
    CHECK_FALSE(fs::exists(dir / "from_file"));
}

TEST_CASE("cli: dynamic training without dynamic flows fails clearly")
{
    const auto dir = scratch("cli_dyn");
    REQUIRE(cli("synth --regions 3 --days 60 -q -o " + (dir / "data").string()).status == 0);
    fs::remove(dir / "data" / "flows_dynamic.csv");
    const auto r = cli("train --mode dynamic --data-dir " + (dir / "data").string() + " -o " + (dir / "m").string());
    CHECK(r.status != 0);
    CHECK(r.output.find("flows_dynamic.csv") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "m" / "model.ckpt"));

    const auto bad = cli("synth --regions two");
    CHECK(bad.status != 0);
}

TEST_CASE("cli: benchmark emits the six-row table")
{
    const auto dir = scratch("cli_bench");
    REQUIRE(cli("synth --regions 3 --days 120 -q -o " + (dir / "data").string()).status == 0);
    auto cfg = small_config(dir / "bench");
    cfg["data_dir"] = (dir / "data").string();
    cfg["train"]["max_epochs"] = 1;
    {
        std::ofstream f(dir / "cfg.json");
        f << cfg.dump(2);
    }
    const auto r = cli("benchmark -q -c " + (dir / "cfg.json").string() + " --seeds 0 1");
    REQUIRE(r.status == 0);
    std::ifstream table(dir / "bench" / "benchmark.csv");
    std::vector<std::string> rows;
    for (std::string line; std::getline(table, line);) {
        rows.push_back(line.substr(0, line.find(',')));
    }
    const std::vector<std::string> expected{"SIR", "SIR(Copy)", "MetaSIR", "MetaSIR(Copy)", "MepoGNN(Adp)",
                                            "MepoGNN(Dyn)"};
    REQUIRE(rows.size() >= 7);
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(rows[rows.size() - 6 + k] == expected[k]);
    }
}
